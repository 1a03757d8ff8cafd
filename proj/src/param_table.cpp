#include "pocketgen/param_table.hpp"

#include <stdexcept>

namespace pocketgen {

std::size_t ParamTable::add(std::string name, std::vector<int> shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  specs_.push_back({std::move(name), std::move(shape), total_, n});
  total_ += n;
  return specs_.back().offset;
}

const TensorSpec& ParamTable::find(std::string_view name) const {
  for (const auto& s : specs_)
    if (s.name == name) return s;
  throw std::out_of_range("no tensor named " + std::string(name));
}

std::span<double> ParamTable::view(std::span<double> buf,
                                   std::string_view name) const {
  const auto& s = find(name);
  return buf.subspan(s.offset, s.size);
}

std::span<const double> ParamTable::view(std::span<const double> buf,
                                         std::string_view name) const {
  const auto& s = find(name);
  return buf.subspan(s.offset, s.size);
}

}  // namespace pocketgen
