#ifndef POCKETGEN_PARAM_TABLE_HPP_
#define POCKETGEN_PARAM_TABLE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pocketgen {

struct TensorSpec {
  std::string name;
  std::vector<int> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

// Named views into one flat parameter buffer. Registration order is the
// storage order, which is also the checkpoint order.
class ParamTable {
 public:
  std::size_t add(std::string name, std::vector<int> shape);
  const TensorSpec& find(std::string_view name) const;
  const std::vector<TensorSpec>& specs() const { return specs_; }
  std::size_t total() const { return total_; }

  std::span<double> view(std::span<double> buf, std::string_view name) const;
  std::span<const double> view(std::span<const double> buf,
                               std::string_view name) const;

 private:
  std::vector<TensorSpec> specs_;
  std::size_t total_ = 0;
};

}  // namespace pocketgen

#endif  // POCKETGEN_PARAM_TABLE_HPP_
