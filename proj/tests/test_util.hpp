#ifndef POCKETGEN_TEST_UTIL_HPP_
#define POCKETGEN_TEST_UTIL_HPP_

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "pocketgen/smiles.hpp"

namespace testutil {

inline std::filesystem::path data_dir() { return POCKETGEN_TEST_DATA; }

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::vector<std::string> out;
  std::ifstream f(p);
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

inline std::vector<std::string> desk_corpus() { return read_lines(data_dir() / "desk_corpus.smi"); }

// widely used atom-level SMILES regex, kept separate from the library tokenizer
inline std::vector<std::string> regex_tokens(const std::string& s) {
  static const std::regex re(
      R"((\[[^\]]+]|Br?|Cl?|N|O|S|P|F|I|b|c|n|o|s|p|\(|\)|\.|=|#|-|\+|\\|\/|:|~|@|\?|>|\*|\$|%[0-9]{2}|[0-9]))");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it)
    out.push_back(it->str());
  return out;
}

inline std::filesystem::path fresh_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pocketgen_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil

#endif  // POCKETGEN_TEST_UTIL_HPP_
