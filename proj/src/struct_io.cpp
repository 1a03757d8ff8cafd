#include "pocketgen/struct_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace pocketgen {

namespace {

// Two-letter elements recognized in atom-name columns.
constexpr std::array<std::string_view, 12> kTwoLetterElements = {
    "CL", "BR", "FE", "ZN", "MG", "MN", "CU", "NA", "SE", "CO", "NI", "CA"};

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Element from the atom-name field (columns 13-16). By PDB convention
// two-letter elements start in column 13, single-letter ones in column 14.
std::string element_from_name(std::string_view name_field) {
  const std::string field = upper(name_field);
  if (field.size() >= 2 && std::isalpha(static_cast<unsigned char>(field[0])) &&
      std::isalpha(static_cast<unsigned char>(field[1]))) {
    const std::string_view two(field.data(), 2);
    if (std::find(kTwoLetterElements.begin(), kTwoLetterElements.end(), two) !=
            kTwoLetterElements.end()) {
      // "CA  " in column 13 is calcium; alpha carbons are " CA ".
      return std::string(two);
    }
  }
  for (char c : field) {
    if (std::isalpha(static_cast<unsigned char>(c))) return std::string(1, c);
  }
  return {};
}

}  // namespace

std::vector<Vec3> ProteinPocket::coords() const {
  std::vector<Vec3> out;
  out.reserve(atoms.size());
  for (const auto& a : atoms) out.push_back(a.coord);
  return out;
}

ProteinPocket parse_pocket_pdb(std::string_view text, std::string source_id) {
  ProteinPocket pocket;
  pocket.source_id = std::move(source_id);
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const std::size_t line_no = i + 1;
    if (line.size() < 4 || line.substr(0, 4) != "ATOM") continue;
    auto malformed = [&](const std::string& why) {
      return StructIoError(StructIoError::Kind::MalformedLine,
                           "malformed ATOM record at line " +
                               std::to_string(line_no) + ": " + why,
                           line_no);
    };
    if (line.size() < 54) throw malformed("record shorter than 54 columns");

    const std::string_view name_field = line.substr(12, 4);
    const std::string name(trim(name_field));
    if (name.empty()) throw malformed("empty atom name");

    PocketAtom atom;
    atom.residue_name = std::string(trim(line.substr(17, 3)));
    if (!parse_int(line.substr(22, 4), atom.residue_seq))
      throw malformed("bad residue sequence number");
    for (int k = 0; k < 3; ++k) {
      if (!parse_double(line.substr(30 + 8 * k, 8), atom.coord[k]))
        throw malformed("bad coordinate");
    }

    std::string element;
    if (line.size() >= 78) element = upper(trim(line.substr(76, 2)));
    const std::string name_upper = upper(name);
    std::string_view stripped = name_upper;
    while (!stripped.empty() && std::isdigit(static_cast<unsigned char>(stripped.front())))
      stripped.remove_prefix(1);
    const bool hydrogen =
        element == "H" || element == "D" ||
        (element.empty() && !stripped.empty() && stripped.front() == 'H');
    if (hydrogen) continue;

    if (element.empty()) element = element_from_name(name_field);
    if (element.empty()) throw malformed("cannot determine element");
    atom.token = (name_upper == "CA" && element == "C") ? "CA" : element;
    pocket.atoms.push_back(std::move(atom));
  }
  if (pocket.atoms.empty())
    throw StructIoError(StructIoError::Kind::EmptyPocket,
                        "pocket has no heavy atoms");
  return pocket;
}

LigandStruct parse_ligand_record(std::string_view text) {
  const auto lines = split_lines(text);
  LigandStruct lig;
  if (lines.empty() || trim(lines[0]).empty())
    throw StructIoError(StructIoError::Kind::BadNumber,
                        "ligand record has no SMILES line", 1);
  lig.smiles = std::string(trim(lines[0]));
  const std::size_t expected = smiles::count_atom_tokens(lig.smiles);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty()) continue;
    Vec3 c{};
    std::size_t field = 0;
    std::size_t pos = 0;
    bool ok = true;
    while (pos < line.size()) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
      if (field >= 3 || !parse_double(line.substr(pos, end - pos), c[field])) {
        ok = false;
        break;
      }
      ++field;
      pos = end;
    }
    if (!ok || field != 3)
      throw StructIoError(StructIoError::Kind::BadNumber,
                          "bad coordinate line " + std::to_string(i + 1), i + 1);
    lig.coords.push_back(c);
  }
  if (lig.coords.size() != expected)
    throw StructIoError(StructIoError::Kind::CountMismatch,
                        "expected " + std::to_string(expected) +
                            " coordinates, got " + std::to_string(lig.coords.size()),
                        0, expected, lig.coords.size());
  return lig;
}

std::string format_coord(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string write_ligand(const smiles::MolGraph& graph,
                         std::span<const Vec3> coords) {
  if (coords.size() != graph.atom_count())
    throw StructIoError(StructIoError::Kind::CountMismatch,
                        "expected " + std::to_string(graph.atom_count()) +
                            " coordinates, got " + std::to_string(coords.size()),
                        0, graph.atom_count(), coords.size());
  const auto written = smiles::write_smiles(graph);
  std::string out = written.smiles;
  for (int idx : written.order) {
    const Vec3& c = coords[idx];
    out += '\n';
    out += format_coord(c[0]) + " " + format_coord(c[1]) + " " + format_coord(c[2]);
  }
  return out;
}

}  // namespace pocketgen
