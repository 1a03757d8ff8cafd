#ifndef POCKETGEN_STRUCT_IO_HPP_
#define POCKETGEN_STRUCT_IO_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pocketgen/error.hpp"
#include "pocketgen/smiles.hpp"
#include "pocketgen/vec3.hpp"

namespace pocketgen {

struct PocketAtom {
  std::string token;  // element symbol in upper case, "CA" for alpha carbons
  std::string residue_name;
  int residue_seq = 0;
  Vec3 coord{};
};

struct ProteinPocket {
  std::vector<PocketAtom> atoms;
  std::string source_id;

  std::vector<Vec3> coords() const;
};

// A ligand as a SMILES string plus one coordinate per atom token, in token
// order. Ring-closure digits and other symbols carry no coordinate.
struct LigandStruct {
  std::string smiles;
  std::vector<Vec3> coords;
};

class StructIoError : public DataError {
 public:
  enum class Kind { MalformedLine, EmptyPocket, CountMismatch, BadNumber };

  StructIoError(Kind kind, const std::string& what, std::size_t line_no = 0,
                std::size_t expected = 0, std::size_t got = 0)
      : DataError(what),
        kind_(kind),
        line_no_(line_no),
        expected_(expected),
        got_(got) {}

  Kind kind() const noexcept { return kind_; }
  // 1-based line number for MalformedLine / BadNumber.
  std::size_t line_no() const noexcept { return line_no_; }
  std::size_t expected() const noexcept { return expected_; }
  std::size_t got() const noexcept { return got_; }

 private:
  Kind kind_;
  std::size_t line_no_;
  std::size_t expected_;
  std::size_t got_;
};

// Reads ATOM records using fixed PDB columns. Hydrogens are dropped; all
// other atoms keep file order. HETATM and every other record type are
// ignored.
ProteinPocket parse_pocket_pdb(std::string_view text,
                               std::string source_id = {});

// Two-part ligand record: a SMILES line followed by one "x y z" line per
// atom token.
LigandStruct parse_ligand_record(std::string_view text);

// Renders `graph` with smiles::write_smiles and emits coordinates in the
// written atom order. Three decimals per component, no trailing newline.
std::string write_ligand(const smiles::MolGraph& graph,
                         std::span<const Vec3> coords);

std::string format_coord(double v);

}  // namespace pocketgen

#endif  // POCKETGEN_STRUCT_IO_HPP_
