#ifndef POCKETGEN_SMILES_HPP_
#define POCKETGEN_SMILES_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pocketgen/error.hpp"

// Atom-level SMILES handling over the subset used for ligands:
//
//   organic atoms   B C N O P S F Cl Br I
//   aromatic atoms  b c n o p s
//   bracket atoms   [symbol Hn charge], e.g. [nH] [N+] [O-] [NH3+] [Fe]
//   bonds           - = # :
//   branches        ( ... )
//   ring closures   0-9 and %NN
//
// Stereo marks (@ / \), isotopes, atom classes and '.' are rejected with
// SmilesError::Kind::UnsupportedFeature instead of being dropped.
namespace pocketgen::smiles {

enum class TokenKind { Atom, RingDigit, Symbol };

struct Token {
  std::string text;
  TokenKind kind;

  bool operator==(const Token&) const = default;
};

enum class BondOrder { Single = 1, Double = 2, Triple = 3, Aromatic = 4 };

struct Atom {
  std::string element;  // "C", "Cl", "N", ... (aromatic atoms use the capitalized symbol)
  bool aromatic = false;
  int charge = 0;
  std::optional<int> h_count;  // set only for bracket atoms

  bool operator==(const Atom&) const = default;
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::Single;

  bool operator==(const Bond&) const = default;
};

struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;

  std::size_t atom_count() const { return atoms.size(); }
  // Adjacency as (neighbor, bond index), neighbors in ascending order.
  std::vector<std::vector<std::pair<int, int>>> adjacency() const;
  // Checks the structural invariants (endpoints distinct and in range, no
  // duplicate pair, connected). Returns an empty string when valid.
  std::string check() const;
};

class SmilesError : public DataError {
 public:
  enum class Kind {
    UnbalancedBracket,
    IllegalCharacter,
    UnclosedRing,
    UnclosedBranch,
    ValenceConflict,
    UnsupportedFeature,
    Syntax,
    Empty,
  };

  SmilesError(Kind kind, std::size_t position, const std::string& detail,
              int ring = -1);

  Kind kind() const noexcept { return kind_; }
  std::size_t position() const noexcept { return position_; }
  // Ring-closure number for UnclosedRing, -1 otherwise.
  int ring() const noexcept { return ring_; }

 private:
  Kind kind_;
  std::size_t position_;
  int ring_;
};

std::vector<Token> tokenize(std::string_view smiles);
std::string detokenize(std::span<const Token> tokens);
std::size_t count_atom_tokens(std::span<const Token> tokens);
std::size_t count_atom_tokens(std::string_view smiles);

// Element symbol named by an atom token ("c" -> "C", "[nH]" -> "N",
// "[Fe+2]" -> "Fe"). Isotope prefixes are skipped.
std::string token_element(const Token& token);
bool is_element_symbol(std::string_view symbol);

MolGraph parse(std::string_view smiles);

struct WrittenSmiles {
  std::string smiles;
  // order[k] is the index in the source graph of the k-th atom token.
  std::vector<int> order;
};

// Depth-first rendering from atom 0 visiting neighbors by ascending index.
// For graphs produced by parse() the atom order is preserved.
WrittenSmiles write_smiles(const MolGraph& graph);

// Depth-first rendering from a seeded-uniform start atom with seeded-random
// neighbor order.
WrittenSmiles write_random_smiles(const MolGraph& graph, std::uint64_t seed);

// Deterministic string that is equal for isomorphic graphs. Built from an
// atom ranking obtained by iterative neighborhood refinement; ties are
// resolved by exploring every individualization and keeping the smallest
// certificate.
std::string canonical_form(const MolGraph& graph);

}  // namespace pocketgen::smiles

#endif  // POCKETGEN_SMILES_HPP_
