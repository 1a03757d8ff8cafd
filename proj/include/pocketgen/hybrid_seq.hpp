#ifndef POCKETGEN_HYBRID_SEQ_HPP_
#define POCKETGEN_HYBRID_SEQ_HPP_

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "pocketgen/error.hpp"
#include "pocketgen/struct_io.hpp"
#include "pocketgen/vec3.hpp"

namespace pocketgen {

using TokenId = std::int32_t;

namespace special {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kBoc = 3;
inline constexpr TokenId kEoc = 4;
inline constexpr TokenId kUnk = 5;
inline constexpr TokenId kCount = 6;
}  // namespace special

// Pocket tokens live in their own namespace so a pocket carbon and a SMILES
// carbon get different ids.
inline constexpr std::string_view kPocketPrefix = "P:";

enum class VocabKind { Special, Pocket, SmilesAtom, SmilesRing, SmilesSymbol };

class Vocab {
 public:
  Vocab();
  // Specials first, then the remaining tokens in lexicographic order.
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  TokenId id_of(std::string_view token) const;  // kUnk when unknown
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  VocabKind kind(TokenId id) const { return kinds_.at(id); }
  bool is_smiles_atom(TokenId id) const {
    return kinds_.at(id) == VocabKind::SmilesAtom;
  }

  TokenId pocket_id(std::string_view pocket_token) const;

  // One token per line in id order.
  std::string to_text() const;
  static Vocab from_text(std::string_view text);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  Vocab(std::vector<std::string> tokens, int);

  std::vector<std::string> tokens_;
  std::vector<VocabKind> kinds_;
  std::map<std::string, TokenId, std::less<>> ids_;
};

Vocab build_vocab(
    const std::vector<std::pair<ProteinPocket, LigandStruct>>& corpus);

struct Discrete {
  TokenId id;
  bool operator==(const Discrete&) const = default;
};
struct Continuous {
  Vec3 coord;
  bool operator==(const Continuous&) const = default;
};
using HybridElement = std::variant<Discrete, Continuous>;

inline bool is_discrete(const HybridElement& e) {
  return std::holds_alternative<Discrete>(e);
}
inline TokenId token_of(const HybridElement& e) { return std::get<Discrete>(e).id; }
inline const Vec3& coord_of(const HybridElement& e) {
  return std::get<Continuous>(e).coord;
}

// Pocket block (token, coord pairs), then
//   BOS <smiles tokens> EOS BOC <one coord per atom token> EOC
struct HybridSequence {
  std::vector<HybridElement> elements;
  std::size_t ligand_start = 0;  // index of BOS
  // k-th ligand coordinate -> position of the k-th atom token
  std::vector<std::size_t> atom_alignment;

  std::size_t size() const { return elements.size(); }
  bool operator==(const HybridSequence&) const = default;
};

inline constexpr double kDefaultCoordScale = 5.0;

HybridSequence encode_complex(const ProteinPocket& pocket,
                              const LigandStruct& ligand, const Vocab& vocab,
                              double scale = kDefaultCoordScale);

// Pocket block followed by BOS: the prompt used at generation time.
HybridSequence encode_pocket_prefix(const ProteinPocket& pocket,
                                    const Vocab& vocab,
                                    double scale = kDefaultCoordScale);

enum class ViolationKind {
  EmptySequence,
  PocketLayout,
  MissingBos,
  MissingEos,
  MissingBoc,
  UnexpectedContinuous,
  UnexpectedDiscrete,
  TruncatedLigandBlock,
  TrailingElements,
  CoordCountMismatch,
  LigandStartMismatch,
  AlignmentMismatch,
};

struct Violation {
  ViolationKind kind;
  std::size_t position;
  std::string detail;
};

const char* to_string(ViolationKind kind);

// Empty iff every HybridSequence invariant holds.
std::vector<Violation> validate(const HybridSequence& seq, const Vocab& vocab);

// Fills ligand_start / atom_alignment from the element layout. Used after
// deserialization and by the sampler while it builds a context.
void recompute_layout(HybridSequence& seq, const Vocab& vocab);

class HybridSeqError : public DataError {
 public:
  HybridSeqError(std::size_t position, const std::string& what)
      : DataError("hybrid record parse error at element " +
                  std::to_string(position) + ": " + what),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// One record per line, elements separated by single spaces. Discrete
// elements are written as their token text and Continuous ones as <x,y,z>
// using the shortest decimal form that reads back to the same double.
std::string serialize(const HybridSequence& seq, const Vocab& vocab);
HybridSequence deserialize(std::string_view line, const Vocab& vocab);

// Inverse of encode_complex for well-formed records: pocket atoms (without
// residue information) and the ligand, both multiplied back by `scale`.
std::pair<ProteinPocket, LigandStruct> decode_complex(const HybridSequence& seq,
                                                      const Vocab& vocab,
                                                      double scale);

}  // namespace pocketgen

#endif  // POCKETGEN_HYBRID_SEQ_HPP_
