#ifndef POCKETGEN_DATA_PIPELINE_HPP_
#define POCKETGEN_DATA_PIPELINE_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pocketgen/hybrid_seq.hpp"
#include "pocketgen/struct_io.hpp"
#include "pocketgen/vec3.hpp"

namespace pocketgen {

struct AugmentConfig {
  double scale = kDefaultCoordScale;
  bool rotate = true;
  bool randomize_smiles = true;
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kDefaultMaxLen = 1024;

// True iff every ligand atom is one of H B C N O F P S Cl Br I.
bool filter_rare_elements(const LigandStruct& ligand);

// Uniform random rotation from a seeded unit quaternion.
Mat3 random_rotation(std::uint64_t seed);

struct CenteredCoords {
  std::vector<Vec3> pocket;
  std::vector<Vec3> ligand;
  Vec3 center{};
  Mat3 rotation = identity3();
};

// Subtracts the ligand centroid from every coordinate, then applies the
// same rotation to all of them (identity when `rotate` is false).
CenteredCoords center_and_rotate(std::span<const Vec3> pocket_coords,
                                 std::span<const Vec3> ligand_coords,
                                 std::uint64_t seed, bool rotate = true);

// Randomized SMILES (coordinates permuted along), centering + rotation, then
// encoding. The ligand SMILES must parse.
HybridSequence augment_record(const ProteinPocket& pocket,
                              const LigandStruct& ligand, const Vocab& vocab,
                              const AugmentConfig& cfg);

enum class Modality : std::uint8_t { Discrete, Continuous };

struct Batch {
  std::vector<HybridSequence> sequences;  // right-padded with PAD
  std::vector<std::size_t> lengths;
  std::vector<std::vector<bool>> loss_mask;
  std::vector<std::vector<Modality>> modality_mask;
  std::size_t padded_length = 0;

  std::size_t size() const { return sequences.size(); }
};

class BatchError : public DataError {
 public:
  explicit BatchError(std::size_t index)
      : DataError("record " + std::to_string(index) + " exceeds max_len"),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

Batch make_batch(std::vector<HybridSequence> records,
                 std::size_t max_len = kDefaultMaxLen);

}  // namespace pocketgen

#endif  // POCKETGEN_DATA_PIPELINE_HPP_
