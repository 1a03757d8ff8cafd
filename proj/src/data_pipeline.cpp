#include "pocketgen/data_pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "pocketgen/rng.hpp"
#include "pocketgen/smiles.hpp"

namespace pocketgen {

namespace {

constexpr std::array<std::string_view, 11> kCommonElements = {
    "H", "B", "C", "N", "O", "F", "P", "S", "Cl", "Br", "I"};

enum SeedStream : std::uint64_t { kSmilesStream = 1, kRotationStream = 2 };

}  // namespace

bool filter_rare_elements(const LigandStruct& ligand) {
  for (const auto& tok : smiles::tokenize(ligand.smiles)) {
    if (tok.kind != smiles::TokenKind::Atom) continue;
    const std::string el = smiles::token_element(tok);
    if (std::find(kCommonElements.begin(), kCommonElements.end(), el) ==
        kCommonElements.end())
      return false;
  }
  return true;
}

Mat3 random_rotation(std::uint64_t seed) {
  Rng rng(seed);
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double two_pi = 2.0 * std::numbers::pi;
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double x = a * std::sin(two_pi * u2);
  const double y = a * std::cos(two_pi * u2);
  const double z = b * std::sin(two_pi * u3);
  const double w = b * std::cos(two_pi * u3);
  return {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
          2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
          2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
}

CenteredCoords center_and_rotate(std::span<const Vec3> pocket_coords,
                                 std::span<const Vec3> ligand_coords,
                                 std::uint64_t seed, bool rotate) {
  if (ligand_coords.empty()) throw DataError("EmptyLigand: ligand has no atoms");
  CenteredCoords out;
  out.center = centroid(ligand_coords);
  out.rotation = rotate ? random_rotation(seed) : identity3();
  out.pocket.reserve(pocket_coords.size());
  out.ligand.reserve(ligand_coords.size());
  for (const auto& p : pocket_coords)
    out.pocket.push_back(mat_vec(out.rotation, p - out.center));
  for (const auto& p : ligand_coords)
    out.ligand.push_back(mat_vec(out.rotation, p - out.center));
  return out;
}

HybridSequence augment_record(const ProteinPocket& pocket,
                              const LigandStruct& ligand, const Vocab& vocab,
                              const AugmentConfig& cfg) {
  LigandStruct lig = ligand;
  if (cfg.randomize_smiles) {
    const auto graph = smiles::parse(ligand.smiles);
    const auto written =
        smiles::write_random_smiles(graph, derive_seed(cfg.seed, kSmilesStream));
    lig.smiles = written.smiles;
    lig.coords.clear();
    for (int idx : written.order) lig.coords.push_back(ligand.coords.at(idx));
  }
  const auto pocket_coords = pocket.coords();
  auto moved = center_and_rotate(pocket_coords, lig.coords,
                                 derive_seed(cfg.seed, kRotationStream), cfg.rotate);
  ProteinPocket p = pocket;
  for (std::size_t i = 0; i < p.atoms.size(); ++i) p.atoms[i].coord = moved.pocket[i];
  lig.coords = std::move(moved.ligand);
  return encode_complex(p, lig, vocab, cfg.scale);
}

Batch make_batch(std::vector<HybridSequence> records, std::size_t max_len) {
  Batch batch;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].size() > max_len) throw BatchError(i);
    batch.padded_length = std::max(batch.padded_length, records[i].size());
  }
  for (auto& rec : records) {
    const std::size_t len = rec.size();
    std::vector<bool> loss(batch.padded_length, false);
    std::vector<Modality> modality(batch.padded_length, Modality::Discrete);
    for (std::size_t p = 0; p < len; ++p) {
      loss[p] = p >= rec.ligand_start;
      modality[p] = is_discrete(rec.elements[p]) ? Modality::Discrete
                                                 : Modality::Continuous;
    }
    rec.elements.resize(batch.padded_length, Discrete{special::kPad});
    batch.lengths.push_back(len);
    batch.loss_mask.push_back(std::move(loss));
    batch.modality_mask.push_back(std::move(modality));
    batch.sequences.push_back(std::move(rec));
  }
  return batch;
}

}  // namespace pocketgen
