#ifndef POCKETGEN_SAMPLER_HPP_
#define POCKETGEN_SAMPLER_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pocketgen/hybrid_seq.hpp"
#include "pocketgen/model.hpp"
#include "pocketgen/rng.hpp"
#include "pocketgen/struct_io.hpp"

namespace pocketgen {

// temperature 0 or top_k 1 decode greedily; top_k 0 disables the filter.
struct SampleConfig {
  double temperature = 1.0;
  int top_k = 0;
  int max_smiles_tokens = 128;
  std::uint64_t seed = 0;
  void validate() const;
};

// True for ids the token sampler may emit: EOS and SMILES tokens.
std::vector<bool> sampling_mask(const Vocab& vocab);

struct TokenSample {
  std::vector<TokenId> tokens;  // ends with EOS
  double log_prob = 0.0;
  // No EOS within max_smiles_tokens; EOS was appended by force.
  bool length_exceeded = false;
};

// Extends `context` (a pocket block + BOS) token by token until EOS.
// log_prob sums the temperature-1 log-softmax of every appended token.
TokenSample sample_tokens(std::vector<HybridElement>& context, const Backbone& backbone,
                          const Vocab& vocab, const SampleConfig& cfg, Rng& rng);

struct GeneratedLigand {
  std::string smiles;
  std::vector<Vec3> coords;  // Angstrom, input frame
  double token_log_prob = 0.0;
  int diffusion_calls = 0;
  bool valid = false;  // smiles parses
  bool length_exceeded = false;
  HybridSequence context;  // full generated record, scaled and centered
};

// Samples from an already encoded prefix. Coordinates are multiplied by
// the model's coord_scale and shifted by `center`.
GeneratedLigand sample_from_prefix(const HybridSequence& prefix, const Model& model,
                                   const Vocab& vocab, const SampleConfig& cfg, Rng& rng,
                                   const Vec3& center = {0.0, 0.0, 0.0});

// Centers the pocket on its own centroid, encodes it, samples, and maps the
// coordinates back into the pocket's frame.
GeneratedLigand sample_ligand(const ProteinPocket& pocket, const Model& model,
                              const Vocab& vocab, const SampleConfig& cfg, Rng& rng);

// Sample i uses Rng(derive_seed(cfg.seed, i)).
std::vector<GeneratedLigand> batch_generate(const ProteinPocket& pocket, int n,
                                            const Model& model, const Vocab& vocab,
                                            const SampleConfig& cfg);

// Retries with fresh derived seeds until a valid ligand appears or
// `attempts` are spent; returns the last attempt in that case.
GeneratedLigand sample_with_retry(const ProteinPocket& pocket, const Model& model,
                                  const Vocab& vocab, const SampleConfig& cfg,
                                  int attempts);

}  // namespace pocketgen

#endif  // POCKETGEN_SAMPLER_HPP_
