#ifndef POCKETGEN_BACKBONE_HPP_
#define POCKETGEN_BACKBONE_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "pocketgen/error.hpp"
#include "pocketgen/hybrid_seq.hpp"
#include "pocketgen/param_table.hpp"

namespace pocketgen {

struct BackboneConfig {
  int d_model = 128;
  int n_layers = 4;
  int n_heads = 4;
  int d_ff = 512;
  int max_positions = 1024;
  int vocab_size = 0;

  void validate() const;  // throws ConfigError
  bool operator==(const BackboneConfig&) const = default;
};

class PositionOverflow : public DataError {
 public:
  PositionOverflow(std::size_t length, int max_positions)
      : DataError("sequence of length " + std::to_string(length) +
                  " exceeds max_positions " + std::to_string(max_positions)) {}
};

// Saved forward state for one sequence, reused across calls to avoid
// reallocation.
struct BackboneActivations {
  int T = 0;
  std::vector<double> encoded;  // T x C, embedding output
  struct Layer {
    std::vector<double> ln1, ln1_mean, ln1_rstd;
    std::vector<double> qkv, att, atty, attproj;
    std::vector<double> res2;
    std::vector<double> ln2, ln2_mean, ln2_rstd;
    std::vector<double> fch, fch_gelu, fcproj;
    std::vector<double> res3;
  };
  std::vector<Layer> layers;
  std::vector<double> lnf_mean, lnf_rstd;
  std::vector<double> hidden;  // T x C, output of the final layer norm

  std::span<const double> hidden_row(int t, int C) const {
    return std::span<const double>(hidden).subspan(static_cast<std::size_t>(t) * C, C);
  }
};

// Pre-norm GPT over hybrid sequences. Discrete elements embed through a
// token table, Continuous elements through one shared 3 -> d_model linear
// map; a learned positional embedding is added to both. Hidden states z are
// the final layer-norm outputs, and the token head maps z to logits.
class Backbone {
 public:
  Backbone() = default;
  explicit Backbone(const BackboneConfig& cfg);

  const BackboneConfig& config() const { return cfg_; }
  const ParamTable& table() const { return table_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // normal(0, 0.02) weights, zero biases, unit layer-norm gains.
  void init(std::uint64_t seed);

  // Embedding of each element (plus positions). Used directly by tests.
  std::vector<double> embed(std::span<const HybridElement> seq) const;

  void forward(std::span<const HybridElement> seq, BackboneActivations& acts) const;

  // logits (N x V) = z (N x C) * W_head + b_head
  void token_logits(std::span<const double> z, std::span<double> logits,
                    int N) const;
  void token_logits_backward(std::span<const double> dlogits,
                             std::span<const double> z, std::span<double> dz,
                             std::span<double> grads, int N) const;

  // Accumulates parameter gradients into `grads` given dL/dhidden (T x C).
  void backward(std::span<const HybridElement> seq,
                const BackboneActivations& acts,
                std::span<const double> dhidden, std::span<double> grads) const;

  bool operator==(const Backbone& o) const {
    return cfg_ == o.cfg_ && params_ == o.params_;
  }

 private:
  struct LayerOffsets {
    std::size_t ln1_w, ln1_b, qkv_w, qkv_b, proj_w, proj_b;
    std::size_t ln2_w, ln2_b, fc_w, fc_b, fcproj_w, fcproj_b;
  };

  std::span<const double> p(std::size_t off, std::size_t n) const {
    return std::span<const double>(params_).subspan(off, n);
  }

  BackboneConfig cfg_;
  ParamTable table_;
  std::vector<double> params_;
  std::size_t tok_emb_ = 0, coord_w_ = 0, coord_b_ = 0, pos_emb_ = 0;
  std::vector<LayerOffsets> layers_;
  std::size_t lnf_w_ = 0, lnf_b_ = 0, head_w_ = 0, head_b_ = 0;
};

}  // namespace pocketgen

#endif  // POCKETGEN_BACKBONE_HPP_
