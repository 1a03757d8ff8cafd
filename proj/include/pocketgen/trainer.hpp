#ifndef POCKETGEN_TRAINER_HPP_
#define POCKETGEN_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pocketgen/data_pipeline.hpp"
#include "pocketgen/model.hpp"
#include "pocketgen/rng.hpp"

namespace pocketgen {

struct JointLossConfig {
  double lambda = 1.0;
  double label_smoothing = 0.0;
  void validate() const;
};

// AdamW with cosine decay from lr to min_lr_ratio * lr over decay_steps
// (constant lr when decay_steps is 0). grad_clip <= 0 disables clipping.
struct OptimConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  double min_lr_ratio = 0.1;
  std::int64_t decay_steps = 0;
  double grad_clip = 0.0;
  void validate() const;
};

struct AdamMoments {
  std::vector<double> m, v;
  void reset(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
  bool operator==(const AdamMoments&) const = default;
};

double learning_rate(const OptimConfig& cfg, std::int64_t step);

// `t` is the 1-based update count used for bias correction.
void adam_update(std::span<double> params, std::span<const double> grads,
                 AdamMoments& mom, std::int64_t t, double lr, const OptimConfig& cfg);

struct TrainState {
  Model model;
  AdamMoments backbone_moments;
  AdamMoments head_moments;
  std::int64_t step = 0;
  Rng rng;
  // RL mode: diffusion parameters receive no gradient and no update.
  bool freeze_head = false;
};

TrainState make_train_state(const ModelConfig& cfg, std::uint64_t seed);

struct LossParts {
  double total = 0.0;
  double ce = 0.0;
  double diff = 0.0;
  std::size_t n_ce = 0;
  std::size_t n_diff = 0;
};

struct Gradients {
  std::vector<double> backbone;
  std::vector<double> head;
  void zero(const Model& m) {
    backbone.assign(m.backbone.num_params(), 0.0);
    head.assign(m.head.num_params(), 0.0);
  }
};

class EmptyLossMask : public DataError {
 public:
  EmptyLossMask() : DataError("EmptyLossMask: batch has no loss targets") {}
};

class NonFiniteLoss : public NumericError {
 public:
  using NumericError::NumericError;
};

// Per sequence, one draw per loss-masked position whose next element is a
// coordinate, in position order.
using DrawSet = std::vector<std::vector<DiffusionDraw>>;
DrawSet draw_batch_noise(const Batch& batch, Rng& rng, int T);

// Teacher-forced joint loss. A loss-masked position i predicts element i+1:
// cross-entropy when it is a token, noise regression conditioned on the
// hidden state at i when it is a coordinate. ce is averaged over token
// targets, diff over coordinate targets, total = ce + lambda * diff.
// Gradients of total are accumulated into `grads` when it is non-null.
LossParts joint_loss(const Batch& batch, const Model& model,
                     const JointLossConfig& cfg, const DrawSet& draws,
                     Gradients* grads = nullptr, bool freeze_head = false);

// Same, drawing noise from state.rng.
LossParts joint_loss(const Batch& batch, TrainState& state, const JointLossConfig& cfg);

struct StepMetrics {
  std::int64_t step = 0;
  double ce = 0.0;
  double diff = 0.0;
  double total = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
};

StepMetrics train_step(const Batch& batch, TrainState& state,
                       const JointLossConfig& loss_cfg, const OptimConfig& opt_cfg);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckOptions {
  double h = 1e-5;
  // Below this many coordinates every one is checked; above it a seeded
  // subsample of `sample_size` coordinates is drawn.
  std::size_t full_limit = 20000;
  std::size_t sample_size = 2000;
  std::uint64_t seed = 0;
  // Denominator floor for the relative error, so coordinates whose true
  // gradient is ~0 are judged on absolute error.
  double floor = 1e-4;
};

// Central differences of `loss` against `analytic` over the coordinates of
// `params`. `params` is restored before returning.
GradCheckResult finite_difference_check(std::span<double> params,
                                        std::span<const double> analytic,
                                        const std::function<double()>& loss,
                                        const GradCheckOptions& opt);

// Checks backbone and head gradients of the joint loss with fixed draws
// (taken from a copy of state.rng).
GradCheckResult grad_check(const Batch& batch, const TrainState& state,
                           const JointLossConfig& cfg,
                           const GradCheckOptions& opt = {});

}  // namespace pocketgen

#endif  // POCKETGEN_TRAINER_HPP_
