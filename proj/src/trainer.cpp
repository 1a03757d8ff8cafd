#include "pocketgen/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace pocketgen {

void JointLossConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0))
    throw ConfigError("label_smoothing must be in [0, 1)");
}

void OptimConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("lr must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("adam betas must be in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("adam eps must be positive");
  if (!(min_lr_ratio >= 0.0 && min_lr_ratio <= 1.0))
    throw ConfigError("min_lr_ratio must be in [0, 1]");
  if (decay_steps < 0) throw ConfigError("decay_steps must be nonnegative");
}

double learning_rate(const OptimConfig& cfg, std::int64_t step) {
  if (cfg.decay_steps <= 0) return cfg.lr;
  const double frac =
      static_cast<double>(std::min(step, cfg.decay_steps)) / cfg.decay_steps;
  const double lo = cfg.min_lr_ratio * cfg.lr;
  return lo + (cfg.lr - lo) * 0.5 * (1.0 + std::cos(std::numbers::pi * frac));
}

void adam_update(std::span<double> params, std::span<const double> grads,
                 AdamMoments& mom, std::int64_t t, double lr, const OptimConfig& cfg) {
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(params.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const double g = grads[i];
    mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
    mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = mom.m[i] / bc1;
    const double vhat = mom.v[i] / bc2;
    params[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * params[i]);
  }
}

TrainState make_train_state(const ModelConfig& cfg, std::uint64_t seed) {
  TrainState s;
  s.model = Model(cfg);
  s.model.init(seed);
  s.backbone_moments.reset(s.model.backbone.num_params());
  s.head_moments.reset(s.model.head.num_params());
  s.rng = Rng(derive_seed(seed, 0x7472));
  return s;
}

namespace {

bool is_diffusion_target(const Batch& batch, std::size_t b, std::size_t i) {
  return !is_discrete(batch.sequences[b].elements[i + 1]);
}

}  // namespace

DrawSet draw_batch_noise(const Batch& batch, Rng& rng, int T) {
  DrawSet draws(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t len = batch.lengths[b];
    for (std::size_t i = 0; i + 1 < len; ++i) {
      if (batch.loss_mask[b][i] && is_diffusion_target(batch, b, i))
        draws[b].push_back(draw_noise(rng, T));
    }
  }
  return draws;
}

LossParts joint_loss(const Batch& batch, const Model& model,
                     const JointLossConfig& cfg, const DrawSet& draws,
                     Gradients* grads, bool freeze_head) {
  const int C = model.cfg.backbone.d_model;
  const int V = model.cfg.backbone.vocab_size;

  LossParts out;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (std::size_t i = 0; i + 1 < batch.lengths[b]; ++i) {
      if (!batch.loss_mask[b][i]) continue;
      if (is_diffusion_target(batch, b, i))
        ++out.n_diff;
      else
        ++out.n_ce;
    }
  }
  if (out.n_ce + out.n_diff == 0) throw EmptyLossMask();
  const double ce_scale = out.n_ce ? 1.0 / out.n_ce : 0.0;
  const double diff_scale = out.n_diff ? cfg.lambda / out.n_diff : 0.0;
  const double eps_ls = cfg.label_smoothing;

  double ce_sum = 0.0, diff_sum = 0.0;
  BackboneActivations acts;
  DiffusionHead::Cache cache;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& els = batch.sequences[b].elements;
    const std::size_t len = batch.lengths[b];
    std::vector<int> ce_pos, diff_pos;
    for (std::size_t i = 0; i + 1 < len; ++i) {
      if (!batch.loss_mask[b][i]) continue;
      (is_diffusion_target(batch, b, i) ? diff_pos : ce_pos).push_back(static_cast<int>(i));
    }
    if (ce_pos.empty() && diff_pos.empty()) continue;
    if (draws.at(b).size() != diff_pos.size())
      throw DataError("draw set does not match batch layout");

    const std::span<const HybridElement> seq(els.data(), len);
    model.backbone.forward(seq, acts);
    std::vector<double> dhidden(len * C, 0.0);

    if (!ce_pos.empty()) {
      const int M = static_cast<int>(ce_pos.size());
      std::vector<double> z(static_cast<std::size_t>(M) * C);
      for (int r = 0; r < M; ++r) {
        const auto row = acts.hidden_row(ce_pos[r], C);
        std::copy(row.begin(), row.end(), z.begin() + static_cast<std::ptrdiff_t>(r) * C);
      }
      std::vector<double> logits(static_cast<std::size_t>(M) * V);
      model.backbone.token_logits(z, logits, M);
      std::vector<double> dlogits(grads ? logits.size() : 0);
      for (int r = 0; r < M; ++r) {
        const double* lg = logits.data() + static_cast<std::size_t>(r) * V;
        const int y = token_of(els[ce_pos[r] + 1]);
        const double mx = *std::max_element(lg, lg + V);
        double se = 0.0;
        for (int v = 0; v < V; ++v) se += std::exp(lg[v] - mx);
        const double lse = mx + std::log(se);
        double loss = -(lg[y] - lse) * (1.0 - eps_ls);
        if (eps_ls > 0.0) {
          double mean_lp = 0.0;
          for (int v = 0; v < V; ++v) mean_lp += lg[v] - lse;
          loss -= eps_ls * mean_lp / V;
        }
        ce_sum += loss;
        if (grads) {
          double* dl = dlogits.data() + static_cast<std::size_t>(r) * V;
          for (int v = 0; v < V; ++v) {
            const double q = (v == y ? 1.0 - eps_ls : 0.0) + eps_ls / V;
            dl[v] = (std::exp(lg[v] - lse) - q) * ce_scale;
          }
        }
      }
      if (grads) {
        std::vector<double> dz(z.size(), 0.0);
        model.backbone.token_logits_backward(dlogits, z, dz, grads->backbone, M);
        for (int r = 0; r < M; ++r)
          for (int c = 0; c < C; ++c)
            dhidden[static_cast<std::size_t>(ce_pos[r]) * C + c] +=
                dz[static_cast<std::size_t>(r) * C + c];
      }
    }

    if (!diff_pos.empty()) {
      const int M = static_cast<int>(diff_pos.size());
      std::vector<double> z(static_cast<std::size_t>(M) * C), xt(3 * M);
      std::vector<int> ts(M);
      for (int r = 0; r < M; ++r) {
        const auto row = acts.hidden_row(diff_pos[r], C);
        std::copy(row.begin(), row.end(), z.begin() + static_cast<std::ptrdiff_t>(r) * C);
        const DiffusionDraw& d = draws[b][r];
        const Vec3 x = add_noise(coord_of(els[diff_pos[r] + 1]), d.t, d.eps, model.sched);
        for (int j = 0; j < 3; ++j) xt[3 * r + j] = x[j];
        ts[r] = d.t;
      }
      model.head.forward(xt, ts, z, cache);
      std::vector<double> dout(3 * M);
      for (int r = 0; r < M; ++r) {
        for (int j = 0; j < 3; ++j) {
          const double res = draws[b][r].eps[j] - cache.out[3 * r + j];
          diff_sum += res * res;
          dout[3 * r + j] = -2.0 * res * diff_scale;
        }
      }
      if (grads) {
        std::vector<double> dz(z.size(), 0.0);
        model.head.backward(cache, dout, dz,
                            freeze_head ? std::span<double>() : std::span<double>(grads->head));
        for (int r = 0; r < M; ++r)
          for (int c = 0; c < C; ++c)
            dhidden[static_cast<std::size_t>(diff_pos[r]) * C + c] +=
                dz[static_cast<std::size_t>(r) * C + c];
      }
    }

    if (grads) model.backbone.backward(seq, acts, dhidden, grads->backbone);
  }

  out.ce = out.n_ce ? ce_sum / out.n_ce : 0.0;
  out.diff = out.n_diff ? diff_sum / out.n_diff : 0.0;
  out.total = out.ce + cfg.lambda * out.diff;
  return out;
}

LossParts joint_loss(const Batch& batch, TrainState& state, const JointLossConfig& cfg) {
  const DrawSet draws = draw_batch_noise(batch, state.rng, state.model.sched.T);
  return joint_loss(batch, state.model, cfg, draws);
}

StepMetrics train_step(const Batch& batch, TrainState& state,
                       const JointLossConfig& loss_cfg, const OptimConfig& opt_cfg) {
  const DrawSet draws = draw_batch_noise(batch, state.rng, state.model.sched.T);
  Gradients grads;
  grads.zero(state.model);
  const LossParts loss =
      joint_loss(batch, state.model, loss_cfg, draws, &grads, state.freeze_head);
  if (!std::isfinite(loss.total))
    throw NonFiniteLoss("NonFiniteLoss at step " + std::to_string(state.step) +
                        ": ce=" + std::to_string(loss.ce) +
                        " diff=" + std::to_string(loss.diff));

  double sq = 0.0;
  for (double g : grads.backbone) sq += g * g;
  for (double g : grads.head) sq += g * g;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm))
    throw NonFiniteLoss("NonFiniteLoss: gradient norm at step " + std::to_string(state.step));
  if (opt_cfg.grad_clip > 0.0 && norm > opt_cfg.grad_clip) {
    const double s = opt_cfg.grad_clip / norm;
    for (double& g : grads.backbone) g *= s;
    for (double& g : grads.head) g *= s;
  }

  const double lr = learning_rate(opt_cfg, state.step);
  const std::int64_t t = state.step + 1;
  adam_update(state.model.backbone.params(), grads.backbone, state.backbone_moments, t, lr,
              opt_cfg);
  if (!state.freeze_head)
    adam_update(state.model.head.params(), grads.head, state.head_moments, t, lr, opt_cfg);
  state.step = t;

  return {t, loss.ce, loss.diff, loss.total, norm, lr};
}

GradCheckResult finite_difference_check(std::span<double> params,
                                        std::span<const double> analytic,
                                        const std::function<double()>& loss,
                                        const GradCheckOptions& opt) {
  std::vector<std::size_t> idx(params.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (params.size() > opt.full_limit) {
    Rng rng(opt.seed);
    // partial Fisher-Yates
    const std::size_t k = std::min(opt.sample_size, params.size());
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + rng.uniform_int(params.size() - i);
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
  }

  GradCheckResult res;
  for (std::size_t i : idx) {
    const double saved = params[i];
    params[i] = saved + opt.h;
    const double up = loss();
    params[i] = saved - opt.h;
    const double down = loss();
    params[i] = saved;
    const double num = (up - down) / (2.0 * opt.h);
    const double a = analytic[i];
    const double rel =
        std::abs(a - num) / std::max({std::abs(a), std::abs(num), opt.floor});
    ++res.checked;
    if (rel > res.max_rel_error || !std::isfinite(rel)) {
      res.max_rel_error = std::isfinite(rel) ? rel : INFINITY;
      res.worst_index = i;
      res.worst_analytic = a;
      res.worst_numeric = num;
    }
  }
  return res;
}

GradCheckResult grad_check(const Batch& batch, const TrainState& state,
                           const JointLossConfig& cfg, const GradCheckOptions& opt) {
  Model model = state.model;
  Rng rng = state.rng;
  const DrawSet draws = draw_batch_noise(batch, rng, model.sched.T);

  Gradients g;
  g.zero(model);
  joint_loss(batch, model, cfg, draws, &g, state.freeze_head);

  // one flat index space: backbone coordinates, then head coordinates
  const std::size_t nb = model.backbone.num_params();
  // a frozen head has no gradient to check
  std::vector<double> flat(model.backbone.params().begin(), model.backbone.params().end());
  std::vector<double> analytic = g.backbone;
  if (!state.freeze_head) {
    flat.insert(flat.end(), model.head.params().begin(), model.head.params().end());
    analytic.insert(analytic.end(), g.head.begin(), g.head.end());
  }

  auto loss = [&] {
    std::copy(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(nb),
              model.backbone.params().begin());
    if (!state.freeze_head)
      std::copy(flat.begin() + static_cast<std::ptrdiff_t>(nb), flat.end(),
                model.head.params().begin());
    return joint_loss(batch, model, cfg, draws).total;
  };
  return finite_difference_check(flat, analytic, loss, opt);
}

}  // namespace pocketgen
