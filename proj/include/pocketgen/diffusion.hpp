#ifndef POCKETGEN_DIFFUSION_HPP_
#define POCKETGEN_DIFFUSION_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "pocketgen/error.hpp"
#include "pocketgen/param_table.hpp"
#include "pocketgen/rng.hpp"
#include "pocketgen/vec3.hpp"

namespace pocketgen {

// Steps are 1-based: beta(t), alpha_bar(t) for t in 1..T.
struct NoiseSchedule {
  int T = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> betas;       // betas[t-1]
  std::vector<double> alpha_bars;  // alpha_bars[t-1]

  double beta(int t) const { return betas.at(t - 1); }
  double alpha_bar(int t) const { return alpha_bars.at(t - 1); }
};

class ScheduleError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Linear beta from beta_start to beta_end over T steps. BadRange unless
// 0 < beta_start <= beta_end < 1 and T >= 1.
NoiseSchedule build_schedule(int T, double beta_start, double beta_end);

class StepOutOfRange : public DataError {
 public:
  StepOutOfRange(int t, int T)
      : DataError("diffusion step " + std::to_string(t) + " outside 1.." +
                  std::to_string(T)) {}
};

Vec3 add_noise(const Vec3& x0, int t, const Vec3& eps, const NoiseSchedule& sched);
Vec3 add_noise_at(const Vec3& x0, double alpha_bar, const Vec3& eps);

// Sinusoidal embedding: sin(t * f_i) for the first half, cos for the second,
// f_i = 10000^(-i / (d/2)).
std::vector<double> time_embedding(int t, int d_t);

struct DiffusionConfig {
  int d_t = 64;
  int hidden = 256;
  int d_model = 128;

  void validate() const;
  bool operator==(const DiffusionConfig&) const = default;
};

// One (t, eps) pair per diffusion target.
struct DiffusionDraw {
  int t = 1;
  Vec3 eps{};
};

DiffusionDraw draw_noise(Rng& rng, int T);

// MLP eps_theta(x_t, t, z): concat(x_t, time_embedding(t), z) -> hidden ->
// hidden -> 3 with SiLU activations.
class DiffusionHead {
 public:
  DiffusionHead() = default;
  explicit DiffusionHead(const DiffusionConfig& cfg);

  const DiffusionConfig& config() const { return cfg_; }
  const ParamTable& table() const { return table_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  void init(std::uint64_t seed);

  Vec3 predict_noise(const Vec3& x_t, int t, std::span<const double> z) const;

  struct Cache {
    int N = 0;
    std::vector<double> input, h1, a1, h2, a2, out;
  };
  // Batched forward over N rows; xt is N x 3, z is N x d_model.
  void forward(std::span<const double> xt, std::span<const int> t,
               std::span<const double> z, Cache& cache) const;
  // dz (N x d_model) receives dL/dz; parameter gradients accumulate into
  // `grads` unless it is empty.
  void backward(const Cache& cache, std::span<const double> dout,
                std::span<double> dz, std::span<double> grads) const;

  bool operator==(const DiffusionHead& o) const {
    return cfg_ == o.cfg_ && params_ == o.params_;
  }

 private:
  DiffusionConfig cfg_;
  ParamTable table_;
  std::vector<double> params_;
  std::size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0, w3_ = 0, b3_ = 0;
};

using NoisePredictor = std::function<Vec3(const Vec3& x_t, int t, std::size_t atom)>;

// Mean over atoms of |eps - eps_hat(x_t, t)|^2 with the supplied draws.
double ddpm_ar_loss(std::span<const Vec3> coords_x0,
                    std::span<const DiffusionDraw> draws,
                    const NoiseSchedule& sched, const NoisePredictor& predict);

// Model version: draws are taken from `rng` per atom, in order.
double ddpm_ar_loss(std::span<const Vec3> coords_x0,
                    std::span<const std::vector<double>> conditions,
                    const NoiseSchedule& sched, const DiffusionHead& head, Rng& rng);

// Ancestral reverse process from x_T ~ N(0, I); no noise on the final step.
// `calls`, when given, is incremented once per noise prediction.
Vec3 sample_coord(std::span<const double> z, const NoiseSchedule& sched,
                  const DiffusionHead& head, Rng& rng, int* calls = nullptr);
Vec3 sample_coord(const NoiseSchedule& sched, Rng& rng,
                  const std::function<Vec3(const Vec3&, int)>& predict);

}  // namespace pocketgen

#endif  // POCKETGEN_DIFFUSION_HPP_
