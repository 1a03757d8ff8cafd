#include "pocketgen/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "pocketgen/kernels.hpp"

namespace pocketgen {

namespace k = kernels;

NoiseSchedule build_schedule(int T, double beta_start, double beta_end) {
  if (T < 1) throw ScheduleError("BadRange: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
    throw ScheduleError("BadRange: need 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.T = T;
  s.beta_start = beta_start;
  s.beta_end = beta_end;
  double prod = 1.0;
  for (int i = 0; i < T; ++i) {
    const double b =
        T == 1 ? beta_start : beta_start + (beta_end - beta_start) * i / (T - 1);
    s.betas.push_back(b);
    prod *= 1.0 - b;
    s.alpha_bars.push_back(prod);
  }
  return s;
}

Vec3 add_noise_at(const Vec3& x0, double alpha_bar, const Vec3& eps) {
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  return {a * x0[0] + b * eps[0], a * x0[1] + b * eps[1], a * x0[2] + b * eps[2]};
}

Vec3 add_noise(const Vec3& x0, int t, const Vec3& eps, const NoiseSchedule& sched) {
  if (t < 1 || t > sched.T) throw StepOutOfRange(t, sched.T);
  return add_noise_at(x0, sched.alpha_bar(t), eps);
}

std::vector<double> time_embedding(int t, int d_t) {
  std::vector<double> e(d_t, 0.0);
  const int half = d_t / 2;
  for (int i = 0; i < half; ++i) {
    const double f = std::exp(-std::log(10000.0) * i / half);
    e[i] = std::sin(t * f);
    e[half + i] = std::cos(t * f);
  }
  return e;
}

void DiffusionConfig::validate() const {
  if (d_t <= 0 || d_t % 2 != 0) throw ConfigError("d_t must be positive and even");
  if (hidden <= 0 || d_model <= 0) throw ConfigError("diffusion sizes must be positive");
}

DiffusionDraw draw_noise(Rng& rng, int T) {
  DiffusionDraw d;
  d.t = 1 + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(T)));
  d.eps = rng.normal3();
  return d;
}

DiffusionHead::DiffusionHead(const DiffusionConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int in = 3 + cfg.d_t + cfg.d_model, H = cfg.hidden;
  w1_ = table_.add("diff.w1", {in, H});
  b1_ = table_.add("diff.b1", {H});
  w2_ = table_.add("diff.w2", {H, H});
  b2_ = table_.add("diff.b2", {H});
  w3_ = table_.add("diff.w3", {H, 3});
  b3_ = table_.add("diff.b3", {3});
  params_.assign(table_.total(), 0.0);
}

void DiffusionHead::init(std::uint64_t seed) {
  Rng rng(seed);
  std::fill(params_.begin(), params_.end(), 0.0);
  for (std::size_t off : {w1_, w2_, w3_}) {
    const auto& spec = *std::find_if(table_.specs().begin(), table_.specs().end(),
                                     [&](const TensorSpec& s) { return s.offset == off; });
    for (std::size_t i = 0; i < spec.size; ++i) params_[off + i] = 0.02 * rng.normal();
  }
}

void DiffusionHead::forward(std::span<const double> xt, std::span<const int> t,
                            std::span<const double> z, Cache& c) const {
  const int N = static_cast<int>(t.size());
  const int C = cfg_.d_model, D = cfg_.d_t, H = cfg_.hidden;
  const int in = 3 + D + C;
  const std::span<const double> P = params_;
  c.N = N;
  c.input.assign(static_cast<std::size_t>(N) * in, 0.0);
  for (int n = 0; n < N; ++n) {
    double* row = c.input.data() + static_cast<std::size_t>(n) * in;
    for (int j = 0; j < 3; ++j) row[j] = xt[n * 3 + j];
    const auto te = time_embedding(t[n], D);
    std::copy(te.begin(), te.end(), row + 3);
    for (int j = 0; j < C; ++j) row[3 + D + j] = z[static_cast<std::size_t>(n) * C + j];
  }
  const std::size_t NH = static_cast<std::size_t>(N) * H;
  c.h1.resize(NH);
  c.a1.resize(NH);
  c.h2.resize(NH);
  c.a2.resize(NH);
  c.out.resize(static_cast<std::size_t>(N) * 3);
  k::matmul_forward(c.h1, c.input, P.subspan(w1_, in * H), P.subspan(b1_, H), N, in, H);
  k::silu_forward(c.a1, c.h1);
  k::matmul_forward(c.h2, c.a1, P.subspan(w2_, H * H), P.subspan(b2_, H), N, H, H);
  k::silu_forward(c.a2, c.h2);
  k::matmul_forward(c.out, c.a2, P.subspan(w3_, H * 3), P.subspan(b3_, 3), N, H, 3);
}

void DiffusionHead::backward(const Cache& c, std::span<const double> dout,
                             std::span<double> dz, std::span<double> grads) const {
  const int N = c.N;
  const int C = cfg_.d_model, D = cfg_.d_t, H = cfg_.hidden;
  const int in = 3 + D + C;
  const std::span<const double> P = params_;
  // scratch gradients when the caller does not want parameter gradients
  std::vector<double> scratch;
  if (grads.empty()) {
    scratch.assign(params_.size(), 0.0);
    grads = scratch;
  }
  const std::size_t NH = static_cast<std::size_t>(N) * H;
  std::vector<double> da2(NH, 0.0), dh2(NH, 0.0), da1(NH, 0.0), dh1(NH, 0.0);
  std::vector<double> dinput(static_cast<std::size_t>(N) * in, 0.0);
  k::matmul_backward(da2, grads.subspan(w3_, H * 3), grads.subspan(b3_, 3), dout, c.a2,
                     P.subspan(w3_, H * 3), N, H, 3);
  k::silu_backward(dh2, c.h2, da2);
  k::matmul_backward(da1, grads.subspan(w2_, H * H), grads.subspan(b2_, H), dh2, c.a1,
                     P.subspan(w2_, H * H), N, H, H);
  k::silu_backward(dh1, c.h1, da1);
  k::matmul_backward(dinput, grads.subspan(w1_, in * H), grads.subspan(b1_, H), dh1,
                     c.input, P.subspan(w1_, in * H), N, in, H);
  if (dz.empty()) return;
  for (int n = 0; n < N; ++n)
    for (int j = 0; j < C; ++j)
      dz[static_cast<std::size_t>(n) * C + j] +=
          dinput[static_cast<std::size_t>(n) * in + 3 + D + j];
}

Vec3 DiffusionHead::predict_noise(const Vec3& x_t, int t,
                                  std::span<const double> z) const {
  Cache c;
  const int tt[1] = {t};
  forward(x_t, tt, z, c);
  return {c.out[0], c.out[1], c.out[2]};
}

double ddpm_ar_loss(std::span<const Vec3> coords_x0,
                    std::span<const DiffusionDraw> draws,
                    const NoiseSchedule& sched, const NoisePredictor& predict) {
  if (coords_x0.size() != draws.size() || coords_x0.empty())
    throw DataError("LengthMismatch: need one draw per atom and at least one atom");
  double total = 0.0;
  for (std::size_t i = 0; i < coords_x0.size(); ++i) {
    const auto& d = draws[i];
    const Vec3 xt = add_noise(coords_x0[i], d.t, d.eps, sched);
    const Vec3 r = d.eps - predict(xt, d.t, i);
    total += dot(r, r);
  }
  return total / static_cast<double>(coords_x0.size());
}

double ddpm_ar_loss(std::span<const Vec3> coords_x0,
                    std::span<const std::vector<double>> conditions,
                    const NoiseSchedule& sched, const DiffusionHead& head, Rng& rng) {
  if (coords_x0.size() != conditions.size() || coords_x0.empty())
    throw DataError("LengthMismatch: coordinates and conditions differ in length");
  std::vector<DiffusionDraw> draws;
  for (std::size_t i = 0; i < coords_x0.size(); ++i)
    draws.push_back(draw_noise(rng, sched.T));
  return ddpm_ar_loss(coords_x0, draws, sched,
                      [&](const Vec3& xt, int t, std::size_t i) {
                        return head.predict_noise(xt, t, conditions[i]);
                      });
}

Vec3 sample_coord(const NoiseSchedule& sched, Rng& rng,
                  const std::function<Vec3(const Vec3&, int)>& predict) {
  Vec3 x = rng.normal3();
  for (int t = sched.T; t >= 1; --t) {
    const double b = sched.beta(t);
    const Vec3 e = predict(x, t);
    const double inv = 1.0 / std::sqrt(1.0 - b);
    const double coef = b / std::sqrt(1.0 - sched.alpha_bar(t));
    x = inv * (x - coef * e);
    if (t > 1) x = x + std::sqrt(b) * rng.normal3();
  }
  return x;
}

Vec3 sample_coord(std::span<const double> z, const NoiseSchedule& sched,
                  const DiffusionHead& head, Rng& rng, int* calls) {
  return sample_coord(sched, rng, [&](const Vec3& x, int t) {
    if (calls) ++*calls;
    return head.predict_noise(x, t, z);
  });
}

}  // namespace pocketgen
