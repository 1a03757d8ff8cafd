#include <cmath>
#include <numbers>
#include <vector>

#include "pocketgen/kernels.hpp"

namespace pocketgen::kernels::serial {

namespace {

const double kGeluScale = std::sqrt(2.0 / std::numbers::pi);

}  // namespace

void matmul_forward(std::span<double> out, std::span<const double> inp,
                    std::span<const double> w, std::span<const double> bias,
                    int N, int C, int OC) {
  for (int n = 0; n < N; ++n) {
    for (int o = 0; o < OC; ++o) {
      double val = bias.empty() ? 0.0 : bias[o];
      for (int c = 0; c < C; ++c) val += inp[n * C + c] * w[c * OC + o];
      out[n * OC + o] = val;
    }
  }
}

void matmul_backward(std::span<double> dinp, std::span<double> dw,
                     std::span<double> dbias, std::span<const double> dout,
                     std::span<const double> inp, std::span<const double> w,
                     int N, int C, int OC) {
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      double val = 0.0;
      for (int o = 0; o < OC; ++o) val += dout[n * OC + o] * w[c * OC + o];
      if (!dinp.empty()) dinp[n * C + c] += val;
    }
  }
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      for (int o = 0; o < OC; ++o) dw[c * OC + o] += inp[n * C + c] * dout[n * OC + o];
    }
  }
  if (!dbias.empty()) {
    for (int n = 0; n < N; ++n) {
      for (int o = 0; o < OC; ++o) dbias[o] += dout[n * OC + o];
    }
  }
}

void layernorm_forward(std::span<double> out, std::span<double> mean,
                       std::span<double> rstd, std::span<const double> inp,
                       std::span<const double> w, std::span<const double> b,
                       int N, int C) {
  for (int n = 0; n < N; ++n) {
    const double* x = inp.data() + n * C;
    double m = 0.0;
    for (int c = 0; c < C; ++c) m += x[c];
    m /= C;
    double v = 0.0;
    for (int c = 0; c < C; ++c) v += (x[c] - m) * (x[c] - m);
    v /= C;
    const double s = 1.0 / std::sqrt(v + kLayerNormEps);
    for (int c = 0; c < C; ++c) out[n * C + c] = (x[c] - m) * s * w[c] + b[c];
    mean[n] = m;
    rstd[n] = s;
  }
}

void layernorm_backward(std::span<double> dinp, std::span<double> dw,
                        std::span<double> db, std::span<const double> dout,
                        std::span<const double> inp, std::span<const double> w,
                        std::span<const double> mean,
                        std::span<const double> rstd, int N, int C) {
  for (int n = 0; n < N; ++n) {
    const double* x = inp.data() + n * C;
    const double* g = dout.data() + n * C;
    double dnorm_mean = 0.0;
    double dnorm_norm_mean = 0.0;
    for (int c = 0; c < C; ++c) {
      const double norm = (x[c] - mean[n]) * rstd[n];
      const double dnorm = w[c] * g[c];
      dnorm_mean += dnorm;
      dnorm_norm_mean += dnorm * norm;
    }
    dnorm_mean /= C;
    dnorm_norm_mean /= C;
    for (int c = 0; c < C; ++c) {
      const double norm = (x[c] - mean[n]) * rstd[n];
      const double dnorm = w[c] * g[c];
      db[c] += g[c];
      dw[c] += norm * g[c];
      dinp[n * C + c] += (dnorm - dnorm_mean - norm * dnorm_norm_mean) * rstd[n];
    }
  }
}

void attention_forward(std::span<double> out, std::span<double> att,
                       std::span<const double> qkv, int T, int C, int NH) {
  const int hs = C / NH;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hs));
  const int C3 = 3 * C;
  for (int h = 0; h < NH; ++h) {
    for (int t = 0; t < T; ++t) {
      const double* q = qkv.data() + t * C3 + h * hs;
      double* row = att.data() + (static_cast<std::size_t>(h) * T + t) * T;
      double maxval = -INFINITY;
      for (int t2 = 0; t2 <= t; ++t2) {
        const double* k = qkv.data() + t2 * C3 + C + h * hs;
        double s = 0.0;
        for (int i = 0; i < hs; ++i) s += q[i] * k[i];
        s *= scale;
        row[t2] = s;
        if (s > maxval) maxval = s;
      }
      double sum = 0.0;
      for (int t2 = 0; t2 <= t; ++t2) {
        row[t2] = std::exp(row[t2] - maxval);
        sum += row[t2];
      }
      const double inv = 1.0 / sum;
      for (int t2 = 0; t2 < T; ++t2) row[t2] = t2 <= t ? row[t2] * inv : 0.0;
      double* o = out.data() + t * C + h * hs;
      for (int i = 0; i < hs; ++i) o[i] = 0.0;
      for (int t2 = 0; t2 <= t; ++t2) {
        const double* v = qkv.data() + t2 * C3 + 2 * C + h * hs;
        for (int i = 0; i < hs; ++i) o[i] += row[t2] * v[i];
      }
    }
  }
}

void attention_backward(std::span<double> dqkv, std::span<const double> dout,
                        std::span<const double> qkv,
                        std::span<const double> att, int T, int C, int NH) {
  const int hs = C / NH;
  const double scale = 1.0 / std::sqrt(static_cast<double>(hs));
  const int C3 = 3 * C;
  std::vector<double> datt(T);
  for (int h = 0; h < NH; ++h) {
    for (int t = 0; t < T; ++t) {
      const double* row = att.data() + (static_cast<std::size_t>(h) * T + t) * T;
      const double* g = dout.data() + t * C + h * hs;
      double weighted = 0.0;
      for (int t2 = 0; t2 <= t; ++t2) {
        const double* v = qkv.data() + t2 * C3 + 2 * C + h * hs;
        double* dv = dqkv.data() + t2 * C3 + 2 * C + h * hs;
        double d = 0.0;
        for (int i = 0; i < hs; ++i) {
          d += v[i] * g[i];
          dv[i] += row[t2] * g[i];
        }
        datt[t2] = d;
        weighted += row[t2] * d;
      }
      const double* q = qkv.data() + t * C3 + h * hs;
      double* dq = dqkv.data() + t * C3 + h * hs;
      for (int t2 = 0; t2 <= t; ++t2) {
        const double dpre = row[t2] * (datt[t2] - weighted) * scale;
        const double* k = qkv.data() + t2 * C3 + C + h * hs;
        double* dk = dqkv.data() + t2 * C3 + C + h * hs;
        for (int i = 0; i < hs; ++i) {
          dq[i] += dpre * k[i];
          dk[i] += dpre * q[i];
        }
      }
    }
  }
}

void gelu_forward(std::span<double> out, std::span<const double> inp) {
  for (std::size_t i = 0; i < inp.size(); ++i) {
    const double x = inp[i];
    const double cube = 0.044715 * x * x * x;
    out[i] = 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + cube)));
  }
}

void gelu_backward(std::span<double> dinp, std::span<const double> inp,
                   std::span<const double> dout) {
  for (std::size_t i = 0; i < inp.size(); ++i) {
    const double x = inp[i];
    const double cube = 0.044715 * x * x * x;
    const double arg = kGeluScale * (x + cube);
    const double th = std::tanh(arg);
    const double sech2 = 1.0 - th * th;
    const double local = 0.5 * (1.0 + th) +
                         0.5 * x * sech2 * kGeluScale * (1.0 + 3.0 * 0.044715 * x * x);
    dinp[i] += local * dout[i];
  }
}

void silu_forward(std::span<double> out, std::span<const double> inp) {
  for (std::size_t i = 0; i < inp.size(); ++i) {
    const double x = inp[i];
    out[i] = x / (1.0 + std::exp(-x));
  }
}

void silu_backward(std::span<double> dinp, std::span<const double> inp,
                   std::span<const double> dout) {
  for (std::size_t i = 0; i < inp.size(); ++i) {
    const double x = inp[i];
    const double s = 1.0 / (1.0 + std::exp(-x));
    dinp[i] += s * (1.0 + x * (1.0 - s)) * dout[i];
  }
}

void residual_forward(std::span<double> out, std::span<const double> a,
                      std::span<const double> b) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
}

}  // namespace pocketgen::kernels::serial
