#ifndef POCKETGEN_KERNELS_HPP_
#define POCKETGEN_KERNELS_HPP_

#include <span>

// Dense kernels for the transformer and the diffusion MLP, double precision.
//
// Two implementations share one signature set:
//   kernels::serial  plain loops, kept as the reference for tests
//   kernels          OpenMP-parallel versions used by the model
// Every output element is accumulated in the same order by both, so results
// agree bit for bit.
//
// Layouts are row-major. Linear weights are stored input-major, [C x OC], so
// out[n, o] = bias[o] + sum_c inp[n, c] * w[c, o]. Backward kernels
// accumulate (+=) into their gradient outputs.
namespace pocketgen::kernels {

#define POCKETGEN_KERNEL_DECLS                                                 \
  void matmul_forward(std::span<double> out, std::span<const double> inp,     \
                      std::span<const double> w, std::span<const double> bias, \
                      int N, int C, int OC);                                   \
  void matmul_backward(std::span<double> dinp, std::span<double> dw,          \
                       std::span<double> dbias, std::span<const double> dout,  \
                       std::span<const double> inp,                            \
                       std::span<const double> w, int N, int C, int OC);       \
  void layernorm_forward(std::span<double> out, std::span<double> mean,       \
                         std::span<double> rstd, std::span<const double> inp,  \
                         std::span<const double> w,                            \
                         std::span<const double> b, int N, int C);             \
  void layernorm_backward(                                                     \
      std::span<double> dinp, std::span<double> dw, std::span<double> db,      \
      std::span<const double> dout, std::span<const double> inp,               \
      std::span<const double> w, std::span<const double> mean,                 \
      std::span<const double> rstd, int N, int C);                             \
  void attention_forward(std::span<double> out, std::span<double> att,        \
                         std::span<const double> qkv, int T, int C, int NH);   \
  void attention_backward(std::span<double> dqkv,                             \
                          std::span<const double> dout,                        \
                          std::span<const double> qkv,                         \
                          std::span<const double> att, int T, int C, int NH);  \
  void gelu_forward(std::span<double> out, std::span<const double> inp);      \
  void gelu_backward(std::span<double> dinp, std::span<const double> inp,     \
                     std::span<const double> dout);                            \
  void silu_forward(std::span<double> out, std::span<const double> inp);      \
  void silu_backward(std::span<double> dinp, std::span<const double> inp,     \
                     std::span<const double> dout);                            \
  void residual_forward(std::span<double> out, std::span<const double> a,     \
                        std::span<const double> b);

namespace serial {
POCKETGEN_KERNEL_DECLS
}  // namespace serial

POCKETGEN_KERNEL_DECLS

#undef POCKETGEN_KERNEL_DECLS

inline constexpr double kLayerNormEps = 1e-5;

}  // namespace pocketgen::kernels

#endif  // POCKETGEN_KERNELS_HPP_
