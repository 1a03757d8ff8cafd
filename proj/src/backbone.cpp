#include "pocketgen/backbone.hpp"

#include <algorithm>

#include "pocketgen/kernels.hpp"
#include "pocketgen/rng.hpp"

namespace pocketgen {

namespace k = kernels;

void BackboneConfig::validate() const {
  if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || d_ff <= 0 ||
      max_positions <= 0 || vocab_size <= 0)
    throw ConfigError("backbone sizes must be positive");
  if (d_model % n_heads != 0)
    throw ConfigError("d_model must be divisible by n_heads");
}

Backbone::Backbone(const BackboneConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int C = cfg.d_model, V = cfg.vocab_size, F = cfg.d_ff;
  tok_emb_ = table_.add("tok_emb", {V, C});
  coord_w_ = table_.add("coord_w", {3, C});
  coord_b_ = table_.add("coord_b", {C});
  pos_emb_ = table_.add("pos_emb", {cfg.max_positions, C});
  for (int l = 0; l < cfg.n_layers; ++l) {
    const std::string pre = "h" + std::to_string(l) + ".";
    LayerOffsets o{};
    o.ln1_w = table_.add(pre + "ln1_w", {C});
    o.ln1_b = table_.add(pre + "ln1_b", {C});
    o.qkv_w = table_.add(pre + "qkv_w", {C, 3 * C});
    o.qkv_b = table_.add(pre + "qkv_b", {3 * C});
    o.proj_w = table_.add(pre + "proj_w", {C, C});
    o.proj_b = table_.add(pre + "proj_b", {C});
    o.ln2_w = table_.add(pre + "ln2_w", {C});
    o.ln2_b = table_.add(pre + "ln2_b", {C});
    o.fc_w = table_.add(pre + "fc_w", {C, F});
    o.fc_b = table_.add(pre + "fc_b", {F});
    o.fcproj_w = table_.add(pre + "fcproj_w", {F, C});
    o.fcproj_b = table_.add(pre + "fcproj_b", {C});
    layers_.push_back(o);
  }
  lnf_w_ = table_.add("lnf_w", {C});
  lnf_b_ = table_.add("lnf_b", {C});
  head_w_ = table_.add("head_w", {C, V});
  head_b_ = table_.add("head_b", {V});
  params_.assign(table_.total(), 0.0);
}

void Backbone::init(std::uint64_t seed) {
  Rng rng(seed);
  std::fill(params_.begin(), params_.end(), 0.0);
  for (const auto& spec : table_.specs()) {
    const std::string& n = spec.name;
    const bool is_gain = n.ends_with("ln1_w") || n.ends_with("ln2_w") || n == "lnf_w";
    const bool is_weight = !is_gain && (n.ends_with("_w") || n.ends_with("_emb"));
    auto v = std::span<double>(params_).subspan(spec.offset, spec.size);
    if (is_gain) {
      std::fill(v.begin(), v.end(), 1.0);
    } else if (is_weight) {
      for (double& x : v) x = 0.02 * rng.normal();
    }
  }
}

std::vector<double> Backbone::embed(std::span<const HybridElement> seq) const {
  const int C = cfg_.d_model;
  const int T = static_cast<int>(seq.size());
  if (T > cfg_.max_positions) throw PositionOverflow(seq.size(), cfg_.max_positions);
  std::vector<double> out(static_cast<std::size_t>(T) * C);
  for (int t = 0; t < T; ++t) {
    double* e = out.data() + static_cast<std::size_t>(t) * C;
    if (const auto* d = std::get_if<Discrete>(&seq[t])) {
      if (d->id < 0 || d->id >= cfg_.vocab_size)
        throw DataError("token id " + std::to_string(d->id) + " outside vocab");
      const double* row = params_.data() + tok_emb_ + static_cast<std::size_t>(d->id) * C;
      std::copy(row, row + C, e);
    } else {
      const Vec3& x = coord_of(seq[t]);
      for (int c = 0; c < C; ++c) {
        double v = params_[coord_b_ + c];
        for (int j = 0; j < 3; ++j) v += x[j] * params_[coord_w_ + j * C + c];
        e[c] = v;
      }
    }
    const double* pos = params_.data() + pos_emb_ + static_cast<std::size_t>(t) * C;
    for (int c = 0; c < C; ++c) e[c] += pos[c];
  }
  return out;
}

void Backbone::forward(std::span<const HybridElement> seq,
                       BackboneActivations& acts) const {
  const int C = cfg_.d_model, F = cfg_.d_ff, NH = cfg_.n_heads;
  const int T = static_cast<int>(seq.size());
  const std::size_t TC = static_cast<std::size_t>(T) * C;
  acts.T = T;
  acts.encoded = embed(seq);
  acts.layers.resize(cfg_.n_layers);

  std::span<const double> x = acts.encoded;
  for (int l = 0; l < cfg_.n_layers; ++l) {
    const LayerOffsets& o = layers_[l];
    auto& a = acts.layers[l];
    a.ln1.resize(TC);
    a.ln1_mean.resize(T);
    a.ln1_rstd.resize(T);
    a.qkv.resize(3 * TC);
    a.att.resize(static_cast<std::size_t>(NH) * T * T);
    a.atty.resize(TC);
    a.attproj.resize(TC);
    a.res2.resize(TC);
    a.ln2.resize(TC);
    a.ln2_mean.resize(T);
    a.ln2_rstd.resize(T);
    a.fch.resize(static_cast<std::size_t>(T) * F);
    a.fch_gelu.resize(static_cast<std::size_t>(T) * F);
    a.fcproj.resize(TC);
    a.res3.resize(TC);

    k::layernorm_forward(a.ln1, a.ln1_mean, a.ln1_rstd, x, p(o.ln1_w, C),
                         p(o.ln1_b, C), T, C);
    k::matmul_forward(a.qkv, a.ln1, p(o.qkv_w, 3 * C * C), p(o.qkv_b, 3 * C), T, C,
                      3 * C);
    k::attention_forward(a.atty, a.att, a.qkv, T, C, NH);
    k::matmul_forward(a.attproj, a.atty, p(o.proj_w, C * C), p(o.proj_b, C), T, C, C);
    k::residual_forward(a.res2, x, a.attproj);
    k::layernorm_forward(a.ln2, a.ln2_mean, a.ln2_rstd, a.res2, p(o.ln2_w, C),
                         p(o.ln2_b, C), T, C);
    k::matmul_forward(a.fch, a.ln2, p(o.fc_w, C * F), p(o.fc_b, F), T, C, F);
    k::gelu_forward(a.fch_gelu, a.fch);
    k::matmul_forward(a.fcproj, a.fch_gelu, p(o.fcproj_w, F * C), p(o.fcproj_b, C), T,
                      F, C);
    k::residual_forward(a.res3, a.res2, a.fcproj);
    x = a.res3;
  }
  acts.hidden.resize(TC);
  acts.lnf_mean.resize(T);
  acts.lnf_rstd.resize(T);
  k::layernorm_forward(acts.hidden, acts.lnf_mean, acts.lnf_rstd, x, p(lnf_w_, C),
                       p(lnf_b_, C), T, C);
}

void Backbone::token_logits(std::span<const double> z, std::span<double> logits,
                            int N) const {
  const int C = cfg_.d_model, V = cfg_.vocab_size;
  k::matmul_forward(logits, z, p(head_w_, static_cast<std::size_t>(C) * V),
                    p(head_b_, V), N, C, V);
}

void Backbone::token_logits_backward(std::span<const double> dlogits,
                                     std::span<const double> z, std::span<double> dz,
                                     std::span<double> grads, int N) const {
  const int C = cfg_.d_model, V = cfg_.vocab_size;
  k::matmul_backward(dz, grads.subspan(head_w_, static_cast<std::size_t>(C) * V),
                     grads.subspan(head_b_, V), dlogits, z,
                     p(head_w_, static_cast<std::size_t>(C) * V), N, C, V);
}

void Backbone::backward(std::span<const HybridElement> seq,
                        const BackboneActivations& acts,
                        std::span<const double> dhidden,
                        std::span<double> grads) const {
  const int C = cfg_.d_model, F = cfg_.d_ff, NH = cfg_.n_heads;
  const int T = acts.T;
  const std::size_t TC = static_cast<std::size_t>(T) * C;
  auto g = [&](std::size_t off, std::size_t n) { return grads.subspan(off, n); };

  const int L = cfg_.n_layers;
  std::span<const double> last = L > 0 ? std::span<const double>(acts.layers[L - 1].res3)
                                       : std::span<const double>(acts.encoded);
  std::vector<double> dres(TC, 0.0);
  k::layernorm_backward(dres, g(lnf_w_, C), g(lnf_b_, C), dhidden, last, p(lnf_w_, C),
                        acts.lnf_mean, acts.lnf_rstd, T, C);

  std::vector<double> dfch_gelu, dfch, dln2, datty, dqkv, dln1, dx;
  for (int l = L - 1; l >= 0; --l) {
    const LayerOffsets& o = layers_[l];
    const auto& a = acts.layers[l];
    std::span<const double> x =
        l > 0 ? std::span<const double>(acts.layers[l - 1].res3)
              : std::span<const double>(acts.encoded);

    // dres holds dL/dres3; the residual passes it to res2 unchanged
    std::vector<double>& dres2 = dres;
    dfch_gelu.assign(static_cast<std::size_t>(T) * F, 0.0);
    k::matmul_backward(dfch_gelu, g(o.fcproj_w, F * C), g(o.fcproj_b, C), dres,
                       a.fch_gelu, p(o.fcproj_w, F * C), T, F, C);
    dfch.assign(static_cast<std::size_t>(T) * F, 0.0);
    k::gelu_backward(dfch, a.fch, dfch_gelu);
    dln2.assign(TC, 0.0);
    k::matmul_backward(dln2, g(o.fc_w, C * F), g(o.fc_b, F), dfch, a.ln2,
                       p(o.fc_w, C * F), T, C, F);
    k::layernorm_backward(dres2, g(o.ln2_w, C), g(o.ln2_b, C), dln2, a.res2,
                          p(o.ln2_w, C), a.ln2_mean, a.ln2_rstd, T, C);

    datty.assign(TC, 0.0);
    k::matmul_backward(datty, g(o.proj_w, C * C), g(o.proj_b, C), dres2, a.atty,
                       p(o.proj_w, C * C), T, C, C);
    dqkv.assign(3 * TC, 0.0);
    k::attention_backward(dqkv, datty, a.qkv, a.att, T, C, NH);
    dln1.assign(TC, 0.0);
    k::matmul_backward(dln1, g(o.qkv_w, 3 * C * C), g(o.qkv_b, 3 * C), dqkv, a.ln1,
                       p(o.qkv_w, 3 * C * C), T, C, 3 * C);
    dx = dres2;
    k::layernorm_backward(dx, g(o.ln1_w, C), g(o.ln1_b, C), dln1, x, p(o.ln1_w, C),
                          a.ln1_mean, a.ln1_rstd, T, C);
    dres.swap(dx);
  }

  for (int t = 0; t < T; ++t) {
    const double* d = dres.data() + static_cast<std::size_t>(t) * C;
    double* dpos = grads.data() + pos_emb_ + static_cast<std::size_t>(t) * C;
    for (int c = 0; c < C; ++c) dpos[c] += d[c];
    if (const auto* tok = std::get_if<Discrete>(&seq[t])) {
      double* row = grads.data() + tok_emb_ + static_cast<std::size_t>(tok->id) * C;
      for (int c = 0; c < C; ++c) row[c] += d[c];
    } else {
      const Vec3& xc = coord_of(seq[t]);
      for (int c = 0; c < C; ++c) {
        grads[coord_b_ + c] += d[c];
        for (int j = 0; j < 3; ++j) grads[coord_w_ + j * C + c] += xc[j] * d[c];
      }
    }
  }
}

}  // namespace pocketgen
