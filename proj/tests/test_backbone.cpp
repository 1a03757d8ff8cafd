#include <gtest/gtest.h>

#include <cmath>

#include "pocketgen/backbone.hpp"
#include "pocketgen/rng.hpp"

using namespace pocketgen;

namespace {

BackboneConfig small_cfg() {
  BackboneConfig c;
  c.d_model = 16;
  c.n_layers = 2;
  c.n_heads = 2;
  c.d_ff = 32;
  c.max_positions = 32;
  c.vocab_size = 12;
  return c;
}

std::vector<HybridElement> mixed_seq(std::uint64_t seed, int T) {
  Rng rng(seed);
  std::vector<HybridElement> s;
  for (int t = 0; t < T; ++t) {
    if (t % 3 == 2)
      s.push_back(Continuous{rng.normal3()});
    else
      s.push_back(Discrete{static_cast<TokenId>(rng.uniform_int(12))});
  }
  return s;
}

// init with a larger scale so perturbations are visible everywhere
Backbone make(std::uint64_t seed) {
  Backbone b(small_cfg());
  b.init(seed);
  Rng rng(seed + 100);
  for (double& p : b.params()) p += 0.3 * rng.normal();
  return b;
}

}  // namespace

TEST(BackboneConfig, Validation) {
  auto c = small_cfg();
  EXPECT_NO_THROW(c.validate());
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = small_cfg();
  c.vocab_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Backbone, ParameterTableLayout) {
  Backbone b(small_cfg());
  const auto& t = b.table();
  EXPECT_EQ(t.specs().front().name, "tok_emb");
  EXPECT_EQ(t.find("coord_w").shape, (std::vector<int>{3, 16}));
  EXPECT_EQ(t.find("h0.qkv_w").shape, (std::vector<int>{16, 48}));
  EXPECT_EQ(t.specs().back().name, "head_b");
  EXPECT_EQ(t.total(), b.num_params());
}

TEST(Backbone, InitScheme) {
  Backbone b(small_cfg());
  b.init(3);
  const auto p = b.params();
  const auto* g = &b.table().find("h1.ln2_w");
  for (std::size_t i = 0; i < g->size; ++i) EXPECT_EQ(p[g->offset + i], 1.0);
  const auto* cb = &b.table().find("coord_b");
  for (std::size_t i = 0; i < cb->size; ++i) EXPECT_EQ(p[cb->offset + i], 0.0);
  const auto* w = &b.table().find("tok_emb");
  double s2 = 0.0;
  for (std::size_t i = 0; i < w->size; ++i) s2 += p[w->offset + i] * p[w->offset + i];
  EXPECT_NEAR(std::sqrt(s2 / w->size), 0.02, 0.004);
  Backbone b2(small_cfg());
  b2.init(3);
  EXPECT_EQ(b, b2);
}

TEST(Embed, ZeroCoordinateIsPositionOnly) {
  Backbone b(small_cfg());
  b.init(1);
  const std::vector<HybridElement> s = {Discrete{1}, Continuous{{0, 0, 0}}};
  const auto e = b.embed(s);
  const auto* pos = &b.table().find("pos_emb");
  for (int c = 0; c < 16; ++c) EXPECT_EQ(e[16 + c], b.params()[pos->offset + 16 + c]);
}

TEST(Embed, AdditivePositions) {
  Backbone b = make(2);
  const std::vector<HybridElement> s = {Discrete{3}, Discrete{7}, Discrete{7}};
  const auto e = b.embed(s);
  const auto* pos = &b.table().find("pos_emb");
  const auto p = b.params();
  for (int c = 0; c < 16; ++c)
    EXPECT_NEAR(e[32 + c] - e[16 + c], p[pos->offset + 32 + c] - p[pos->offset + 16 + c],
                1e-15);
  EXPECT_EQ(e.size(), 3u * 16u);
}

TEST(Embed, ContinuousIsLinear) {
  Backbone b = make(4);
  const Vec3 x{0.3, -1.2, 2.0};
  const std::vector<HybridElement> s1 = {Continuous{x}};
  const std::vector<HybridElement> s2 = {Continuous{2.0 * x}};
  const std::vector<HybridElement> s0 = {Continuous{{0, 0, 0}}};
  const auto e1 = b.embed(s1), e2 = b.embed(s2), e0 = b.embed(s0);
  for (int c = 0; c < 16; ++c) EXPECT_NEAR(e2[c] - e0[c], 2.0 * (e1[c] - e0[c]), 1e-12);
}

TEST(Backbone, OverflowAndBadToken) {
  Backbone b(small_cfg());
  b.init(1);
  BackboneActivations a;
  EXPECT_THROW(b.forward(mixed_seq(1, 33), a), PositionOverflow);
  const std::vector<HybridElement> bad = {Discrete{12}};
  EXPECT_THROW(b.forward(bad, a), DataError);
}

TEST(Backbone, CausalPrefixUnchanged) {
  const Backbone b = make(5);
  const int T = 20;
  const auto base = mixed_seq(7, T);
  BackboneActivations a0;
  b.forward(base, a0);
  EXPECT_EQ(a0.hidden.size(), static_cast<std::size_t>(T) * 16);
  for (int j = 0; j < T; ++j) {
    auto s = base;
    if (is_discrete(s[j]))
      s[j] = Discrete{static_cast<TokenId>((token_of(s[j]) + 5) % 12)};
    else
      s[j] = Continuous{coord_of(s[j]) + Vec3{0.7, -0.4, 1.1}};
    BackboneActivations a1;
    b.forward(s, a1);
    for (std::size_t i = 0; i < static_cast<std::size_t>(j) * 16; ++i)
      ASSERT_EQ(a1.hidden[i], a0.hidden[i]) << "j=" << j;
    double change = 0.0;
    for (int i = j * 16; i < (j + 1) * 16; ++i) change += std::abs(a1.hidden[i] - a0.hidden[i]);
    EXPECT_GT(change, 0.0);
  }
}

TEST(Backbone, SingleElementMatchesPrefix) {
  const Backbone b = make(6);
  const auto s = mixed_seq(3, 5);
  BackboneActivations full, one;
  b.forward(s, full);
  b.forward(std::span(s).first(1), one);
  for (int c = 0; c < 16; ++c) EXPECT_EQ(one.hidden[c], full.hidden[c]);
  // one position: attention returns the value vector
  const auto& L = one.layers[0];
  for (int c = 0; c < 16; ++c) EXPECT_EQ(L.atty[c], L.qkv[32 + c]);
}

TEST(Backbone, LogitsFinite) {
  const Backbone b = make(8);
  const auto s = mixed_seq(9, 10);
  BackboneActivations a;
  b.forward(s, a);
  std::vector<double> logits(10 * 12);
  b.token_logits(a.hidden, logits, 10);
  for (double v : logits) EXPECT_TRUE(std::isfinite(v));
}

TEST(Backbone, BackwardMatchesFiniteDifferences) {
  Backbone b = make(10);
  const auto s = mixed_seq(11, 9);
  Rng rng(12);
  std::vector<double> w(9 * 16);
  for (double& x : w) x = rng.normal();
  auto loss = [&] {
    BackboneActivations a;
    b.forward(s, a);
    double v = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * a.hidden[i];
    return v;
  };
  BackboneActivations a;
  b.forward(s, a);
  std::vector<double> grads(b.num_params(), 0.0);
  b.backward(s, a, w, grads);
  double worst = 0.0;
  auto p = b.params();
  for (std::size_t i = 0; i < p.size(); i += 3) {
    const double keep = p[i];
    p[i] = keep + 1e-5;
    const double up = loss();
    p[i] = keep - 1e-5;
    const double dn = loss();
    p[i] = keep;
    const double num = (up - dn) / 2e-5;
    const double rel = std::abs(num - grads[i]) /
                       std::max({std::abs(num), std::abs(grads[i]), 1e-4});
    worst = std::max(worst, rel);
  }
  EXPECT_LT(worst, 1e-4);
}
