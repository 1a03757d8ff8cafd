#include <gtest/gtest.h>

#include <cmath>

#include "pocketgen/trainer.hpp"
#include "toy_fixture.hpp"

using namespace pocketgen;

namespace {

struct Fixture {
  testutil::ToyCorpus toy = testutil::load_toy();
  Batch batch() const {
    return make_batch({toy.records.begin(), toy.records.begin() + 3});
  }
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST(LearningRate, CosineEnds) {
  OptimConfig o;
  o.lr = 1e-3;
  o.min_lr_ratio = 0.1;
  o.decay_steps = 100;
  EXPECT_DOUBLE_EQ(learning_rate(o, 0), 1e-3);
  EXPECT_NEAR(learning_rate(o, 50), 0.55e-3, 1e-15);
  EXPECT_NEAR(learning_rate(o, 100), 1e-4, 1e-18);
  EXPECT_NEAR(learning_rate(o, 500), 1e-4, 1e-18);
  o.decay_steps = 0;
  EXPECT_EQ(learning_rate(o, 77), 1e-3);
}

TEST(Adam, FirstStepMagnitude) {
  std::vector<double> p = {1.0, -2.0, 0.0}, g = {0.5, -3.0, 0.0};
  AdamMoments m;
  m.reset(3);
  OptimConfig o;
  adam_update(p, g, m, 1, 0.1, o);
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -1.9, 1e-6);
  EXPECT_EQ(p[2], 0.0);
}

TEST(JointLoss, LambdaZeroIsCe) {
  const auto& f = fx();
  TrainState st = make_train_state(testutil::tiny_config(f.toy), 1);
  const Batch b = f.batch();
  Rng rng(2);
  const auto draws = draw_batch_noise(b, rng, st.model.sched.T);
  const auto l = joint_loss(b, st.model, {0.0, 0.0}, draws);
  EXPECT_EQ(l.total, l.ce);
  EXPECT_GT(l.diff, 0.0);
  const auto l1 = joint_loss(b, st.model, {1.0, 0.0}, draws);
  EXPECT_DOUBLE_EQ(l1.total, l1.ce + l1.diff);
  EXPECT_EQ(l1.ce, l.ce);
}

TEST(JointLoss, UniformLogitsGiveLogV) {
  ModelConfig cfg;
  cfg.backbone = {16, 1, 2, 32, 64, 10};
  cfg.diffusion = {8, 16, 16};
  cfg.schedule = {5, 1e-4, 0.02};
  Model m(cfg);
  m.init(3);
  for (const char* name : {"head_w", "head_b"}) {
    const auto& spec = m.backbone.table().find(name);
    for (std::size_t i = 0; i < spec.size; ++i) m.backbone.params()[spec.offset + i] = 0.0;
  }
  HybridSequence s;
  s.elements = {Discrete{special::kBos}, Discrete{7}, Discrete{8}, Discrete{special::kEos},
                Discrete{special::kBoc}, Continuous{{0.1, 0.2, 0.3}}, Discrete{special::kEoc}};
  s.ligand_start = 0;
  Batch b;
  b.sequences = {s};
  b.lengths = {s.size()};
  b.loss_mask = {std::vector<bool>(s.size(), true)};
  b.padded_length = s.size();
  b.modality_mask = {std::vector<Modality>(s.size(), Modality::Discrete)};
  b.modality_mask[0][5] = Modality::Continuous;
  Rng rng(1);
  const auto draws = draw_batch_noise(b, rng, 5);
  const auto l = joint_loss(b, m, {}, draws);
  EXPECT_NEAR(l.ce, 2.302585, 1e-6);
  EXPECT_NEAR(l.ce, std::log(10.0), 1e-12);
  EXPECT_EQ(l.n_diff, 1u);
}

TEST(JointLoss, NoLigandAtomsMeansNoDiffusionTerm) {
  const auto& f = fx();
  TrainState st = make_train_state(testutil::tiny_config(f.toy), 1);
  HybridSequence s;
  const auto& r = f.toy.records[0];
  s.elements.assign(r.elements.begin(), r.elements.begin() + r.ligand_start);
  for (TokenId t : {special::kBos, special::kEos, special::kBoc, special::kEoc})
    s.elements.push_back(Discrete{t});
  s.ligand_start = r.ligand_start;
  const Batch b = make_batch({s});
  Rng rng(3);
  const auto draws = draw_batch_noise(b, rng, st.model.sched.T);
  const auto l = joint_loss(b, st.model, {}, draws);
  EXPECT_EQ(l.diff, 0.0);
  EXPECT_EQ(l.n_diff, 0u);
  EXPECT_EQ(l.n_ce, 3u);
  EXPECT_EQ(l.total, l.ce);
}

TEST(JointLoss, EmptyMask) {
  const auto& f = fx();
  TrainState st = make_train_state(testutil::tiny_config(f.toy), 1);
  Batch b = make_batch({f.toy.records[0]});
  std::fill(b.loss_mask[0].begin(), b.loss_mask[0].end(), false);
  DrawSet draws(1);
  EXPECT_THROW(joint_loss(b, st.model, {}, draws), EmptyLossMask);
}

TEST(JointLoss, DuplicatedRowsLeaveMeansUnchanged) {
  const auto& f = fx();
  TrainState st = make_train_state(testutil::tiny_config(f.toy), 4);
  const auto& r = f.toy.records[2];
  const Batch one = make_batch({r});
  const Batch two = make_batch({r, r});
  Rng rng(5);
  const auto d1 = draw_batch_noise(one, rng, st.model.sched.T);
  DrawSet d2 = {d1[0], d1[0]};
  const auto a = joint_loss(one, st.model, {}, d1);
  const auto b = joint_loss(two, st.model, {}, d2);
  EXPECT_NEAR(a.ce, b.ce, 1e-14);
  EXPECT_NEAR(a.diff, b.diff, 1e-14);
  EXPECT_EQ(2 * a.n_ce, b.n_ce);
}

TEST(TrainStep, DescentOnFixedBatch) {
  const auto& f = fx();
  const Batch b = f.batch();
  OptimConfig o;
  o.lr = 1e-5;
  int down = 0;
  for (int trial = 0; trial < 100; ++trial) {
    TrainState st = make_train_state(testutil::tiny_config(f.toy), 100 + trial);
    Rng peek = st.rng;
    const auto draws = draw_batch_noise(b, peek, st.model.sched.T);
    const double before = joint_loss(b, st.model, {}, draws).total;
    train_step(b, st, {}, o);
    const double after = joint_loss(b, st.model, {}, draws).total;
    down += after <= before;
  }
  EXPECT_GE(down, 95);
}

TEST(TrainStep, ZeroLearningRateKeepsParams) {
  const auto& f = fx();
  TrainState st = make_train_state(testutil::tiny_config(f.toy), 6);
  const Model before = st.model;
  OptimConfig o;
  o.lr = 0.0;
  train_step(f.batch(), st, {}, o);
  EXPECT_TRUE(st.model.backbone == before.backbone);
  EXPECT_TRUE(st.model.head == before.head);
  EXPECT_EQ(st.step, 1);
}

TEST(TrainStep, SeedDeterminism) {
  const auto& f = fx();
  auto run = [&] {
    TrainState st = make_train_state(testutil::tiny_config(f.toy), 7);
    std::vector<double> stream;
    for (int i = 0; i < 5; ++i) {
      const auto m = train_step(f.batch(), st, {}, OptimConfig{});
      stream.insert(stream.end(), {m.ce, m.diff, m.total, m.grad_norm, m.lr});
    }
    return stream;
  };
  EXPECT_EQ(run(), run());
}

TEST(TrainStep, FrozenHeadUnchanged) {
  const auto& f = fx();
  TrainState st = make_train_state(testutil::tiny_config(f.toy), 8);
  st.freeze_head = true;
  const DiffusionHead head = st.model.head;
  const Backbone bb = st.model.backbone;
  train_step(f.batch(), st, {}, OptimConfig{});
  EXPECT_TRUE(st.model.head == head);
  EXPECT_FALSE(st.model.backbone == bb);
}

TEST(TrainStep, ClipLimitsUpdate) {
  const auto& f = fx();
  OptimConfig o;
  o.grad_clip = 1e-3;
  TrainState st = make_train_state(testutil::tiny_config(f.toy), 9);
  const auto m = train_step(f.batch(), st, {}, o);
  EXPECT_GT(m.grad_norm, 1e-3);
}

TEST(GradCheck, TinyJointLoss) {
  const auto& f = fx();
  const TrainState st = make_train_state(testutil::tiny_config(f.toy), 10);
  const auto r = grad_check(f.batch(), st, {});
  EXPECT_LT(r.max_rel_error, 1e-4) << "index " << r.worst_index << " analytic "
                                   << r.worst_analytic << " numeric " << r.worst_numeric;
  EXPECT_EQ(r.checked, st.model.backbone.num_params() + st.model.head.num_params());
}

TEST(GradCheck, CePathOnly) {
  const auto& f = fx();
  const TrainState st = make_train_state(testutil::tiny_config(f.toy), 11);
  EXPECT_LT(grad_check(f.batch(), st, {0.0, 0.0}).max_rel_error, 1e-4);
}

TEST(GradCheck, LabelSmoothing) {
  const auto& f = fx();
  const TrainState st = make_train_state(testutil::tiny_config(f.toy), 12);
  EXPECT_LT(grad_check(f.batch(), st, {0.5, 0.1}).max_rel_error, 1e-4);
}

TEST(GradCheck, FrozenHeadGradientsAreZero) {
  const auto& f = fx();
  TrainState st = make_train_state(testutil::tiny_config(f.toy), 13);
  Rng rng(1);
  const Batch b = f.batch();
  const auto draws = draw_batch_noise(b, rng, st.model.sched.T);
  Gradients g;
  g.zero(st.model);
  joint_loss(b, st.model, {}, draws, &g, true);
  for (double v : g.head) EXPECT_EQ(v, 0.0);
  double n = 0.0;
  for (double v : g.backbone) n += std::abs(v);
  EXPECT_GT(n, 0.0);
  st.freeze_head = true;
  const auto r = grad_check(b, st, {});
  EXPECT_LT(r.max_rel_error, 1e-4);
  EXPECT_EQ(r.checked, st.model.backbone.num_params());
}

TEST(GradCheck, SubsampleAboveLimit) {
  std::vector<double> p(50, 0.5), g(50);
  for (std::size_t i = 0; i < p.size(); ++i) g[i] = 2 * p[i];
  GradCheckOptions o;
  o.full_limit = 10;
  o.sample_size = 7;
  const auto r = finite_difference_check(p, g, [&] {
    double s = 0.0;
    for (double x : p) s += x * x;
    return s;
  }, o);
  EXPECT_EQ(r.checked, 7u);
  EXPECT_LT(r.max_rel_error, 1e-8);
  for (double x : p) EXPECT_EQ(x, 0.5);
}
