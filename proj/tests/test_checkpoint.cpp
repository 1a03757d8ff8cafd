#include <gtest/gtest.h>

#include "pocketgen/checkpoint.hpp"
#include "toy_fixture.hpp"

using namespace pocketgen;

namespace {

const testutil::ToyCorpus& toy() {
  static const testutil::ToyCorpus t = testutil::load_toy();
  return t;
}

TrainState trained(int steps) {
  TrainState st = make_train_state(testutil::tiny_config(toy()), 21);
  const Batch b = make_batch(toy().records);
  for (int i = 0; i < steps; ++i) train_step(b, st, {}, OptimConfig{});
  return st;
}

}  // namespace

TEST(Checkpoint, EncodeDecodeEncodeIsIdentical) {
  const TrainState st = trained(3);
  const std::string a = encode_checkpoint(st);
  const TrainState back = decode_checkpoint(a);
  EXPECT_EQ(encode_checkpoint(back), a);
  EXPECT_TRUE(back.model.backbone == st.model.backbone);
  EXPECT_TRUE(back.model.head == st.model.head);
  EXPECT_EQ(back.backbone_moments, st.backbone_moments);
  EXPECT_EQ(back.head_moments, st.head_moments);
  EXPECT_EQ(back.step, 3);
  EXPECT_TRUE(back.rng == st.rng);
  EXPECT_EQ(back.model.cfg, st.model.cfg);
  EXPECT_EQ(a.substr(0, 6), "TDSBDD");
}

TEST(Checkpoint, FilesAreByteIdentical) {
  const auto dir = testutil::fresh_dir("ckpt");
  const TrainState st = trained(2);
  save_checkpoint(st, dir / "a.ckpt");
  save_checkpoint(load_checkpoint(dir / "a.ckpt"), dir / "b.ckpt");
  EXPECT_EQ(testutil::read_text(dir / "a.ckpt"), testutil::read_text(dir / "b.ckpt"));
}

TEST(Checkpoint, FrozenFlagSurvives) {
  TrainState st = trained(0);
  st.freeze_head = true;
  EXPECT_TRUE(decode_checkpoint(encode_checkpoint(st)).freeze_head);
}

TEST(Checkpoint, WrongMagic) {
  std::string bytes = encode_checkpoint(trained(0));
  bytes[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bytes), VersionMismatch);
  EXPECT_THROW(decode_checkpoint("TD"), VersionMismatch);
}

TEST(Checkpoint, WrongVersion) {
  std::string bytes = encode_checkpoint(trained(0));
  bytes[6] = 7;
  EXPECT_THROW(decode_checkpoint(bytes), VersionMismatch);
}

TEST(Checkpoint, TruncatedReportsOffset) {
  const std::string bytes = encode_checkpoint(trained(1));
  for (std::size_t cut : {std::size_t{20}, bytes.size() / 2, bytes.size() - 3}) {
    try {
      decode_checkpoint(bytes.substr(0, cut));
      FAIL() << cut;
    } catch (const CorruptFile& e) {
      EXPECT_LE(e.offset(), cut);
    }
  }
}

TEST(Checkpoint, TrailingBytes) {
  EXPECT_THROW(decode_checkpoint(encode_checkpoint(trained(0)) + "x"), CorruptFile);
}

TEST(Checkpoint, MissingFile) {
  EXPECT_THROW(load_checkpoint("/nonexistent/dir/x.ckpt"), DataError);
}

TEST(Checkpoint, ResumeMatchesUninterrupted) {
  const Batch b = make_batch(toy().records);
  OptimConfig o;
  o.decay_steps = 8;
  auto metrics = [](const StepMetrics& m) {
    return std::vector<double>{m.ce, m.diff, m.total, m.grad_norm, m.lr};
  };
  TrainState full = make_train_state(testutil::tiny_config(toy()), 22);
  std::vector<std::vector<double>> a, r;
  for (int i = 0; i < 8; ++i) a.push_back(metrics(train_step(b, full, {}, o)));

  TrainState part = make_train_state(testutil::tiny_config(toy()), 22);
  for (int i = 0; i < 4; ++i) r.push_back(metrics(train_step(b, part, {}, o)));
  TrainState resumed = decode_checkpoint(encode_checkpoint(part));
  for (int i = 0; i < 4; ++i) r.push_back(metrics(train_step(b, resumed, {}, o)));
  EXPECT_EQ(a, r);
  EXPECT_EQ(encode_checkpoint(full), encode_checkpoint(resumed));
}
