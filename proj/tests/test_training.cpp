#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "g2g/training.hpp"
#include "test_util.hpp"

using namespace g2g;
using testutil::tiny_config;
using testutil::toy_train;
using testutil::toy_vocab;

namespace {

std::vector<AnnotatedSentence> first(std::size_t k) {
  return {toy_train().begin(), toy_train().begin() + static_cast<std::ptrdiff_t>(k)};
}

std::vector<std::vector<double>> snapshot(const ParameterStore& p) {
  std::vector<std::vector<double>> out;
  for (const auto& [n, t] : p.entries()) out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

void accumulate_some_gradient(ParserModel& model) {
  const auto examples = prepare_examples(first(1), model.vocab());
  backward(step_loss(model, examples[0]));
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.beta1 = 1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.warmup_fraction = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(LearningRate, LinearWarmupThenConstant) {
  TrainConfig c;
  c.learning_rate = 2e-3;
  c.warmup_fraction = 0.1;
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 0, 1000), 2e-3 * 1.0 / 100.0);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 49, 1000), 2e-3 * 50.0 / 100.0);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 99, 1000), 2e-3);
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 500, 1000), 2e-3);
  c.warmup_fraction = 0.0;
  EXPECT_DOUBLE_EQ(learning_rate_at(c, 0, 1000), 2e-3);
}

TEST(AdamW, ZeroLearningRateLeavesParametersUnchanged) {
  ParserModel model(tiny_config("sent-tr-g2g"), toy_vocab());
  TrainConfig c;
  AdamW opt(model.parameters(), c);
  const auto before = snapshot(model.parameters());
  accumulate_some_gradient(model);
  opt.step(0.0);
  EXPECT_EQ(snapshot(model.parameters()), before);
}

TEST(AdamW, DecayIsDecoupledFromTheGradient) {
  // With zero gradients the Adam term vanishes and only decay acts.
  ParserModel model(tiny_config("sent-tr"), toy_vocab());
  TrainConfig c;
  c.weight_decay = 0.1;
  AdamW opt(model.parameters(), c);
  model.parameters().zero_grad();
  const auto before = snapshot(model.parameters());
  const double lr = 0.5;
  opt.step(lr);
  const auto after = snapshot(model.parameters());
  for (std::size_t i = 0; i < before.size(); ++i) {
    for (std::size_t j = 0; j < before[i].size(); ++j) {
      EXPECT_NEAR(after[i][j], before[i][j] * (1.0 - lr * 0.1), 1e-15);
    }
  }
}

TEST(AdamW, FirstStepMovesEachCoordinateByLearningRate) {
  // Bias-corrected first step is lr * g / (|g| + eps') for every coordinate.
  Tensor w = Tensor::from(1, 3, {1.0, -2.0, 0.5}, true);
  ParameterStore store;
  store.add("w", w);
  TrainConfig c;
  c.weight_decay = 0.0;
  c.epsilon = 1e-12;
  AdamW opt(store, c);
  backward(sum(mul(w, Tensor::from(1, 3, {3.0, -0.25, 1e-3}))));
  opt.step(0.01);
  EXPECT_NEAR(w.data()[0], 1.0 - 0.01, 1e-9);
  EXPECT_NEAR(w.data()[1], -2.0 + 0.01, 1e-9);
  EXPECT_NEAR(w.data()[2], 0.5 - 0.01, 1e-6);
}

TEST(AdamW, ClippingBoundsTheGlobalNorm) {
  Tensor a = Tensor::from(1, 2, {0.0, 0.0}, true);
  Tensor b = Tensor::from(1, 1, {0.0}, true);
  ParameterStore store;
  store.add("a", a);
  store.add("b", b);
  backward(sum(mul(a, Tensor::from(1, 2, {3.0, 4.0}))));
  backward(sum(mul(b, Tensor::from(1, 1, {12.0}))));
  TrainConfig c;
  AdamW opt(store, c);
  EXPECT_DOUBLE_EQ(opt.clip_gradients(1.0), 13.0);
  EXPECT_NEAR(a.grad()[0], 3.0 / 13.0, 1e-15);
  EXPECT_NEAR(b.grad()[0], 12.0 / 13.0, 1e-15);
  EXPECT_DOUBLE_EQ(opt.clip_gradients(5.0), 1.0);
  EXPECT_NEAR(a.grad()[1], 4.0 / 13.0, 1e-15);
}

TEST(Training, LossDecreasesAndReportIsWellFormed) {
  ParserModel model(tiny_config("sent-tr-g2g"), toy_vocab());
  TrainConfig c;
  c.epochs = 5;
  c.learning_rate = 3e-3;
  c.dropout = false;
  const auto result = train(model, first(10), first(5), c);
  ASSERT_EQ(result.report.epochs.size(), 5u);
  EXPECT_LT(result.report.epochs.back().loss, result.report.epochs.front().loss);
  EXPECT_GE(result.report.best_epoch, 1);
  const std::string text = result.report.serialize();
  EXPECT_EQ(text.rfind("epoch\tloss\tdev_uas\tdev_las\n", 0), 0u);
  EXPECT_NE(text.find("# best_epoch\t"), std::string::npos);
  for (const auto& e : result.report.epochs) EXPECT_LE(e.dev_las, e.dev_uas);
}

TEST(Training, ModelHoldsTheBestCheckpointAfterwards) {
  ParserModel model(tiny_config("sent-tr"), toy_vocab());
  TrainConfig c;
  c.epochs = 3;
  const auto result = train(model, first(6), first(3), c);
  EXPECT_EQ(encode_checkpoint(Checkpoint{{}, {}, to_entries(model.parameters())}),
            encode_checkpoint(Checkpoint{{}, {}, result.best.tensors}));
  const auto& best = result.report.epochs[static_cast<std::size_t>(result.report.best_epoch - 1)];
  const Scores s = score(first(3), parse_corpus(model, first(3)));
  EXPECT_NEAR(s.las, best.dev_las, 1e-9);
  for (const auto& e : result.report.epochs) EXPECT_LE(e.dev_las, best.dev_las);
}

TEST(Training, IdenticalSeedsGiveIdenticalRuns) {
  TrainConfig c;
  c.epochs = 2;
  c.seed = 17;
  ParserModel a(tiny_config("state-tr-g2g", 4), toy_vocab());
  ParserModel b(tiny_config("state-tr-g2g", 4), toy_vocab());
  const auto ra = train(a, first(5), first(2), c);
  const auto rb = train(b, first(5), first(2), c);
  EXPECT_EQ(ra.report.serialize(), rb.report.serialize());
  EXPECT_EQ(encode_checkpoint(a.to_checkpoint()), encode_checkpoint(b.to_checkpoint()));
}

TEST(Training, NonFiniteLossRaisesDivergence) {
  ParserModel model(tiny_config("sent-tr"), toy_vocab());
  for (double& v : model.parameters().get("exist.b2").data()) v = std::numeric_limits<double>::quiet_NaN();
  TrainConfig c;
  c.epochs = 1;
  try {
    train(model, first(2), first(1), c);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 1);
    EXPECT_EQ(e.step(), 1);
  }
}

TEST(Training, EmptySetsAreRejected) {
  ParserModel model(tiny_config("sent-tr"), toy_vocab());
  EXPECT_THROW(train(model, {}, first(1), TrainConfig{}), std::invalid_argument);
  EXPECT_THROW(train(model, first(1), {}, TrainConfig{}), std::invalid_argument);
}

TEST(Training, TeacherForcedAccuracyBoundsAndParseCorpus) {
  ParserModel model(tiny_config("sent-tr-g2g"), toy_vocab());
  const auto examples = prepare_examples(first(4), toy_vocab());
  const double acc = teacher_forced_accuracy(model, examples);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 100.0);
  const auto parsed = parse_corpus(model, first(4));
  ASSERT_EQ(parsed.size(), 4u);
  for (std::size_t s = 0; s < 4; ++s) {
    ASSERT_EQ(parsed[s].size(), first(4)[s].size());
    EXPECT_EQ(parsed[s].tokens[0].form, first(4)[s].tokens[0].form);
    EXPECT_EQ(parsed[s].comments, first(4)[s].comments);
  }
}

TEST(RelativeErrorReduction, KnownPairs) {
  EXPECT_NEAR(relative_error_reduction(89.07, 90.16), 9.97, 0.01);
  EXPECT_NEAR(relative_error_reduction(91.94, 92.88), 11.66, 0.01);
  EXPECT_DOUBLE_EQ(relative_error_reduction(90.0, 95.0), 50.0);
  EXPECT_DOUBLE_EQ(relative_error_reduction(90.0, 80.0), -100.0);
  EXPECT_THROW(relative_error_reduction(100.0, 99.0), std::domain_error);
  EXPECT_THROW(relative_error_reduction(50.0, 101.0), std::domain_error);
}
