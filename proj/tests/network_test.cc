#include "vcl/network.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.h"
#include "vcl/composer.h"
#include "vcl/error.h"
#include "vcl/rng.h"

namespace vcl {
namespace {

using testing::RandomBatch;
using testing::RandomParams;
using testing::RandomWeights;
using testing::RandomSpace;
using testing::SmallDims;
using testing::TestRng;

double MaxRelDiff(const std::vector<double>& a, const Eigen::VectorXd& b) {
  double worst = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
  }
  return worst;
}

struct Fixture {
  HoiLabelSpace space;
  ModelParams params;
  std::vector<Instance> batch;
};

Fixture MakeFixture(TestRng& rng, int batch_size = 4) {
  Fixture f;
  f.space = RandomSpace(rng, 4, 3, 6);
  f.params = RandomParams(SmallDims(f.space.num_hois()), rng);
  f.batch = RandomBatch(rng, f.space, batch_size, 2, f.params.dims.feature_dim);
  return f;
}

TEST(Forward, ZeroWeightsGiveHalfProbabilities) {
  const auto dims = SmallDims(5);
  const auto p = ModelParams::Zeros(dims);
  const std::vector<double> x(dims.feature_dim, 0.7);
  EXPECT_TRUE(ForwardVerbObject(x, x, p).isZero());
  const auto map = EncodeSpatialMap({0, 0, 10, 10}, {5, 5, 20, 20}, dims.grid);
  EXPECT_TRUE(ForwardSpatialHuman(x, map, p).isZero());
  Instance inst;
  inst.human_box = {0, 0, 10, 10};
  inst.object_box = {5, 5, 20, 20};
  inst.human_feat = inst.verb_feat = inst.object_feat = x;
  inst.label = LabelVec(5);
  for (const auto& s : PredictScores(std::vector<Instance>{inst}, p)) {
    for (double v : s.sp) EXPECT_EQ(v, 0.5);
    for (double v : s.verb_obj) EXPECT_EQ(v, 0.5);
  }
}

TEST(Forward, MatchesLoopReference) {
  TestRng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    auto f = MakeFixture(rng);
    for (const auto& inst : f.batch) {
      const auto vo = ForwardVerbObject(inst.verb_feat, inst.object_feat, f.params);
      EXPECT_LT(MaxRelDiff(testing::ReferenceVerbObject(inst.verb_feat, inst.object_feat,
                                                         f.params), vo), 1e-6);
      const auto map = EncodeSpatialMap(inst.human_box, inst.object_box, f.params.dims.grid);
      const auto sp = ForwardSpatialHuman(inst.human_feat, map, f.params);
      EXPECT_LT(MaxRelDiff(testing::ReferenceSpatialHuman(inst.human_feat, map, f.params),
                           sp), 1e-6);
      EXPECT_EQ(ForwardVerbObject(inst.verb_feat, inst.object_feat, f.params), vo);
    }
  }
}

TEST(Forward, FullSizeDefaultsMatchReference) {
  TestRng rng(42);
  ModelDims dims;
  const auto space = RandomSpace(rng, 12, 10, 60);
  dims.num_hois = space.num_hois();
  const auto p = RandomParams(dims, rng);
  const auto batch = RandomBatch(rng, space, 3, 2, dims.feature_dim);
  for (const auto& inst : batch) {
    const auto map = EncodeSpatialMap(inst.human_box, inst.object_box);
    EXPECT_LT(MaxRelDiff(testing::ReferenceSpatialHuman(inst.human_feat, map, p),
                         ForwardSpatialHuman(inst.human_feat, map, p)), 1e-6);
  }
}

TEST(Forward, RejectsBadInput) {
  const auto p = ModelParams::Zeros(SmallDims(3));
  const std::vector<double> good(4, 0.0), short_vec(3, 0.0);
  std::vector<double> bad = good;
  bad[1] = std::nan("");
  auto code = [&](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kUsage;
  };
  EXPECT_EQ(code([&] { ForwardVerbObject(short_vec, good, p); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(code([&] { ForwardVerbObject(good, bad, p); }), ErrorCode::kNonFiniteInput);
  const auto map64 = EncodeSpatialMap({0, 0, 1, 1}, {0, 0, 2, 2});
  EXPECT_EQ(code([&] { ForwardSpatialHuman(good, map64, p); }),
            ErrorCode::kDimensionMismatch);
}

TEST(Loss, AllZeroCaseIsClosedForm) {
  const auto space = testing::ToySpace();
  const auto dims = SmallDims(3);
  const auto p = ModelParams::Zeros(dims);
  TestRng rng(43);
  auto inst = testing::RandomInstance(rng, space, dims.feature_dim, 1);
  inst.label = LabelVec(3);
  LossWeights w;
  w.class_weights = {0.5, 1, 2};
  const double expected = 3 * std::log(2.0) * (3.5 / 3);
  const auto loss = LossTotal(std::vector<Instance>{inst}, {}, p, w);
  EXPECT_NEAR(loss.sp, expected, 1e-12);
  EXPECT_NEAR(loss.verb_obj, expected, 1e-12);
  EXPECT_EQ(loss.comp, 0.0);
}

TEST(Loss, MatchesScalarReference) {
  TestRng rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    auto f = MakeFixture(rng, 5);
    Rng s = MakeStream(trial, "composition");
    ComposeConfig cfg;
    cfg.balance = false;
    const auto comp = ComposeBatch(f.batch, f.space, cfg, s);
    LossWeights w;
    w.lambda1 = 1.3;
    w.lambda2 = 0.7;
    w.class_weights = RandomWeights(rng, f.space.num_hois());
    const auto got = LossTotal(f.batch, comp, f.params, w);
    const auto want = testing::ReferenceLoss(f.batch, comp, f.params, w);
    EXPECT_NEAR(got.sp, want.sp, 1e-6 * want.sp);
    EXPECT_NEAR(got.verb_obj, want.verb_obj, 1e-6 * want.verb_obj);
    EXPECT_NEAR(got.comp, want.comp, 1e-6 * std::max(want.comp, 1e-12));
    EXPECT_NEAR(got.total, want.total, 1e-6 * want.total);
  }
}

TEST(Loss, LambdaTwoZeroDropsCompositionTerm) {
  TestRng rng(45);
  auto f = MakeFixture(rng, 5);
  Rng s = MakeStream(1, "composition");
  const auto comp = ComposeBatch(f.batch, f.space, ComposeConfig{}, s);
  ASSERT_FALSE(comp.empty());
  LossWeights w;
  w.lambda2 = 0;
  const auto with = LossTotal(f.batch, comp, f.params, w);
  const auto without = LossTotal(f.batch, {}, f.params, w);
  EXPECT_EQ(with.total, without.total);
  EXPECT_EQ(with.total, without.sp + w.lambda1 * without.verb_obj);
}

TEST(Loss, InvariantToInstanceOrder) {
  TestRng rng(46);
  auto f = MakeFixture(rng, 6);
  const auto a = LossTotal(f.batch, {}, f.params, LossWeights{});
  std::reverse(f.batch.begin(), f.batch.end());
  const auto b = LossTotal(f.batch, {}, f.params, LossWeights{});
  EXPECT_NEAR(a.total, b.total, 1e-12 * a.total);
}

TEST(Loss, CompositionSharesTheVerbObjectClassifier) {
  TestRng rng(47);
  auto f = MakeFixture(rng, 4);
  std::vector<CompositedInstance> mirror;
  for (const auto& inst : f.batch) {
    mirror.push_back({&inst.verb_feat, &inst.object_feat, inst.label, 0, 0, false});
  }
  const auto loss = LossTotal(f.batch, mirror, f.params, LossWeights{});
  EXPECT_NEAR(loss.comp, loss.verb_obj, 1e-12 * loss.verb_obj);
}

TEST(Loss, RejectsBadWeights) {
  TestRng rng(48);
  auto f = MakeFixture(rng);
  LossWeights w;
  w.class_weights.assign(f.space.num_hois(), 1.0);
  w.class_weights[0] = -1;
  EXPECT_THROW(LossTotal(f.batch, {}, f.params, w), Error);
  w.class_weights.assign(2, 1.0);
  EXPECT_THROW(LossTotal(f.batch, {}, f.params, w), Error);
  EXPECT_THROW(LossTotal({}, {}, f.params, LossWeights{}), Error);
}

TEST(Gradient, MatchesFiniteDifferences) {
  TestRng rng(49);
  for (int trial = 0; trial < 12; ++trial) {
    auto f = MakeFixture(rng, 4);
    Rng s = MakeStream(trial, "composition");
    ComposeConfig cfg;
    cfg.balance = false;
    const auto comp = ComposeBatch(f.batch, f.space, cfg, s);
    LossWeights w;
    std::uniform_real_distribution<double> lam(0.0, 3.0);
    w.lambda1 = lam(rng);
    w.lambda2 = lam(rng);
    w.class_weights = RandomWeights(rng, f.space.num_hois());
    ModelParams grad;
    LossAndGradient(f.batch, comp, f.params, w, grad);
    // A step of 1e-4 can push a ReLU pre-activation across zero.
    const auto fd = testing::FiniteDifferenceGradient(f.batch, comp, f.params, w, 1e-6);
    const auto errors = testing::BlockRelativeErrors(grad, fd);
    const auto blocks = grad.Blocks();
    for (size_t b = 0; b < errors.size(); ++b) {
      EXPECT_LT(errors[b], 1e-3) << blocks[b].name << " trial " << trial;
    }
  }
}

TEST(Gradient, ZeroClassWeightsGiveZeroGradient) {
  TestRng rng(50);
  auto f = MakeFixture(rng);
  LossWeights w;
  w.class_weights.assign(f.space.num_hois(), 0.0);
  ModelParams grad;
  LossAndGradient(f.batch, {}, f.params, w, grad);
  for (const auto& block : grad.Blocks()) {
    for (double v : block.values) EXPECT_EQ(v, 0.0);
  }
}

TEST(Gradient, SharedStreamStillLearnsThroughHumanPath) {
  TestRng rng(51);
  auto f = MakeFixture(rng);
  LossWeights w;
  w.lambda1 = 0;
  w.lambda2 = 0;
  ModelParams grad;
  LossAndGradient(f.batch, {}, f.params, w, grad);
  EXPECT_GT(grad.stream_w.norm(), 0.0);
  EXPECT_EQ(grad.object_w.norm(), 0.0);
  EXPECT_EQ(grad.vo_w3.norm(), 0.0);
}

TEST(Gradient, SmallStepDescends) {
  TestRng rng(52);
  for (int trial = 0; trial < 10; ++trial) {
    auto f = MakeFixture(rng, 5);
    ModelParams grad;
    const double before = LossAndGradient(f.batch, {}, f.params, LossWeights{}, grad).total;
    ModelParams stepped = f.params;
    auto sb = stepped.Blocks();
    const auto gb = std::as_const(grad).Blocks();
    for (size_t b = 0; b < sb.size(); ++b) {
      for (size_t k = 0; k < sb[b].values.size(); ++k) sb[b].values[k] -= 1e-4 * gb[b].values[k];
    }
    EXPECT_LT(LossTotal(f.batch, {}, stepped, LossWeights{}).total, before);
  }
}

TEST(WeightSharing, OnlyTheSharedStreamMovesBothBranches) {
  TestRng rng(53);
  auto f = MakeFixture(rng, 3);
  const auto base = PredictScores(f.batch, f.params);
  const auto names = std::as_const(f.params).Blocks();
  for (size_t b = 0; b < names.size(); ++b) {
    ModelParams changed = f.params;
    for (double& v : changed.Blocks()[b].values) v += 0.05;
    const auto moved = PredictScores(f.batch, changed);
    bool sp_moved = false, vo_moved = false;
    for (size_t i = 0; i < base.size(); ++i) {
      sp_moved = sp_moved || moved[i].sp != base[i].sp;
      vo_moved = vo_moved || moved[i].verb_obj != base[i].verb_obj;
    }
    const std::string name(names[b].name);
    if (name == "stream_w" || name == "stream_b") {
      EXPECT_TRUE(sp_moved && vo_moved) << name;
    } else {
      EXPECT_FALSE(sp_moved && vo_moved) << name;
    }
  }
}

TEST(Reweighting, InverseLogFrequency) {
  const std::vector<int> counts = {0, 1, 9, 99};
  const auto w = InverseLogFrequencyWeights(counts);
  const double raw[] = {1 / std::log(2.0), 1 / std::log(2.0), 1 / std::log(10.0),
                        1 / std::log(100.0)};
  const double mean = (raw[0] + raw[1] + raw[2] + raw[3]) / 4;
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(w[c], raw[c] / mean, 1e-12);
}

TEST(Fuse, Examples) {
  Scores s{{0.5, 0.2, 1.0}, {0.5, 0.4, 0.3}};
  for (double v : FuseScores(0.0, 0.7, s)) EXPECT_EQ(v, 0.0);
  const auto identity = FuseScores(1.0, 1.0, s);
  for (int c = 0; c < 3; ++c) EXPECT_DOUBLE_EQ(identity[c], s.sp[c] * s.verb_obj[c]);
  EXPECT_NEAR(FuseScores(0.9, 0.8, s)[0], 0.18, 1e-15);
  const auto vo = FuseScores(0.9, 0.8, s, BranchMode::kVerbObjectOnly);
  EXPECT_NEAR(vo[1], 0.9 * 0.8 * 0.4, 1e-15);
  const auto sp = FuseScores(0.9, 0.8, s, BranchMode::kSpatialHumanOnly);
  EXPECT_NEAR(sp[1], 0.9 * 0.8 * 0.2, 1e-15);
  EXPECT_THROW(FuseScores(1.2, 0.5, s), Error);
  Scores bad{{0.5}, {-0.1}};
  EXPECT_THROW(FuseScores(0.5, 0.5, bad), Error);
}

TEST(Fuse, MonotoneAndArgmaxStable) {
  TestRng rng(54);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Scores s{{u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}};
    const double h = u(rng), o = u(rng);
    const auto a = FuseScores(h, o, s);
    const auto b = FuseScores(std::min(1.0, h + 0.1), o, s);
    for (int c = 0; c < 3; ++c) EXPECT_LE(a[c], b[c]);
    const auto unit = FuseScores(1.0, 1.0, s);
    if (h > 0 && o > 0) {
      EXPECT_EQ(std::max_element(a.begin(), a.end()) - a.begin(),
                std::max_element(unit.begin(), unit.end()) - unit.begin());
    }
  }
}

TEST(Checkpoint, RoundTripsExactly) {
  TestRng rng(55);
  auto f = MakeFixture(rng);
  std::stringstream buf;
  WriteCheckpoint(buf, f.params, 99);
  const auto back = ReadCheckpoint(buf);
  EXPECT_EQ(back.seed, 99u);
  EXPECT_TRUE(back.params == f.params);
  std::stringstream broken("vcl-checkpoint 1\nfeature_dim x\n");
  EXPECT_THROW(ReadCheckpoint(broken), Error);
}

TEST(BranchMode, ParsesNames) {
  for (auto m : {BranchMode::kBoth, BranchMode::kVerbObjectOnly,
                 BranchMode::kSpatialHumanOnly}) {
    EXPECT_EQ(ParseBranchMode(BranchModeName(m)), m);
  }
  EXPECT_THROW(ParseBranchMode("neither"), Error);
}

}  // namespace
}  // namespace vcl
