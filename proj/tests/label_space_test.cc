#include "vcl/label_space.h"

#include <gtest/gtest.h>

#include <sstream>

#include "oracles.h"
#include "vcl/error.h"

namespace vcl {
namespace {

using testing::BruteCompose;
using testing::BruteDecompose;
using testing::RandomLabel;
using testing::RandomObjects;
using testing::RandomSpace;
using testing::RandomVerbs;
using testing::TestRng;
using testing::ToySpace;

constexpr int kRide = 0, kFeed = 1, kHorse = 0, kBicycle = 1;
constexpr int kRideHorse = 0, kFeedHorse = 1, kRideBicycle = 2;

LabelVec Hois(std::initializer_list<int> ids) {
  std::vector<int> v(ids);
  return LabelVec::FromIds(3, v);
}

TEST(LabelSpace, ToyMatricesMatchDefinitions) {
  const auto space = ToySpace();
  ASSERT_EQ(space.num_verbs(), 2);
  ASSERT_EQ(space.num_objects(), 2);
  ASSERT_EQ(space.num_hois(), 3);
  const bool ride_row[] = {true, false, true};
  const bool feed_row[] = {false, true, false};
  const bool horse_row[] = {true, true, false};
  const bool bicycle_row[] = {false, false, true};
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(space.verb_hoi(kRide, c), ride_row[c]);
    EXPECT_EQ(space.verb_hoi(kFeed, c), feed_row[c]);
    EXPECT_EQ(space.object_hoi(kHorse, c), horse_row[c]);
    EXPECT_EQ(space.object_hoi(kBicycle, c), bicycle_row[c]);
  }
  EXPECT_EQ(space.hoi_name(kFeedHorse), "feed_horse");
}

TEST(LabelSpace, BuildRejectsBadDefinitions) {
  auto code = [](std::vector<HoiDef> defs, int nv, int no) {
    try {
      HoiLabelSpace::Build(defs, nv, no);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kUsage;
  };
  EXPECT_EQ(code({}, 1, 1), ErrorCode::kEmptyDefinition);
  EXPECT_EQ(code({{{}, 0}}, 1, 1), ErrorCode::kEmptyDefinition);
  EXPECT_EQ(code({{{0}, 0}, {{0}, 0}}, 1, 1), ErrorCode::kDuplicateHoi);
  EXPECT_EQ(code({{{0}, 1}}, 1, 1), ErrorCode::kDanglingId);
  EXPECT_EQ(code({{{3}, 0}}, 1, 1), ErrorCode::kDanglingId);
  // Verb 1 declared but never used.
  EXPECT_EQ(code({{{0}, 0}}, 2, 1), ErrorCode::kDanglingId);
}

TEST(LabelSpace, ScaleOfLargeSpaces) {
  TestRng rng(3);
  std::vector<HoiDef> defs;
  for (int c = 0; c < 600; ++c) defs.push_back({{c % 117}, (c * 7) % 80});
  const auto space = HoiLabelSpace::Build(defs, 117, 80);
  EXPECT_EQ(space.num_hois(), 600);
  EXPECT_EQ(space.num_verbs(), 117);
  EXPECT_EQ(space.num_objects(), 80);
}

TEST(Decompose, ToyExamples) {
  const auto space = ToySpace();
  auto [o1, v1] = Decompose(Hois({kFeedHorse}), space);
  EXPECT_EQ(o1.ids(), std::vector<int>({kHorse}));
  EXPECT_EQ(v1.ids(), std::vector<int>({kFeed}));

  auto [o2, v2] = Decompose(Hois({kRideHorse, kRideBicycle}), space);
  EXPECT_EQ(o2.ids(), std::vector<int>({kHorse, kBicycle}));
  EXPECT_EQ(v2.ids(), std::vector<int>({kRide}));

  auto [o3, v3] = Decompose(LabelVec(3), space);
  EXPECT_FALSE(o3.any());
  EXPECT_FALSE(v3.any());
}

TEST(Decompose, RejectsWrongLength) {
  const auto space = ToySpace();
  EXPECT_THROW(Decompose(LabelVec(4), space), Error);
}

TEST(Compose, ToyExamples) {
  const auto space = ToySpace();
  const auto ride_horse = Compose(ObjectVec::FromIds(2, std::vector<int>{kHorse}),
                                  VerbVec::FromIds(2, std::vector<int>{kRide}), space);
  EXPECT_EQ(ride_horse.ids(), std::vector<int>({kRideHorse}));
  EXPECT_TRUE(IsFeasible(ride_horse));

  const auto feed_bicycle =
      Compose(ObjectVec::FromIds(2, std::vector<int>{kBicycle}),
              VerbVec::FromIds(2, std::vector<int>{kFeed}), space);
  EXPECT_FALSE(feed_bicycle.any());
  EXPECT_FALSE(IsFeasible(feed_bicycle));
}

TEST(Compose, ThreeOfFourToyPairsAreFeasible) {
  const auto space = ToySpace();
  int feasible = 0;
  for (int v = 0; v < 2; ++v) {
    for (int o = 0; o < 2; ++o) {
      feasible += IsFeasible(Compose(ObjectVec::FromIds(2, std::vector<int>{o}),
                                     VerbVec::FromIds(2, std::vector<int>{v}), space));
    }
  }
  EXPECT_EQ(feasible, 3);
}

TEST(Compose, MatchesBruteForceOnRandomSpaces) {
  TestRng rng(11);
  int mismatches = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto space = RandomSpace(rng, 10, 8, 40);
    for (int k = 0; k < 5; ++k) {
      const auto l_o = RandomObjects(rng, space.num_objects(), 0.4);
      const auto l_v = RandomVerbs(rng, space.num_verbs(), 0.4);
      mismatches += !(Compose(l_o, l_v, space) == BruteCompose(l_o, l_v, space));
      const auto y = RandomLabel(rng, space.num_hois(), 0.2);
      mismatches += !(Decompose(y, space) == BruteDecompose(y, space));
    }
  }
  EXPECT_EQ(mismatches, 0);
}

TEST(Compose, RoundTripIsSuperset) {
  TestRng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto space = RandomSpace(rng, 10, 8, 40);
    const auto y = RandomLabel(rng, space.num_hois(), 0.15);
    const auto [l_o, l_v] = Decompose(y, space);
    const auto back = Compose(l_o, l_v, space);
    for (int c = 0; c < space.num_hois(); ++c) {
      if (y.test(c)) EXPECT_TRUE(back.test(c));
    }
  }
}

TEST(Compose, RoundTripIsExactOnUniqueSingletons) {
  TestRng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto space = RandomSpace(rng, 10, 8, 40);
    for (int c = 0; c < space.num_hois(); ++c) {
      const auto& def = space.hoi(c);
      if (def.verbs.size() != 1) continue;
      bool unique = true;
      for (int k = 0; k < space.num_hois(); ++k) {
        if (k == c || space.hoi_object(k) != def.object) continue;
        for (int v : space.hoi(k).verbs) unique = unique && v != def.verbs[0];
      }
      if (!unique) continue;
      LabelVec y(space.num_hois());
      y.set(c);
      const auto [l_o, l_v] = Decompose(y, space);
      EXPECT_EQ(Compose(l_o, l_v, space), y);
    }
  }
}

TEST(Compose, MonotoneInBothArguments) {
  TestRng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const auto space = RandomSpace(rng, 10, 8, 40);
    auto l_o = RandomObjects(rng, space.num_objects(), 0.3);
    auto l_v = RandomVerbs(rng, space.num_verbs(), 0.3);
    const auto before = Compose(l_o, l_v, space);
    l_o |= RandomObjects(rng, space.num_objects(), 0.3);
    l_v |= RandomVerbs(rng, space.num_verbs(), 0.3);
    const auto after = Compose(l_o, l_v, space);
    for (int c = 0; c < space.num_hois(); ++c) {
      if (before.test(c)) EXPECT_TRUE(after.test(c));
    }
  }
}

TEST(Decompose, DistributesOverUnion) {
  TestRng rng(15);
  for (int trial = 0; trial < 200; ++trial) {
    const auto space = RandomSpace(rng, 10, 8, 40);
    const auto y1 = RandomLabel(rng, space.num_hois(), 0.2);
    const auto y2 = RandomLabel(rng, space.num_hois(), 0.2);
    LabelVec both = y1;
    both |= y2;
    auto [o1, v1] = Decompose(y1, space);
    auto [o2, v2] = Decompose(y2, space);
    o1 |= o2;
    v1 |= v2;
    const auto [ob, vb] = Decompose(both, space);
    EXPECT_EQ(ob, o1);
    EXPECT_EQ(vb, v1);
  }
}

TEST(Decompose, BatchMatchesSingle) {
  const auto space = ToySpace();
  const std::vector<LabelVec> ys = {Hois({kFeedHorse}), Hois({}),
                                    Hois({kRideHorse, kRideBicycle})};
  const auto [objects, verbs] = Decompose(ys, space);
  ASSERT_EQ(objects.size(), 3u);
  for (size_t i = 0; i < ys.size(); ++i) {
    const auto [o, v] = Decompose(ys[i], space);
    EXPECT_EQ(objects[i], o);
    EXPECT_EQ(verbs[i], v);
  }
}

TEST(LabelSpaceFile, RoundTripsRandomSpaces) {
  TestRng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const auto space = RandomSpace(rng, 10, 8, 40);
    std::stringstream buf;
    WriteLabelSpace(buf, space);
    const auto back = ReadLabelSpace(buf);
    EXPECT_EQ(back.num_hois(), space.num_hois());
    // Ids are renumbered by first appearance; the HOI list must match as
    // named (verb set, object) pairs.
    for (int c = 0; c < space.num_hois(); ++c) {
      EXPECT_EQ(back.hoi_name(c), space.hoi_name(c));
    }
  }
}

TEST(LabelSpaceFile, ParsesMultiVerbLinesAndComments) {
  std::stringstream in("# toy\n0\tride\thorse\n\n1\tfeed,ride\thorse\n2\tride\tbicycle\n");
  const auto space = ReadLabelSpace(in);
  EXPECT_EQ(space.num_hois(), 3);
  EXPECT_EQ(space.hoi(1).verbs.size(), 2u);
  EXPECT_EQ(space.object_name(1), "bicycle");
}

TEST(LabelSpaceFile, ReportsLineAndColumn) {
  std::stringstream in("0\tride\thorse\n7\tfeed\thorse\n");
  try {
    ReadLabelSpace(in);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  std::stringstream dup("0\tride\thorse\n1\tride\thorse\n");
  try {
    ReadLabelSpace(dup);
    FAIL() << "expected a duplicate";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateHoi);
  }
}

}  // namespace
}  // namespace vcl
