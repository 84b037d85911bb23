#include "vcl/spatial_map.h"

#include <gtest/gtest.h>

#include <random>

#include "vcl/error.h"

namespace vcl {
namespace {

// Center test in integer arithmetic: the center of cell k along an axis is
// frame_lo + (2k + 1) * extent / (2 * grid).
bool CenterInside(int k, double lo, double hi, double frame_lo, double extent,
                  int grid) {
  const long long center2g = static_cast<long long>(2 * grid * frame_lo +
                                                    (2 * k + 1) * extent);
  return center2g >= static_cast<long long>(2 * grid * lo) &&
         center2g < static_cast<long long>(2 * grid * hi);
}

bool CellInside(const Box2D& box, const Box2D& frame, int grid, int r, int c) {
  return CenterInside(c, box.x1, box.x2, frame.x1, frame.width(), grid) &&
         CenterInside(r, box.y1, box.y2, frame.y1, frame.height(), grid);
}

int BruteCount(const Box2D& box, const Box2D& frame, int grid) {
  int n = 0;
  for (int r = 0; r < grid; ++r) {
    for (int c = 0; c < grid; ++c) n += CellInside(box, frame, grid, r, c);
  }
  return n;
}

bool ChannelIsSolidRectangle(const SpatialMap& map, int channel) {
  int r0 = map.grid(), r1 = -1, c0 = map.grid(), c1 = -1;
  for (int r = 0; r < map.grid(); ++r) {
    for (int c = 0; c < map.grid(); ++c) {
      if (!map.at(channel, r, c)) continue;
      r0 = std::min(r0, r);
      r1 = std::max(r1, r);
      c0 = std::min(c0, c);
      c1 = std::max(c1, c);
    }
  }
  if (r1 < 0) return false;
  return map.count(channel) == (r1 - r0 + 1) * (c1 - c0 + 1);
}

Box2D RandomIntBox(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pos(0, 60), size(8, 60);
  const double x = pos(rng), y = pos(rng);
  return {x, y, x + size(rng), y + size(rng)};
}

TEST(SpatialMap, IdenticalBoxesFillBothChannels) {
  const Box2D b{5, 7, 105, 57};
  const auto map = EncodeSpatialMap(b, b);
  EXPECT_EQ(map.count(0), 64 * 64);
  EXPECT_EQ(map.count(1), 64 * 64);
}

TEST(SpatialMap, LeftAndRightHalves) {
  const auto map = EncodeSpatialMap({0, 0, 50, 40}, {50, 0, 100, 40});
  for (int r = 0; r < 64; ++r) {
    for (int c = 0; c < 64; ++c) {
      EXPECT_EQ(map.at(0, r, c), c < 32) << r << "," << c;
      EXPECT_EQ(map.at(1, r, c), c >= 32) << r << "," << c;
    }
  }
}

TEST(SpatialMap, AdjacentSquaresMatchCellCenterCount) {
  const Box2D human{0, 0, 10, 10}, object{10, 0, 20, 10};
  const auto map = EncodeSpatialMap(human, object);
  const Box2D frame = UnionBox(human, object);
  EXPECT_EQ(map.count(0), BruteCount(human, frame, 64));
  EXPECT_EQ(map.count(1), BruteCount(object, frame, 64));
  EXPECT_EQ(map.count(0) + map.count(1), 64 * 64);
}

TEST(SpatialMap, RandomBoxesMatchBruteForce) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const Box2D h = RandomIntBox(rng), o = RandomIntBox(rng);
    const Box2D frame = UnionBox(h, o);
    for (int grid : {5, 16, 64}) {
      SpatialMap map(grid);
      try {
        map = EncodeSpatialMap(h, o, grid);
      } catch (const Error& e) {
        ASSERT_EQ(e.code(), ErrorCode::kDegenerateBox);
        EXPECT_TRUE(BruteCount(h, frame, grid) == 0 || BruteCount(o, frame, grid) == 0);
        continue;
      }
      EXPECT_EQ(map.count(0), BruteCount(h, frame, grid));
      EXPECT_EQ(map.count(1), BruteCount(o, frame, grid));
      // Per-cell agreement, not just counts.
      for (int r = 0; r < grid; ++r) {
        for (int c = 0; c < grid; ++c) {
          EXPECT_EQ(map.at(0, r, c), CellInside(h, frame, grid, r, c));
          EXPECT_EQ(map.at(1, r, c), CellInside(o, frame, grid, r, c));
        }
      }
    }
  }
}

TEST(SpatialMap, TranslationAndScaleInvariant) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const Box2D h = RandomIntBox(rng), o = RandomIntBox(rng);
    const auto base = EncodeSpatialMap(h, o);
    std::uniform_int_distribution<int> shift(0, 500);
    const double dx = shift(rng), dy = shift(rng);
    // Power-of-two scales and integer shifts map cell centers exactly.
    for (double s : {0.5, 1.0, 2.0, 4.0}) {
      auto t = [&](const Box2D& b) {
        return Box2D{b.x1 * s + dx, b.y1 * s + dy, b.x2 * s + dx, b.y2 * s + dy};
      };
      EXPECT_EQ(EncodeSpatialMap(t(h), t(o)), base) << "scale " << s;
    }
  }
}

TEST(SpatialMap, SwappingBoxesSwapsChannels) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const Box2D h = RandomIntBox(rng), o = RandomIntBox(rng);
    const auto a = EncodeSpatialMap(h, o);
    const auto b = EncodeSpatialMap(o, h);
    for (int r = 0; r < 64; ++r) {
      for (int c = 0; c < 64; ++c) {
        ASSERT_EQ(a.at(0, r, c), b.at(1, r, c));
        ASSERT_EQ(a.at(1, r, c), b.at(0, r, c));
      }
    }
  }
}

TEST(SpatialMap, ChannelsAreSolidRectangles) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    const auto map = EncodeSpatialMap(RandomIntBox(rng), RandomIntBox(rng));
    EXPECT_TRUE(ChannelIsSolidRectangle(map, 0));
    EXPECT_TRUE(ChannelIsSolidRectangle(map, 1));
  }
}

TEST(SpatialMap, ErrorsOnBadBoxes) {
  auto code = [](const Box2D& h, const Box2D& o, int grid) {
    try {
      EncodeSpatialMap(h, o, grid);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kUsage;
  };
  EXPECT_EQ(code({10, 0, 5, 10}, {0, 0, 10, 10}, 64), ErrorCode::kInvalidBox);
  EXPECT_EQ(code({0, 0, 10, 10}, {0, 0, 0, 10}, 64), ErrorCode::kInvalidBox);
  EXPECT_EQ(code({-1, 0, 10, 10}, {0, 0, 10, 10}, 64), ErrorCode::kInvalidBox);
  EXPECT_EQ(code({0, 0, std::nan(""), 10}, {0, 0, 10, 10}, 64), ErrorCode::kInvalidBox);
  // A sliver narrower than a cell between two centers.
  EXPECT_EQ(code({0, 0, 1000, 1000}, {1, 0, 2, 1000}, 64), ErrorCode::kDegenerateBox);
}

TEST(SpatialMap, AsciiDump) {
  const auto map = EncodeSpatialMap({0, 0, 2, 4}, {2, 0, 4, 4}, 4);
  EXPECT_EQ(SpatialMapAscii(map),
            "##..\n##..\n##..\n##..\n\n..##\n..##\n..##\n..##\n");
}

}  // namespace
}  // namespace vcl
