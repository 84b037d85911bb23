#include "vcl/spatial_map.h"

#include <algorithm>
#include <cmath>

#include "vcl/error.h"

namespace vcl {

bool Box2D::valid() const {
  return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) &&
         std::isfinite(y2) && x1 >= 0 && y1 >= 0 && x1 < x2 && y1 < y2;
}

void ValidateBox(const Box2D& box, const char* what) {
  if (!box.valid()) {
    throw Error(ErrorCode::kInvalidBox,
                std::string(what) + " box (" + std::to_string(box.x1) + "," +
                    std::to_string(box.y1) + "," + std::to_string(box.x2) +
                    "," + std::to_string(box.y2) + ") is not valid");
  }
}

Box2D UnionBox(const Box2D& a, const Box2D& b) {
  return {std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
          std::max(a.y2, b.y2)};
}

SpatialMap::SpatialMap(int grid)
    : grid_(grid), cells_(2 * static_cast<size_t>(grid) * grid, 0) {}

int SpatialMap::count(int channel) const {
  int n = 0;
  const size_t plane = static_cast<size_t>(grid_) * grid_;
  for (size_t i = 0; i < plane; ++i) n += cells_[channel * plane + i];
  return n;
}

namespace {

// Cells k whose center frame_lo + (k + 0.5) * extent / grid lies in
// [lo, hi): k in [ceil(t(lo)), ceil(t(hi))) with
// t(x) = (2 * grid * (x - frame_lo) - extent) / (2 * extent). Written as one
// quotient so an exact center-on-edge case stays exact.
int FirstCellAtOrAfter(double offset, double extent, int grid) {
  return static_cast<int>(std::ceil((2.0 * grid * offset - extent) / (2.0 * extent)));
}

std::pair<int, int> CellRange(double lo, double hi, double frame_lo,
                              double extent, int grid) {
  const int first = FirstCellAtOrAfter(lo - frame_lo, extent, grid);
  const int last = FirstCellAtOrAfter(hi - frame_lo, extent, grid);
  return {std::clamp(first, 0, grid), std::clamp(last, 0, grid)};
}

void Rasterize(const Box2D& box, const Box2D& frame, int channel,
               SpatialMap& map) {
  const int grid = map.grid();
  auto [c0, c1] = CellRange(box.x1, box.x2, frame.x1, frame.width(), grid);
  auto [r0, r1] = CellRange(box.y1, box.y2, frame.y1, frame.height(), grid);
  for (int r = r0; r < r1; ++r) {
    for (int c = c0; c < c1; ++c) map.set(channel, r, c, true);
  }
}

}  // namespace

SpatialMap EncodeSpatialMap(const Box2D& human, const Box2D& object,
                            int grid) {
  ValidateBox(human, "human");
  ValidateBox(object, "object");
  const Box2D frame = UnionBox(human, object);
  SpatialMap map(grid);
  Rasterize(human, frame, 0, map);
  Rasterize(object, frame, 1, map);
  if (map.count(0) == 0 || map.count(1) == 0) {
    throw Error(ErrorCode::kDegenerateBox,
                std::string(map.count(0) == 0 ? "human" : "object") +
                    " box covers no cell center of the spatial map");
  }
  return map;
}

std::string SpatialMapAscii(const SpatialMap& map) {
  std::string out;
  for (int channel = 0; channel < 2; ++channel) {
    if (channel) out.push_back('\n');
    for (int r = 0; r < map.grid(); ++r) {
      for (int c = 0; c < map.grid(); ++c) {
        out.push_back(map.at(channel, r, c) ? '#' : '.');
      }
      out.push_back('\n');
    }
  }
  return out;
}

}  // namespace vcl
