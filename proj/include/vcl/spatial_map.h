#ifndef VCL_SPATIAL_MAP_H_
#define VCL_SPATIAL_MAP_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace vcl {

struct Box2D {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  bool valid() const;
  bool operator==(const Box2D&) const = default;
};

// Throws Error(kInvalidBox) unless x1 < x2, y1 < y2, all finite and >= 0.
void ValidateBox(const Box2D& box, const char* what);

// Tight box enclosing both inputs.
Box2D UnionBox(const Box2D& a, const Box2D& b);

inline constexpr int kSpatialGrid = 64;

// Two binary channels (person, object) over a grid x grid raster of the
// pair's union box. Row-major, channel-major storage.
class SpatialMap {
 public:
  explicit SpatialMap(int grid = kSpatialGrid);

  int grid() const { return grid_; }
  bool at(int channel, int row, int col) const {
    return cells_[Index(channel, row, col)] != 0;
  }
  void set(int channel, int row, int col, bool on) {
    cells_[Index(channel, row, col)] = on ? 1 : 0;
  }
  int count(int channel) const;
  // Flattened 2*grid*grid vector: channel 0 first, each channel row-major.
  const std::vector<uint8_t>& cells() const { return cells_; }

  bool operator==(const SpatialMap&) const = default;

 private:
  size_t Index(int channel, int row, int col) const {
    return (static_cast<size_t>(channel) * grid_ + row) * grid_ + col;
  }

  int grid_;
  std::vector<uint8_t> cells_;
};

// A cell is set when its center falls in the half-open, union-normalized
// box [x1, x2) x [y1, y2). Throws Error(kInvalidBox) for invalid input and
// Error(kDegenerateBox) when a box covers no cell center.
SpatialMap EncodeSpatialMap(const Box2D& human, const Box2D& object,
                            int grid = kSpatialGrid);

// 2 * grid lines of '.'/'#', person channel first, blank line between.
std::string SpatialMapAscii(const SpatialMap& map);

}  // namespace vcl

#endif  // VCL_SPATIAL_MAP_H_
