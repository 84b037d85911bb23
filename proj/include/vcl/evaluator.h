#ifndef VCL_EVALUATOR_H_
#define VCL_EVALUATOR_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vcl/dataset.h"
#include "vcl/label_space.h"
#include "vcl/network.h"
#include "vcl/spatial_map.h"
#include "vcl/zeroshot_split.h"

namespace vcl {

struct Detection {
  int64_t image_id = 0;
  Box2D human_box;
  Box2D object_box;
  int hoi_id = 0;
  double score = 0;
  bool operator==(const Detection&) const = default;
};

struct GroundTruth {
  int64_t image_id = 0;
  Box2D human_box;
  Box2D object_box;
  int hoi_id = 0;
};

enum class EvalMode { kDefault, kKnownObject };

EvalMode ParseEvalMode(std::string_view text);
const char* EvalModeName(EvalMode mode);

// Intersection over union; 0 when the union is empty.
double Iou(const Box2D& a, const Box2D& b);

// Named class subsets reported as separate mAP figures.
struct ClassPartition {
  std::vector<std::string> names;
  std::vector<std::vector<int>> members;
};

inline constexpr int kDefaultRareThreshold = 10;

// Full / Rare / NonRare with Rare = fewer than `threshold` training
// instances.
ClassPartition RarePartition(std::span<const int> counts,
                             int threshold = kDefaultRareThreshold);
// Full / Rare / NonRare with Rare = the round(fraction * C) classes with the
// fewest training instances (ties by id).
ClassPartition RarePartitionByFraction(std::span<const int> counts,
                                       double fraction);
// Full / Unseen / Seen.
ClassPartition ZeroShotPartition(const ZeroShotSplit& split, int num_hois);

struct EvalReport {
  EvalMode mode = EvalMode::kDefault;
  std::vector<double> ap;  // per HOI; 0 where num_gt is 0
  std::vector<int> num_gt;
  std::vector<std::string> partition_names;
  // Unweighted mean AP over the partition's classes that have ground
  // truth; NaN when none do.
  std::vector<double> partition_map;

  double map(std::string_view partition) const;
};

struct EvalOptions {
  EvalMode mode = EvalMode::kDefault;
  double iou_threshold = 0.5;  // both boxes need IoU >= this
};

// Per class: detections in descending score order (stable for ties) are
// greedily matched to the unmatched same-image ground truth with the
// highest min(human IoU, object IoU); AP integrates the precision envelope
// over all recall points. Known-object mode restricts each class to images
// whose ground truth contains that class's object. Throws
// Error(kUnknownHoiId).
EvalReport Evaluate(std::span<const Detection> detections,
                    std::span<const GroundTruth> ground_truth,
                    const HoiLabelSpace& space, const ClassPartition& partition,
                    const EvalOptions& options = {});

// All-points interpolated AP from TP flags in ranked order.
double AveragePrecision(std::span<const uint8_t> is_tp, int num_gt);

std::vector<GroundTruth> GroundTruthFromInstances(
    std::span<const Instance> instances);

struct DetectionThresholds {
  double human = 0.8;
  double object = 0.3;
  // Applied to both thresholds for an image where nothing survives.
  double fallback_factor = 0.5;
};

// Keeps instances with s_h > human and s_o > object (retrying once with
// relaxed thresholds for images left empty) and emits one detection per
// class with the fused score.
std::vector<Detection> DetectionsFromScores(std::span<const Instance> instances,
                                            std::span<const Scores> scores,
                                            const DetectionThresholds& thresholds,
                                            BranchMode mode);
std::vector<Detection> DetectionsFromModel(std::span<const Instance> instances,
                                           const ModelParams& params,
                                           const DetectionThresholds& thresholds,
                                           BranchMode mode);

// Detections file: image_id<TAB>hoi_id<TAB>score<TAB>hx1,hy1,hx2,hy2<TAB>
// ox1,oy1,ox2,oy2 per line.
void WriteDetections(std::ostream& out, std::span<const Detection> detections);
std::vector<Detection> ReadDetections(std::istream& in);

// key=value summary and a tab-separated per-class table.
std::string FormatReport(const EvalReport& report);
std::string FormatReportTable(const EvalReport& report,
                              const HoiLabelSpace& space,
                              const ClassPartition& partition);

}  // namespace vcl

#endif  // VCL_EVALUATOR_H_
