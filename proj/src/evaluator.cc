#include "vcl/evaluator.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "vcl/error.h"
#include "vcl/text_io.h"

namespace vcl {

EvalMode ParseEvalMode(std::string_view text) {
  if (text == "default") return EvalMode::kDefault;
  if (text == "known_object") return EvalMode::kKnownObject;
  throw Error(ErrorCode::kInvalidConfig,
              "eval mode must be default|known_object, got '" +
                  std::string(text) + "'");
}

const char* EvalModeName(EvalMode mode) {
  return mode == EvalMode::kDefault ? "default" : "known_object";
}

double Iou(const Box2D& a, const Box2D& b) {
  const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
  const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

namespace {

ClassPartition RareSplitFromFlags(const std::vector<uint8_t>& rare) {
  ClassPartition p;
  p.names = {"full", "rare", "nonrare"};
  p.members.resize(3);
  for (size_t c = 0; c < rare.size(); ++c) {
    const int id = static_cast<int>(c);
    p.members[0].push_back(id);
    p.members[rare[c] ? 1 : 2].push_back(id);
  }
  return p;
}

}  // namespace

ClassPartition RarePartition(std::span<const int> counts, int threshold) {
  std::vector<uint8_t> rare(counts.size());
  for (size_t c = 0; c < counts.size(); ++c) rare[c] = counts[c] < threshold;
  return RareSplitFromFlags(rare);
}

ClassPartition RarePartitionByFraction(std::span<const int> counts,
                                       double fraction) {
  if (!(fraction >= 0 && fraction <= 1)) {
    throw Error(ErrorCode::kInvalidConfig, "rare fraction must lie in [0, 1]");
  }
  std::vector<int> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a] < counts[b]; });
  const auto num_rare = static_cast<size_t>(
      std::lround(fraction * static_cast<double>(counts.size())));
  std::vector<uint8_t> rare(counts.size(), 0);
  for (size_t k = 0; k < num_rare; ++k) rare[order[k]] = 1;
  return RareSplitFromFlags(rare);
}

ClassPartition ZeroShotPartition(const ZeroShotSplit& split, int num_hois) {
  ClassPartition p;
  p.names = {"full", "unseen", "seen"};
  p.members.resize(3);
  for (int c = 0; c < num_hois; ++c) p.members[0].push_back(c);
  p.members[1] = split.unseen;
  p.members[2] = split.seen;
  return p;
}

double EvalReport::map(std::string_view partition) const {
  for (size_t k = 0; k < partition_names.size(); ++k) {
    if (partition_names[k] == partition) return partition_map[k];
  }
  throw Error(ErrorCode::kInvalidConfig,
              "report has no partition '" + std::string(partition) + "'");
}

double AveragePrecision(std::span<const uint8_t> is_tp, int num_gt) {
  if (num_gt <= 0) return 0.0;
  const size_t n = is_tp.size();
  std::vector<double> precision(n), recall(n);
  int tp = 0;
  for (size_t k = 0; k < n; ++k) {
    tp += is_tp[k];
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / num_gt;
  }
  for (size_t k = n; k-- > 1;) {
    precision[k - 1] = std::max(precision[k - 1], precision[k]);
  }
  double ap = 0;
  double prev_recall = 0;
  for (size_t k = 0; k < n; ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

EvalReport Evaluate(std::span<const Detection> detections,
                    std::span<const GroundTruth> ground_truth,
                    const HoiLabelSpace& space, const ClassPartition& partition,
                    const EvalOptions& options) {
  const int num_hois = space.num_hois();
  std::vector<std::vector<const Detection*>> dets_by_class(num_hois);
  std::vector<std::vector<const GroundTruth*>> gts_by_class(num_hois);
  // Images whose ground truth mentions each object (known-object pools).
  std::vector<std::set<int64_t>> images_with_object(space.num_objects());
  for (const auto& d : detections) {
    if (d.hoi_id < 0 || d.hoi_id >= num_hois) {
      throw Error(ErrorCode::kUnknownHoiId,
                  "detection has HOI id " + std::to_string(d.hoi_id));
    }
    dets_by_class[d.hoi_id].push_back(&d);
  }
  for (const auto& g : ground_truth) {
    if (g.hoi_id < 0 || g.hoi_id >= num_hois) {
      throw Error(ErrorCode::kUnknownHoiId,
                  "ground truth has HOI id " + std::to_string(g.hoi_id));
    }
    gts_by_class[g.hoi_id].push_back(&g);
    images_with_object[space.hoi_object(g.hoi_id)].insert(g.image_id);
  }

  EvalReport report;
  report.mode = options.mode;
  report.ap.assign(num_hois, 0.0);
  report.num_gt.assign(num_hois, 0);
  for (int c = 0; c < num_hois; ++c) {
    const auto& pool = images_with_object[space.hoi_object(c)];
    auto in_pool = [&](int64_t image) {
      return options.mode == EvalMode::kDefault || pool.count(image) > 0;
    };
    std::map<int64_t, std::vector<const GroundTruth*>> gt_by_image;
    int num_gt = 0;
    for (const auto* g : gts_by_class[c]) {
      if (!in_pool(g->image_id)) continue;
      gt_by_image[g->image_id].push_back(g);
      ++num_gt;
    }
    std::vector<const Detection*> dets;
    for (const auto* d : dets_by_class[c]) {
      if (in_pool(d->image_id)) dets.push_back(d);
    }
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection* a, const Detection* b) {
                       return a->score > b->score;
                     });
    std::map<const GroundTruth*, bool> matched;
    std::vector<uint8_t> is_tp(dets.size(), 0);
    for (size_t k = 0; k < dets.size(); ++k) {
      auto it = gt_by_image.find(dets[k]->image_id);
      if (it == gt_by_image.end()) continue;
      const GroundTruth* best = nullptr;
      double best_iou = -1;
      for (const auto* g : it->second) {
        if (matched[g]) continue;
        const double pair_iou = std::min(Iou(dets[k]->human_box, g->human_box),
                                         Iou(dets[k]->object_box, g->object_box));
        if (pair_iou > best_iou) {
          best_iou = pair_iou;
          best = g;
        }
      }
      if (best && best_iou >= options.iou_threshold) {
        matched[best] = true;
        is_tp[k] = 1;
      }
    }
    report.num_gt[c] = num_gt;
    report.ap[c] = AveragePrecision(is_tp, num_gt);
  }

  report.partition_names = partition.names;
  for (const auto& members : partition.members) {
    double sum = 0;
    int n = 0;
    for (int c : members) {
      if (report.num_gt[c] == 0) continue;
      sum += report.ap[c];
      ++n;
    }
    report.partition_map.push_back(
        n ? sum / n : std::numeric_limits<double>::quiet_NaN());
  }
  return report;
}

std::vector<GroundTruth> GroundTruthFromInstances(
    std::span<const Instance> instances) {
  std::vector<GroundTruth> out;
  for (const auto& inst : instances) {
    for (int c : inst.label.ids()) {
      out.push_back({inst.image_id, inst.human_box, inst.object_box, c});
    }
  }
  return out;
}

std::vector<Detection> DetectionsFromScores(std::span<const Instance> instances,
                                            std::span<const Scores> scores,
                                            const DetectionThresholds& th,
                                            BranchMode mode) {
  if (instances.size() != scores.size()) {
    throw Error(ErrorCode::kShapeMismatch, "one Scores entry per instance");
  }
  std::map<int64_t, std::vector<size_t>> by_image;
  for (size_t i = 0; i < instances.size(); ++i) {
    by_image[instances[i].image_id].push_back(i);
  }
  std::vector<uint8_t> keep(instances.size(), 0);
  for (const auto& [image, members] : by_image) {
    auto filter = [&](double human, double object) {
      bool any = false;
      for (size_t i : members) {
        keep[i] = instances[i].human_score > human &&
                  instances[i].object_score > object;
        any = any || keep[i];
      }
      return any;
    };
    if (!filter(th.human, th.object)) {
      filter(th.human * th.fallback_factor, th.object * th.fallback_factor);
    }
  }
  std::vector<Detection> out;
  for (size_t i = 0; i < instances.size(); ++i) {
    if (!keep[i]) continue;
    const auto& inst = instances[i];
    const auto fused =
        FuseScores(inst.human_score, inst.object_score, scores[i], mode);
    for (size_t c = 0; c < fused.size(); ++c) {
      out.push_back({inst.image_id, inst.human_box, inst.object_box,
                     static_cast<int>(c), fused[c]});
    }
  }
  return out;
}

std::vector<Detection> DetectionsFromModel(std::span<const Instance> instances,
                                           const ModelParams& params,
                                           const DetectionThresholds& thresholds,
                                           BranchMode mode) {
  const auto scores = PredictScores(instances, params);
  return DetectionsFromScores(instances, scores, thresholds, mode);
}

namespace {

std::string FormatBox(const Box2D& b) {
  return FormatDouble(b.x1) + "," + FormatDouble(b.y1) + "," +
         FormatDouble(b.x2) + "," + FormatDouble(b.y2);
}

Box2D ParseBoxField(std::string_view field, int line_number) {
  const auto v = ParseDoubleList(field, "box");
  if (v.size() != 4) {
    throw Error(ErrorCode::kParseError,
                "detections line " + std::to_string(line_number) +
                    ": box needs 4 coordinates");
  }
  return {v[0], v[1], v[2], v[3]};
}

std::string FormatMap(double v) {
  return std::isnan(v) ? std::string("nan") : FormatDouble(v);
}

}  // namespace

void WriteDetections(std::ostream& out, std::span<const Detection> detections) {
  for (const auto& d : detections) {
    out << d.image_id << '\t' << d.hoi_id << '\t' << FormatDouble(d.score)
        << '\t' << FormatBox(d.human_box) << '\t' << FormatBox(d.object_box)
        << '\n';
  }
}

std::vector<Detection> ReadDetections(std::istream& in) {
  std::vector<Detection> out;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    auto text = Trim(line);
    if (text.empty() || text[0] == '#') continue;
    auto f = Split(text, '\t');
    if (f.size() != 5) {
      throw Error(ErrorCode::kParseError,
                  "detections line " + std::to_string(line_number) +
                      ": expected 5 fields");
    }
    Detection d;
    d.image_id = ParseInt(f[0], "image_id");
    d.hoi_id = static_cast<int>(ParseInt(f[1], "hoi_id"));
    d.score = ParseDouble(f[2], "score");
    if (!std::isfinite(d.score)) {
      throw Error(ErrorCode::kParseError,
                  "detections line " + std::to_string(line_number) +
                      ": score must be finite");
    }
    d.human_box = ParseBoxField(f[3], line_number);
    d.object_box = ParseBoxField(f[4], line_number);
    out.push_back(d);
  }
  return out;
}

std::string FormatReport(const EvalReport& report) {
  std::string out = std::string("mode=") + EvalModeName(report.mode) + "\n";
  for (size_t k = 0; k < report.partition_names.size(); ++k) {
    out += "map_" + report.partition_names[k] + "=" +
           FormatMap(report.partition_map[k]) + "\n";
  }
  int with_gt = 0;
  for (int n : report.num_gt) with_gt += n > 0;
  out += "classes_with_gt=" + std::to_string(with_gt) + "\n";
  return out;
}

std::string FormatReportTable(const EvalReport& report,
                              const HoiLabelSpace& space,
                              const ClassPartition& partition) {
  std::string out = "hoi_id\thoi_name\tnum_gt\tap";
  for (const auto& name : partition.names) out += "\t" + name;
  out += "\n";
  std::vector<std::vector<uint8_t>> member(partition.members.size(),
                                           std::vector<uint8_t>(space.num_hois(), 0));
  for (size_t k = 0; k < partition.members.size(); ++k) {
    for (int c : partition.members[k]) member[k][c] = 1;
  }
  for (int c = 0; c < space.num_hois(); ++c) {
    out += std::to_string(c) + "\t" + space.hoi_name(c) + "\t" +
           std::to_string(report.num_gt[c]) + "\t" + FormatDouble(report.ap[c]);
    for (const auto& m : member) out += m[c] ? "\t1" : "\t0";
    out += "\n";
  }
  return out;
}

}  // namespace vcl
