#ifndef VCL_DATASET_H_
#define VCL_DATASET_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vcl/label_space.h"
#include "vcl/rng.h"
#include "vcl/spatial_map.h"

namespace vcl {

// One human-object pair with its detection confidences, region features and
// HOI labels.
struct Instance {
  int64_t image_id = 0;
  Box2D human_box;
  Box2D object_box;
  double human_score = 1.0;
  double object_score = 1.0;
  std::vector<double> human_feat;
  std::vector<double> verb_feat;
  std::vector<double> object_feat;
  LabelVec label;
  int object_id = 0;

  bool operator==(const Instance&) const = default;
};

struct DatasetConfig {
  int num_verbs = 12;
  int num_objects = 10;
  // Explicit label space. When empty, `num_hois` random (verb, object)
  // pairs covering every verb and object are drawn from the seed.
  std::vector<HoiDef> hoi_defs;
  std::vector<std::string> verb_names;    // optional, with hoi_defs
  std::vector<std::string> object_names;  // optional, with hoi_defs
  int num_hois = 60;
  double zipf_exponent = 1.5;
  // Class skew of the test split; negative means "same as train".
  double test_zipf_exponent = -1.0;
  int n_train = 20000;
  int n_test = 3000;
  int feature_dim = 32;
  double class_sep = 1.0;
  double noise_sigma = 0.5;
  double multi_verb_fraction = 0.1;
  int max_instances_per_image = 3;
  uint64_t seed = 7;
};

// Throws Error(kInvalidConfig).
void ValidateDatasetConfig(const DatasetConfig& config);

struct Dataset {
  std::vector<Instance> train;
  std::vector<Instance> test;
  HoiLabelSpace space;
};

// Random single-verb HOI definitions covering every verb and object, with
// verb/object ids renumbered into first-appearance order so the label-space
// text format round-trips ids exactly.
std::vector<HoiDef> RandomHoiDefs(int num_verbs, int num_objects,
                                  int num_hois, Rng& rng);

// Normalized Zipf mass for ranks 1..n: p(r) ~ r^-exponent.
std::vector<double> ZipfProbabilities(int n, double exponent);

// Seeded synthetic long-tail dataset. HOI ids get a random Zipf rank; verb,
// human and object features are isotropic Gaussians around per-verb and
// per-object means on a sphere of radius class_sep, so verb and object
// evidence is shared across HOIs. Deterministic in config.seed.
Dataset Generate(const DatasetConfig& config);

// Per-HOI rank (1 = most frequent) used by Generate for this config.
std::vector<int> ZipfRanks(const DatasetConfig& config, int num_hois);

// Dataset file: '#'-prefixed header (format tag, feature_dim, instance
// count, verb/object name tables, embedded label space) followed by one
// tab-separated instance per line.
void WriteDataset(std::ostream& out, std::span<const Instance> instances,
                  const HoiLabelSpace& space);
void SaveDataset(const std::string& path, std::span<const Instance> instances,
                 const HoiLabelSpace& space);

struct LoadedDataset {
  std::vector<Instance> instances;
  HoiLabelSpace space;
};

// Throws Error(kParseError) with line/column, Error(kInconsistentLabel),
// or Error(kDimensionMismatch).
LoadedDataset ReadDataset(std::istream& in);
LoadedDataset LoadDataset(const std::string& path);

// counts[c] = number of instances whose label has bit c set.
std::vector<int> ClassCounts(std::span<const Instance> instances,
                             const HoiLabelSpace& space);

}  // namespace vcl

#endif  // VCL_DATASET_H_
