#ifndef VCL_EXPERIMENT_H_
#define VCL_EXPERIMENT_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vcl/dataset.h"
#include "vcl/evaluator.h"
#include "vcl/network.h"
#include "vcl/trainer.h"
#include "vcl/zeroshot_split.h"

namespace vcl {

// Everything needed to replay one experiment. Serialized as flat key=value
// lines; every key is also a CLI flag of the same name.
struct ExperimentSpec {
  DatasetConfig data;
  std::string data_dir;  // load train.tsv/test.tsv from here instead of generating

  TrainConfig train;

  // Zero-shot setup: a split file, or a generated split with
  // round(unseen_fraction * C) held-out HOIs. Neither means long-tail mode.
  std::string split_file;
  double unseen_fraction = 0.0;
  SplitStrategy split_strategy = SplitStrategy::kRareFirst;

  DetectionThresholds thresholds{0.0, 0.0, 0.5};
  BranchMode branch_mode = BranchMode::kBoth;
  EvalMode eval_mode = EvalMode::kDefault;
  int rare_threshold = kDefaultRareThreshold;
  // When > 0, Rare is the lowest-count fraction of classes instead of the
  // count threshold.
  double rare_fraction = 0.0;

  // Subcommand inputs.
  std::string checkpoint;
  std::string detections;
  int slice_start = 0;
  int slice_size = 8;
  std::string sweep_lambda1;
  std::string sweep_lambda2;
  bool write_detections = false;
  int dump_maps = 0;  // gen-data: ASCII spatial maps of the first N train instances
};

ExperimentSpec DefaultSpec();

std::vector<std::string> SpecKeys();
// Throws Error(kUsage) on unknown keys, Error(kParseError) on bad values.
void ApplySetting(ExperimentSpec& spec, std::string_view key,
                  std::string_view value);
std::string GetSetting(const ExperimentSpec& spec, std::string_view key);
// key=value lines; '#' comments and blank lines ignored.
void ApplyConfigText(ExperimentSpec& spec, std::string_view text);
void ApplyConfigFile(ExperimentSpec& spec, const std::string& path);
std::string SerializeSpec(const ExperimentSpec& spec);

struct PreparedData {
  HoiLabelSpace space;
  std::vector<Instance> train;  // after any zero-shot filtering
  std::vector<Instance> test;
  std::vector<int> train_counts;
  std::optional<ZeroShotSplit> split;
  ClassPartition partition;
};

PreparedData PrepareData(const ExperimentSpec& spec);

// Training configuration with zero-shot masks filled in from the data.
TrainConfig ResolveTrainConfig(const ExperimentSpec& spec,
                               const PreparedData& data);

struct BranchReports {
  EvalReport both;
  EvalReport vo_only;
  EvalReport sp_only;
  const EvalReport& get(BranchMode mode) const;
};

EvalReport EvaluateParams(const ExperimentSpec& spec, const PreparedData& data,
                          const ModelParams& params, BranchMode mode);
BranchReports EvaluateAllBranches(const ExperimentSpec& spec,
                                  const PreparedData& data,
                                  const ModelParams& params);

struct ExperimentResult {
  TrainResult training;
  BranchReports reports;
};

// Train on the prepared data and evaluate every branch mode.
ExperimentResult RunExperiment(const ExperimentSpec& spec,
                               const PreparedData& data);

std::string FormatMetricsLog(const TrainResult& result);

}  // namespace vcl

#endif  // VCL_EXPERIMENT_H_
