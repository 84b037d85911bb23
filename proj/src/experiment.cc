#include "vcl/experiment.h"

#include <cmath>
#include <filesystem>
#include <functional>

#include "vcl/error.h"
#include "vcl/text_io.h"

namespace vcl {

namespace {

struct Field {
  const char* key;
  std::function<std::string(const ExperimentSpec&)> get;
  std::function<void(ExperimentSpec&, std::string_view)> set;
};

template <typename T>
std::string ToText(const T& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<T>) {
    return FormatDouble(v);
  } else if constexpr (std::is_integral_v<T>) {
    return std::to_string(v);
  } else {
    return std::string(v);
  }
}

template <typename T>
T FromText(std::string_view text, const char* key) {
  if constexpr (std::is_same_v<T, bool>) {
    return ParseBool(text, key);
  } else if constexpr (std::is_floating_point_v<T>) {
    return ParseDouble(text, key);
  } else if constexpr (std::is_same_v<T, uint64_t>) {
    return ParseUint(text, key);
  } else if constexpr (std::is_integral_v<T>) {
    return static_cast<T>(ParseInt(text, key));
  } else {
    return std::string(text);
  }
}

// Binds a key to a member reached through `access`.
template <typename Access>
Field Bind(const char* key, Access access) {
  using T = std::remove_reference_t<decltype(access(std::declval<ExperimentSpec&>()))>;
  return Field{
      key,
      [access](const ExperimentSpec& s) {
        return ToText(access(const_cast<ExperimentSpec&>(s)));
      },
      [access, key](ExperimentSpec& s, std::string_view v) {
        access(s) = FromText<T>(v, key);
      }};
}

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    // data
    f.push_back(Bind("seed", [](ExperimentSpec& s) -> uint64_t& { return s.data.seed; }));
    f.push_back(Bind("num_verbs", [](ExperimentSpec& s) -> int& { return s.data.num_verbs; }));
    f.push_back(Bind("num_objects", [](ExperimentSpec& s) -> int& { return s.data.num_objects; }));
    f.push_back(Bind("num_hois", [](ExperimentSpec& s) -> int& { return s.data.num_hois; }));
    f.push_back(Bind("zipf_exponent", [](ExperimentSpec& s) -> double& { return s.data.zipf_exponent; }));
    f.push_back(Bind("test_zipf_exponent", [](ExperimentSpec& s) -> double& { return s.data.test_zipf_exponent; }));
    f.push_back(Bind("n_train", [](ExperimentSpec& s) -> int& { return s.data.n_train; }));
    f.push_back(Bind("n_test", [](ExperimentSpec& s) -> int& { return s.data.n_test; }));
    f.push_back(Bind("feature_dim", [](ExperimentSpec& s) -> int& { return s.data.feature_dim; }));
    f.push_back(Bind("class_sep", [](ExperimentSpec& s) -> double& { return s.data.class_sep; }));
    f.push_back(Bind("noise_sigma", [](ExperimentSpec& s) -> double& { return s.data.noise_sigma; }));
    f.push_back(Bind("multi_verb_fraction", [](ExperimentSpec& s) -> double& { return s.data.multi_verb_fraction; }));
    f.push_back(Bind("max_instances_per_image", [](ExperimentSpec& s) -> int& { return s.data.max_instances_per_image; }));
    f.push_back(Bind("data_dir", [](ExperimentSpec& s) -> std::string& { return s.data_dir; }));
    // model
    f.push_back(Bind("hidden", [](ExperimentSpec& s) -> int& { return s.train.dims.hidden; }));
    f.push_back(Bind("sp_hidden", [](ExperimentSpec& s) -> int& { return s.train.dims.sp_hidden; }));
    f.push_back(Bind("vo_hidden", [](ExperimentSpec& s) -> int& { return s.train.dims.vo_hidden; }));
    // training
    f.push_back(Bind("lr", [](ExperimentSpec& s) -> double& { return s.train.lr; }));
    f.push_back(Bind("momentum", [](ExperimentSpec& s) -> double& { return s.train.momentum; }));
    f.push_back(Bind("weight_decay", [](ExperimentSpec& s) -> double& { return s.train.weight_decay; }));
    f.push_back(Bind("iterations", [](ExperimentSpec& s) -> int& { return s.train.iterations; }));
    f.push_back(Bind("interactions_per_minibatch", [](ExperimentSpec& s) -> int& { return s.train.interactions_per_minibatch; }));
    f.push_back(Field{"compose",
                      [](const ExperimentSpec& s) { return std::string(ComposeModeName(s.train.compose.mode)); },
                      [](ExperimentSpec& s, std::string_view v) { s.train.compose.mode = ParseComposeMode(v); }});
    f.push_back(Bind("balance", [](ExperimentSpec& s) -> bool& { return s.train.compose.balance; }));
    f.push_back(Bind("unseen_allowed", [](ExperimentSpec& s) -> bool& { return s.train.compose.unseen_allowed; }));
    f.push_back(Bind("lambda1", [](ExperimentSpec& s) -> double& { return s.train.loss_weights.lambda1; }));
    f.push_back(Bind("lambda2", [](ExperimentSpec& s) -> double& { return s.train.loss_weights.lambda2; }));
    f.push_back(Bind("reweight", [](ExperimentSpec& s) -> bool& { return s.train.reweight; }));
    f.push_back(Bind("eval_every", [](ExperimentSpec& s) -> int& { return s.train.eval_every; }));
    // zero-shot
    f.push_back(Bind("split_file", [](ExperimentSpec& s) -> std::string& { return s.split_file; }));
    f.push_back(Bind("unseen_fraction", [](ExperimentSpec& s) -> double& { return s.unseen_fraction; }));
    f.push_back(Field{"split_strategy",
                      [](const ExperimentSpec& s) { return std::string(SplitStrategyName(s.split_strategy)); },
                      [](ExperimentSpec& s, std::string_view v) { s.split_strategy = ParseSplitStrategy(v); }});
    // evaluation
    f.push_back(Bind("human_threshold", [](ExperimentSpec& s) -> double& { return s.thresholds.human; }));
    f.push_back(Bind("object_threshold", [](ExperimentSpec& s) -> double& { return s.thresholds.object; }));
    f.push_back(Bind("fallback_factor", [](ExperimentSpec& s) -> double& { return s.thresholds.fallback_factor; }));
    f.push_back(Field{"branch_mode",
                      [](const ExperimentSpec& s) { return std::string(BranchModeName(s.branch_mode)); },
                      [](ExperimentSpec& s, std::string_view v) { s.branch_mode = ParseBranchMode(v); }});
    f.push_back(Field{"eval_mode",
                      [](const ExperimentSpec& s) { return std::string(EvalModeName(s.eval_mode)); },
                      [](ExperimentSpec& s, std::string_view v) { s.eval_mode = ParseEvalMode(v); }});
    f.push_back(Bind("rare_threshold", [](ExperimentSpec& s) -> int& { return s.rare_threshold; }));
    f.push_back(Bind("rare_fraction", [](ExperimentSpec& s) -> double& { return s.rare_fraction; }));
    // subcommand inputs
    f.push_back(Bind("checkpoint", [](ExperimentSpec& s) -> std::string& { return s.checkpoint; }));
    f.push_back(Bind("detections", [](ExperimentSpec& s) -> std::string& { return s.detections; }));
    f.push_back(Bind("slice_start", [](ExperimentSpec& s) -> int& { return s.slice_start; }));
    f.push_back(Bind("slice_size", [](ExperimentSpec& s) -> int& { return s.slice_size; }));
    f.push_back(Bind("sweep_lambda1", [](ExperimentSpec& s) -> std::string& { return s.sweep_lambda1; }));
    f.push_back(Bind("sweep_lambda2", [](ExperimentSpec& s) -> std::string& { return s.sweep_lambda2; }));
    f.push_back(Bind("write_detections", [](ExperimentSpec& s) -> bool& { return s.write_detections; }));
    f.push_back(Bind("dump_maps", [](ExperimentSpec& s) -> int& { return s.dump_maps; }));
    return f;
  }();
  return fields;
}

const Field& FindField(std::string_view key) {
  for (const auto& f : Fields()) {
    if (key == f.key) return f;
  }
  throw Error(ErrorCode::kUsage, "unknown setting '" + std::string(key) + "'");
}

}  // namespace

ExperimentSpec DefaultSpec() {
  ExperimentSpec spec;
  // Rare = the lowest-count 23% of classes; a count threshold of 10 leaves
  // almost none rare at this data scale.
  spec.rare_fraction = 0.23;
  return spec;
}

std::vector<std::string> SpecKeys() {
  std::vector<std::string> keys;
  for (const auto& f : Fields()) keys.emplace_back(f.key);
  return keys;
}

void ApplySetting(ExperimentSpec& spec, std::string_view key,
                  std::string_view value) {
  FindField(key).set(spec, Trim(value));
}

std::string GetSetting(const ExperimentSpec& spec, std::string_view key) {
  return FindField(key).get(spec);
}

void ApplyConfigText(ExperimentSpec& spec, std::string_view text) {
  int line_number = 0;
  for (auto line : Split(text, '\n')) {
    ++line_number;
    line = Trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParseError,
                  "config line " + std::to_string(line_number) +
                      ": expected key=value");
    }
    ApplySetting(spec, Trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void ApplyConfigFile(ExperimentSpec& spec, const std::string& path) {
  ApplyConfigText(spec, ReadFile(path));
}

std::string SerializeSpec(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& f : Fields()) out += std::string(f.key) + "=" + f.get(spec) + "\n";
  return out;
}

PreparedData PrepareData(const ExperimentSpec& spec) {
  PreparedData data;
  if (!spec.data_dir.empty()) {
    const std::filesystem::path dir(spec.data_dir);
    auto train = LoadDataset((dir / "train.tsv").string());
    auto test = LoadDataset((dir / "test.tsv").string());
    if (!(train.space == test.space)) {
      throw Error(ErrorCode::kInconsistentLabel,
                  "train and test label spaces differ");
    }
    data.space = std::move(train.space);
    data.train = std::move(train.instances);
    data.test = std::move(test.instances);
  } else {
    Dataset generated = Generate(spec.data);
    data.space = std::move(generated.space);
    data.train = std::move(generated.train);
    data.test = std::move(generated.test);
  }
  const int num_hois = data.space.num_hois();

  if (!spec.split_file.empty() || spec.unseen_fraction > 0) {
    ZeroShotSplit split;
    if (!spec.split_file.empty()) {
      split = LoadSplit(spec.split_file, num_hois);
    } else {
      const auto counts = ClassCounts(data.train, data.space);
      const int n_unseen =
          static_cast<int>(std::lround(spec.unseen_fraction * num_hois));
      split = MakeSplit(counts, data.space, n_unseen, spec.split_strategy,
                        spec.data.seed);
    }
    data.train = ApplySplit(data.train, split);
    data.partition = ZeroShotPartition(split, num_hois);
    data.split = std::move(split);
    data.train_counts = ClassCounts(data.train, data.space);
  } else {
    data.train_counts = ClassCounts(data.train, data.space);
    data.partition = spec.rare_fraction > 0
                         ? RarePartitionByFraction(data.train_counts, spec.rare_fraction)
                         : RarePartition(data.train_counts, spec.rare_threshold);
  }
  return data;
}

TrainConfig ResolveTrainConfig(const ExperimentSpec& spec,
                               const PreparedData& data) {
  TrainConfig config = spec.train;
  config.seed = spec.data.seed;
  if (data.split) {
    config.compose.unseen = data.split->UnseenMask(data.space.num_hois());
  }
  return config;
}

const EvalReport& BranchReports::get(BranchMode mode) const {
  switch (mode) {
    case BranchMode::kBoth: return both;
    case BranchMode::kVerbObjectOnly: return vo_only;
    case BranchMode::kSpatialHumanOnly: return sp_only;
  }
  return both;
}

namespace {

EvalReport EvaluateScores(const ExperimentSpec& spec, const PreparedData& data,
                          std::span<const Scores> scores,
                          const std::vector<GroundTruth>& gts,
                          BranchMode mode) {
  const auto dets = DetectionsFromScores(data.test, scores, spec.thresholds, mode);
  EvalOptions options;
  options.mode = spec.eval_mode;
  return Evaluate(dets, gts, data.space, data.partition, options);
}

}  // namespace

EvalReport EvaluateParams(const ExperimentSpec& spec, const PreparedData& data,
                          const ModelParams& params, BranchMode mode) {
  const auto scores = PredictScores(data.test, params);
  return EvaluateScores(spec, data, scores, GroundTruthFromInstances(data.test),
                        mode);
}

BranchReports EvaluateAllBranches(const ExperimentSpec& spec,
                                  const PreparedData& data,
                                  const ModelParams& params) {
  const auto scores = PredictScores(data.test, params);
  const auto gts = GroundTruthFromInstances(data.test);
  BranchReports out;
  out.both = EvaluateScores(spec, data, scores, gts, BranchMode::kBoth);
  out.vo_only = EvaluateScores(spec, data, scores, gts, BranchMode::kVerbObjectOnly);
  out.sp_only = EvaluateScores(spec, data, scores, gts, BranchMode::kSpatialHumanOnly);
  return out;
}

ExperimentResult RunExperiment(const ExperimentSpec& spec,
                               const PreparedData& data) {
  const TrainConfig config = ResolveTrainConfig(spec, data);
  EvalHook hook;
  if (config.eval_every > 0) {
    hook = [&](const ModelParams& params) {
      const auto report = EvaluateParams(spec, data, params, spec.branch_mode);
      const std::string second = data.split ? "unseen" : "rare";
      return std::make_pair(report.map("full"), report.map(second));
    };
  }
  ExperimentResult result;
  result.training = Train(data.train, data.space, config, hook);
  result.reports = EvaluateAllBranches(spec, data, result.training.params);
  return result;
}

std::string FormatMetricsLog(const TrainResult& result) {
  std::string out;
  for (const auto& rec : result.log) out += FormatRecord(rec) + "\n";
  return out;
}

}  // namespace vcl
