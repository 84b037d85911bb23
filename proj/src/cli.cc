#include "vcl/cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "vcl/composer.h"
#include "vcl/error.h"
#include "vcl/experiment.h"
#include "vcl/rng.h"
#include "vcl/spatial_map.h"
#include "vcl/text_io.h"

namespace vcl {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string config;
  std::string out;
  std::map<std::string, std::string> flags;
};

ExperimentSpec ResolveSpec(const Invocation& inv) {
  ExperimentSpec spec = DefaultSpec();
  if (!inv.config.empty()) ApplyConfigFile(spec, inv.config);
  for (const auto& [key, value] : inv.flags) ApplySetting(spec, key, value);
  return spec;
}

std::string OutPath(const Invocation& inv, const std::string& name) {
  return (fs::path(inv.out) / name).string();
}

void WriteSpecFile(const Invocation& inv, const ExperimentSpec& spec) {
  WriteFile(OutPath(inv, "spec.txt"), SerializeSpec(spec));
}

std::string MapCell(double v) {
  return std::isnan(v) ? "nan" : FormatDouble(v);
}

std::string PartitionHeader(const EvalReport& report) {
  std::string s;
  for (const auto& name : report.partition_names) s += "\tmap_" + name;
  return s;
}

std::string PartitionCells(const EvalReport& report) {
  std::string s;
  for (double v : report.partition_map) s += "\t" + MapCell(v);
  return s;
}

void WriteReports(const Invocation& inv, const EvalReport& report,
                  const PreparedData& data) {
  WriteFile(OutPath(inv, "report.txt"), FormatReport(report));
  WriteFile(OutPath(inv, "report_table.tsv"),
            FormatReportTable(report, data.space, data.partition));
}

int CmdGenData(const Invocation& inv, std::ostream& out) {
  ExperimentSpec spec = ResolveSpec(inv);
  const Dataset data = Generate(spec.data);
  SaveDataset(OutPath(inv, "train.tsv"), data.train, data.space);
  SaveDataset(OutPath(inv, "test.tsv"), data.test, data.space);
  {
    std::ostringstream ls;
    WriteLabelSpace(ls, data.space);
    WriteFile(OutPath(inv, "label_space.tsv"), ls.str());
  }
  if (spec.dump_maps > 0) {
    std::string dump;
    const int n = std::min<int>(spec.dump_maps, data.train.size());
    for (int i = 0; i < n; ++i) {
      const auto& inst = data.train[i];
      dump += "# instance " + std::to_string(i) + " " +
              data.space.hoi_name(inst.label.ids().front()) + "\n";
      dump += SpatialMapAscii(EncodeSpatialMap(inst.human_box, inst.object_box));
      dump += "\n";
    }
    WriteFile(OutPath(inv, "spatial_maps.txt"), dump);
  }
  WriteSpecFile(inv, spec);
  out << "train=" << data.train.size() << " test=" << data.test.size()
      << " hois=" << data.space.num_hois() << "\n";
  return 0;
}

int CmdMakeSplits(const Invocation& inv, std::ostream& out) {
  ExperimentSpec spec = ResolveSpec(inv);
  if (spec.split_file.empty() && !(spec.unseen_fraction > 0)) {
    throw Error(ErrorCode::kUsage, "make-splits needs --unseen_fraction > 0");
  }
  const PreparedData data = PrepareData(spec);
  std::ostringstream split_text;
  WriteSplit(split_text, *data.split);
  WriteFile(OutPath(inv, "split.txt"), split_text.str());
  std::string summary = "n_unseen=" + std::to_string(data.split->unseen.size()) +
                        "\nremoved_instance_count=" +
                        std::to_string(data.split->removed_instance_count) + "\n";
  WriteFile(OutPath(inv, "split_summary.txt"), summary);
  WriteSpecFile(inv, spec);
  out << summary;
  return 0;
}

int CmdTrain(const Invocation& inv, std::ostream& out) {
  ExperimentSpec spec = ResolveSpec(inv);
  WriteSpecFile(inv, spec);
  const PreparedData data = PrepareData(spec);
  const ExperimentResult result = RunExperiment(spec, data);
  WriteFile(OutPath(inv, "metrics.log"), FormatMetricsLog(result.training));
  SaveCheckpoint(OutPath(inv, "checkpoint.txt"), result.training.params,
                 spec.data.seed);
  const EvalReport& report = result.reports.get(spec.branch_mode);
  WriteReports(inv, report, data);
  std::string branches = "branch" + PartitionHeader(result.reports.both) + "\n";
  for (BranchMode mode : {BranchMode::kBoth, BranchMode::kVerbObjectOnly,
                          BranchMode::kSpatialHumanOnly}) {
    branches += std::string(BranchModeName(mode)) +
                PartitionCells(result.reports.get(mode)) + "\n";
  }
  WriteFile(OutPath(inv, "branches.tsv"), branches);
  if (spec.write_detections) {
    const auto dets = DetectionsFromModel(data.test, result.training.params,
                                          spec.thresholds, spec.branch_mode);
    std::ostringstream d;
    WriteDetections(d, dets);
    WriteFile(OutPath(inv, "detections.tsv"), d.str());
  }
  out << FormatReport(report);
  return 0;
}

int CmdEval(const Invocation& inv, std::ostream& out) {
  ExperimentSpec spec = ResolveSpec(inv);
  WriteSpecFile(inv, spec);
  const PreparedData data = PrepareData(spec);
  std::vector<Detection> dets;
  if (!spec.detections.empty()) {
    std::ifstream in(spec.detections);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + spec.detections);
    dets = ReadDetections(in);
  } else if (!spec.checkpoint.empty()) {
    const Checkpoint ckpt = LoadCheckpoint(spec.checkpoint);
    dets = DetectionsFromModel(data.test, ckpt.params, spec.thresholds,
                               spec.branch_mode);
  } else {
    throw Error(ErrorCode::kUsage, "eval needs --checkpoint or --detections");
  }
  EvalOptions options;
  options.mode = spec.eval_mode;
  const EvalReport report =
      Evaluate(dets, GroundTruthFromInstances(data.test), data.space,
               data.partition, options);
  WriteReports(inv, report, data);
  out << FormatReport(report);
  return 0;
}

int CmdComposeDemo(const Invocation& inv, std::ostream& out) {
  ExperimentSpec spec = ResolveSpec(inv);
  WriteSpecFile(inv, spec);
  const PreparedData data = PrepareData(spec);
  const TrainConfig config = ResolveTrainConfig(spec, data);
  const int n = static_cast<int>(data.train.size());
  if (spec.slice_start < 0 || spec.slice_start >= n || spec.slice_size <= 0) {
    throw Error(ErrorCode::kOutOfRange, "slice outside the training set");
  }
  const int end = std::min(n, spec.slice_start + spec.slice_size);
  std::span<const Instance> slice(data.train.data() + spec.slice_start,
                                  end - spec.slice_start);
  Rng rng = MakeStream(spec.data.seed, "composition");
  const auto comps = ComposeBatch(slice, data.space, config.compose, rng);
  std::string table = "verb_source\tobject_source\twithin_image\tlabels\n";
  for (const auto& c : comps) {
    std::string names;
    for (int id : c.label.ids()) {
      if (!names.empty()) names += ",";
      names += data.space.hoi_name(id);
    }
    table += std::to_string(spec.slice_start + c.verb_source) + "\t" +
             std::to_string(spec.slice_start + c.object_source) + "\t" +
             (c.within_image ? "1" : "0") + "\t" + names + "\n";
  }
  WriteFile(OutPath(inv, "compositions.tsv"), table);
  out << table;
  return 0;
}

std::vector<double> SweepValues(const std::string& list, double fallback) {
  if (list.empty()) return {fallback};
  return ParseDoubleList(list, "sweep list");
}

int CmdSweep(const Invocation& inv, std::ostream& out) {
  ExperimentSpec spec = ResolveSpec(inv);
  WriteSpecFile(inv, spec);
  const PreparedData data = PrepareData(spec);
  const auto l1 = SweepValues(spec.sweep_lambda1, spec.train.loss_weights.lambda1);
  const auto l2 = SweepValues(spec.sweep_lambda2, spec.train.loss_weights.lambda2);
  std::string table;
  int run = 0;
  for (double a : l1) {
    for (double b : l2) {
      ExperimentSpec point = spec;
      point.train.loss_weights.lambda1 = a;
      point.train.loss_weights.lambda2 = b;
      const ExperimentResult result = RunExperiment(point, data);
      const EvalReport& report = result.reports.get(spec.branch_mode);
      if (table.empty()) table = "lambda1\tlambda2" + PartitionHeader(report) + "\n";
      const std::string row =
          FormatDouble(a) + "\t" + FormatDouble(b) + PartitionCells(report) + "\n";
      table += row;
      WriteFile(OutPath(inv, "metrics_" + std::to_string(run++) + ".log"),
                FormatMetricsLog(result.training));
      out << row << std::flush;
    }
  }
  WriteFile(OutPath(inv, "sweep.tsv"), table);
  return 0;
}

int CmdAblate(const Invocation& inv, std::ostream& out) {
  ExperimentSpec spec = ResolveSpec(inv);
  WriteSpecFile(inv, spec);
  const PreparedData data = PrepareData(spec);
  std::string table;
  for (ComposeMode mode : {ComposeMode::kOff, ComposeMode::kWithin,
                           ComposeMode::kBetween, ComposeMode::kBoth}) {
    ExperimentSpec point = spec;
    point.train.compose.mode = mode;
    const ExperimentResult result = RunExperiment(point, data);
    if (table.empty()) table = "compose\tbranch" + PartitionHeader(result.reports.both) + "\n";
    for (BranchMode branch : {BranchMode::kBoth, BranchMode::kVerbObjectOnly,
                              BranchMode::kSpatialHumanOnly}) {
      const std::string row = std::string(ComposeModeName(mode)) + "\t" +
                              BranchModeName(branch) +
                              PartitionCells(result.reports.get(branch)) + "\n";
      table += row;
      out << row << std::flush;
    }
    WriteFile(OutPath(inv, std::string("metrics_") + ComposeModeName(mode) + ".log"),
              FormatMetricsLog(result.training));
  }
  WriteFile(OutPath(inv, "ablation.tsv"), table);
  return 0;
}

using Command = int (*)(const Invocation&, std::ostream&);

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Visual compositional learning experiments on synthetic HOI data", "vcl"};
  app.require_subcommand(1);

  struct Entry {
    const char* name;
    const char* help;
    Command run;
  };
  const std::vector<Entry> entries = {
      {"gen-data", "generate a synthetic train/test dataset", CmdGenData},
      {"make-splits", "build a zero-shot split", CmdMakeSplits},
      {"train", "train and evaluate one model", CmdTrain},
      {"eval", "evaluate a checkpoint or a detections file", CmdEval},
      {"compose-demo", "list compositions for a slice of the training set", CmdComposeDemo},
      {"sweep", "loss-weight sweep (--lambda1/--lambda2 take comma lists)", CmdSweep},
      {"ablate", "composition mode x branch mode matrix", CmdAblate},
  };

  Invocation inv;
  const auto keys = SpecKeys();
  std::map<std::string, Command> commands;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    commands[e.name] = e.run;
    sub->add_option("--config", inv.config, "flat key=value file");
    sub->add_option("--out", inv.out, "output directory")->required();
    const bool sweep = std::string_view(e.name) == "sweep";
    for (const auto& key : keys) {
      std::string target = key;
      if (sweep && (key == "lambda1" || key == "lambda2")) target = "sweep_" + key;
      if (sweep && (key == "sweep_lambda1" || key == "sweep_lambda2")) continue;
      sub->add_option_function<std::string>(
          "--" + key, [&inv, target](const std::string& v) { inv.flags[target] = v; });
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "vcl: usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    const CLI::App* chosen = app.get_subcommands().front();
    fs::create_directories(inv.out);
    return commands.at(chosen->get_name())(inv, out);
  } catch (const Error& e) {
    err << "vcl: " << e.what() << "\n";
    return e.code() == ErrorCode::kUsage ? 2 : 1;
  } catch (const std::exception& e) {
    err << "vcl: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace vcl
