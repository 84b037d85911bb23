#include "vcl/network.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vcl/error.h"
#include "vcl/text_io.h"

namespace vcl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ModelParams ModelParams::Zeros(const ModelDims& d) {
  if (d.feature_dim < 1 || d.hidden < 1 || d.sp_hidden < 1 ||
      d.vo_hidden < 1 || d.num_hois < 1 || d.grid < 1) {
    throw Error(ErrorCode::kInvalidConfig, "model dimensions must be >= 1");
  }
  ModelParams p;
  p.dims = d;
  p.stream_w = MatrixXd::Zero(d.hidden, d.feature_dim);
  p.stream_b = VectorXd::Zero(d.hidden);
  p.object_w = MatrixXd::Zero(d.hidden, d.feature_dim);
  p.object_b = VectorXd::Zero(d.hidden);
  p.sp_w1 = MatrixXd::Zero(d.sp_hidden, d.hidden + d.spatial_dim());
  p.sp_b1 = VectorXd::Zero(d.sp_hidden);
  p.sp_w2 = MatrixXd::Zero(d.num_hois, d.sp_hidden);
  p.sp_b2 = VectorXd::Zero(d.num_hois);
  p.vo_w1 = MatrixXd::Zero(d.vo_hidden, 2 * d.hidden);
  p.vo_b1 = VectorXd::Zero(d.vo_hidden);
  p.vo_w2 = MatrixXd::Zero(d.vo_hidden, d.vo_hidden);
  p.vo_b2 = VectorXd::Zero(d.vo_hidden);
  p.vo_w3 = MatrixXd::Zero(d.num_hois, d.vo_hidden);
  p.vo_b3 = VectorXd::Zero(d.num_hois);
  return p;
}

ModelParams ModelParams::Init(const ModelDims& dims, Rng& rng) {
  ModelParams p = Zeros(dims);
  // Matrices are filled column by column in block order so the draw
  // sequence is fixed.
  for (auto& block : p.Blocks()) {
    if (block.cols == 1) continue;  // bias
    const double limit = std::sqrt(6.0 / block.cols);
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : block.values) v = dist(rng);
  }
  return p;
}

namespace {

template <typename Self, typename Block>
std::vector<Block> CollectBlocks(Self& p) {
  std::vector<Block> out;
  auto add = [&](std::string_view name, auto& m) {
    out.push_back(Block{name, {m.data(), static_cast<size_t>(m.size())},
                        static_cast<int>(m.rows()),
                        static_cast<int>(m.cols())});
  };
  add("stream_w", p.stream_w);
  add("stream_b", p.stream_b);
  add("object_w", p.object_w);
  add("object_b", p.object_b);
  add("sp_w1", p.sp_w1);
  add("sp_b1", p.sp_b1);
  add("sp_w2", p.sp_w2);
  add("sp_b2", p.sp_b2);
  add("vo_w1", p.vo_w1);
  add("vo_b1", p.vo_b1);
  add("vo_w2", p.vo_w2);
  add("vo_b2", p.vo_b2);
  add("vo_w3", p.vo_w3);
  add("vo_b3", p.vo_b3);
  return out;
}

}  // namespace

std::vector<ParamBlock> ModelParams::Blocks() {
  return CollectBlocks<ModelParams, ParamBlock>(*this);
}

std::vector<ConstParamBlock> ModelParams::Blocks() const {
  return CollectBlocks<const ModelParams, ConstParamBlock>(*this);
}

size_t ModelParams::num_values() const {
  size_t n = 0;
  for (const auto& b : Blocks()) n += b.values.size();
  return n;
}

bool ModelParams::AllFinite() const {
  for (const auto& b : Blocks()) {
    for (double v : b.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

bool ModelParams::operator==(const ModelParams& other) const {
  if (!(dims == other.dims)) return false;
  auto a = Blocks();
  auto b = other.Blocks();
  for (size_t i = 0; i < a.size(); ++i) {
    if (!std::equal(a[i].values.begin(), a[i].values.end(),
                    b[i].values.begin())) {
      return false;
    }
  }
  return true;
}

namespace {

MatrixXd ReluMask(const MatrixXd& activations) {
  return (activations.array() > 0.0).cast<double>().matrix();
}

// Activations of the verb-object head for a column batch.
struct VerbObjectPass {
  MatrixXd xv, xo, hv, ho, a1, a2, logits;
};

void RunVerbObject(const ModelParams& p, VerbObjectPass& s) {
  const int h = p.dims.hidden;
  s.hv = ((p.stream_w * s.xv).colwise() + p.stream_b).cwiseMax(0.0);
  s.ho = ((p.object_w * s.xo).colwise() + p.object_b).cwiseMax(0.0);
  s.a1 = ((p.vo_w1.leftCols(h) * s.hv + p.vo_w1.rightCols(h) * s.ho)
              .colwise() +
          p.vo_b1)
             .cwiseMax(0.0);
  s.a2 = ((p.vo_w2 * s.a1).colwise() + p.vo_b2).cwiseMax(0.0);
  s.logits = (p.vo_w3 * s.a2).colwise() + p.vo_b3;
}

void BackVerbObject(const ModelParams& p, const VerbObjectPass& s,
                    const MatrixXd& dlogits, ModelParams& g) {
  const int h = p.dims.hidden;
  g.vo_w3.noalias() += dlogits * s.a2.transpose();
  g.vo_b3 += dlogits.rowwise().sum();
  MatrixXd da2 = (p.vo_w3.transpose() * dlogits).cwiseProduct(ReluMask(s.a2));
  g.vo_w2.noalias() += da2 * s.a1.transpose();
  g.vo_b2 += da2.rowwise().sum();
  MatrixXd da1 = (p.vo_w2.transpose() * da2).cwiseProduct(ReluMask(s.a1));
  g.vo_w1.leftCols(h).noalias() += da1 * s.hv.transpose();
  g.vo_w1.rightCols(h).noalias() += da1 * s.ho.transpose();
  g.vo_b1 += da1.rowwise().sum();
  MatrixXd dhv =
      (p.vo_w1.leftCols(h).transpose() * da1).cwiseProduct(ReluMask(s.hv));
  MatrixXd dho =
      (p.vo_w1.rightCols(h).transpose() * da1).cwiseProduct(ReluMask(s.ho));
  g.stream_w.noalias() += dhv * s.xv.transpose();
  g.stream_b += dhv.rowwise().sum();
  g.object_w.noalias() += dho * s.xo.transpose();
  g.object_b += dho.rowwise().sum();
}

struct SpatialHumanPass {
  MatrixXd xh, map, hh, z1, logits;
};

void RunSpatialHuman(const ModelParams& p, SpatialHumanPass& s) {
  const int h = p.dims.hidden;
  const int sd = p.dims.spatial_dim();
  s.hh = ((p.stream_w * s.xh).colwise() + p.stream_b).cwiseMax(0.0);
  s.z1 = ((p.sp_w1.leftCols(h) * s.hh + p.sp_w1.rightCols(sd) * s.map)
              .colwise() +
          p.sp_b1)
             .cwiseMax(0.0);
  s.logits = (p.sp_w2 * s.z1).colwise() + p.sp_b2;
}

void BackSpatialHuman(const ModelParams& p, const SpatialHumanPass& s,
                      const MatrixXd& dlogits, ModelParams& g) {
  const int h = p.dims.hidden;
  const int sd = p.dims.spatial_dim();
  g.sp_w2.noalias() += dlogits * s.z1.transpose();
  g.sp_b2 += dlogits.rowwise().sum();
  MatrixXd dz1 = (p.sp_w2.transpose() * dlogits).cwiseProduct(ReluMask(s.z1));
  g.sp_w1.leftCols(h).noalias() += dz1 * s.hh.transpose();
  g.sp_w1.rightCols(sd).noalias() += dz1 * s.map.transpose();
  g.sp_b1 += dz1.rowwise().sum();
  MatrixXd dhh =
      (p.sp_w1.leftCols(h).transpose() * dz1).cwiseProduct(ReluMask(s.hh));
  g.stream_w.noalias() += dhh * s.xh.transpose();
  g.stream_b += dhh.rowwise().sum();
}

void CheckFeature(std::span<const double> feat, int dim, const char* what) {
  if (static_cast<int>(feat.size()) != dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(what) + " has length " +
                    std::to_string(feat.size()) + ", model expects " +
                    std::to_string(dim));
  }
  for (double v : feat) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteInput,
                  std::string(what) + " contains a non-finite value");
    }
  }
}

void SetColumn(MatrixXd& m, int col, std::span<const double> feat) {
  for (size_t r = 0; r < feat.size(); ++r) m(r, col) = feat[r];
}

// Occupied cells enter the head as 1/grid so a full box does not swamp the
// hidden layer.
void SetMapColumn(MatrixXd& m, int col, const SpatialMap& map) {
  const auto& cells = map.cells();
  const double scale = 1.0 / map.grid();
  for (size_t r = 0; r < cells.size(); ++r) m(r, col) = cells[r] * scale;
}

void FillSpatialHuman(std::span<const Instance> batch, const ModelParams& p,
                      SpatialHumanPass& s) {
  const int n = static_cast<int>(batch.size());
  s.xh.resize(p.dims.feature_dim, n);
  s.map.resize(p.dims.spatial_dim(), n);
  for (int i = 0; i < n; ++i) {
    CheckFeature(batch[i].human_feat, p.dims.feature_dim, "human_feat");
    SetColumn(s.xh, i, batch[i].human_feat);
    SetMapColumn(s.map, i,
                 EncodeSpatialMap(batch[i].human_box, batch[i].object_box,
                                  p.dims.grid));
  }
}

void FillVerbObject(std::span<const Instance> batch, const ModelParams& p,
                    VerbObjectPass& s) {
  const int n = static_cast<int>(batch.size());
  s.xv.resize(p.dims.feature_dim, n);
  s.xo.resize(p.dims.feature_dim, n);
  for (int i = 0; i < n; ++i) {
    CheckFeature(batch[i].verb_feat, p.dims.feature_dim, "verb_feat");
    CheckFeature(batch[i].object_feat, p.dims.feature_dim, "object_feat");
    SetColumn(s.xv, i, batch[i].verb_feat);
    SetColumn(s.xo, i, batch[i].object_feat);
  }
}

void FillComposited(std::span<const CompositedInstance> batch,
                    const ModelParams& p, VerbObjectPass& s) {
  const int n = static_cast<int>(batch.size());
  s.xv.resize(p.dims.feature_dim, n);
  s.xo.resize(p.dims.feature_dim, n);
  for (int i = 0; i < n; ++i) {
    CheckFeature(*batch[i].verb_feat, p.dims.feature_dim, "verb_feat");
    CheckFeature(*batch[i].object_feat, p.dims.feature_dim, "object_feat");
    SetColumn(s.xv, i, *batch[i].verb_feat);
    SetColumn(s.xo, i, *batch[i].object_feat);
  }
}

template <typename Item>
MatrixXd LabelMatrix(std::span<const Item> batch, int num_hois) {
  MatrixXd y = MatrixXd::Zero(num_hois, static_cast<int>(batch.size()));
  for (size_t i = 0; i < batch.size(); ++i) {
    if (static_cast<int>(batch[i].label.size()) != num_hois) {
      throw Error(ErrorCode::kShapeMismatch, "label length != C");
    }
    for (int c = 0; c < num_hois; ++c) y(c, i) = batch[i].label.test(c);
  }
  return y;
}

double Softplus(double z) {
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Mean-over-columns, class-weighted binary cross-entropy. When `dlogits` is
// non-null it receives scale * dLoss/dlogits.
double WeightedBce(const MatrixXd& logits, const MatrixXd& labels,
                   const VectorXd& class_weights, double scale,
                   MatrixXd* dlogits) {
  const int n = static_cast<int>(logits.cols());
  const double inv_n = 1.0 / n;
  if (dlogits) dlogits->resize(logits.rows(), n);
  double total = 0;
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < logits.rows(); ++c) {
      const double z = logits(c, i);
      const double y = labels(c, i);
      total += class_weights[c] * (Softplus(z) - y * z);
      if (dlogits) {
        (*dlogits)(c, i) = scale * class_weights[c] * (Sigmoid(z) - y) * inv_n;
      }
    }
  }
  return total * inv_n;
}

VectorXd ClassWeightVector(const LossWeights& w, int num_hois) {
  if (w.class_weights.empty()) return VectorXd::Ones(num_hois);
  if (static_cast<int>(w.class_weights.size()) != num_hois) {
    throw Error(ErrorCode::kShapeMismatch, "class_weights length != C");
  }
  VectorXd out(num_hois);
  for (int c = 0; c < num_hois; ++c) {
    if (!(w.class_weights[c] >= 0) || !std::isfinite(w.class_weights[c])) {
      throw Error(ErrorCode::kInvalidConfig,
                  "class weights must be finite and non-negative");
    }
    out[c] = w.class_weights[c];
  }
  return out;
}

void CheckLossWeights(const LossWeights& w) {
  if (!(w.lambda1 >= 0) || !(w.lambda2 >= 0)) {
    throw Error(ErrorCode::kInvalidConfig, "lambda1, lambda2 must be >= 0");
  }
}

LossBreakdown Evaluate(std::span<const Instance> real,
                       std::span<const CompositedInstance> composited,
                       const ModelParams& p, const LossWeights& w,
                       ModelParams* grad) {
  if (real.empty()) {
    throw Error(ErrorCode::kEmptyBatch, "loss needs at least one real instance");
  }
  CheckLossWeights(w);
  const int num_hois = p.dims.num_hois;
  const VectorXd cw = ClassWeightVector(w, num_hois);
  if (grad) *grad = ModelParams::Zeros(p.dims);

  LossBreakdown out;
  const MatrixXd y_real = LabelMatrix(real, num_hois);

  SpatialHumanPass sp;
  FillSpatialHuman(real, p, sp);
  RunSpatialHuman(p, sp);
  MatrixXd d_sp;
  out.sp = WeightedBce(sp.logits, y_real, cw, 1.0, grad ? &d_sp : nullptr);

  VerbObjectPass vo;
  FillVerbObject(real, p, vo);
  RunVerbObject(p, vo);
  MatrixXd d_vo;
  out.verb_obj =
      WeightedBce(vo.logits, y_real, cw, w.lambda1, grad ? &d_vo : nullptr);

  if (grad) {
    BackSpatialHuman(p, sp, d_sp, *grad);
    BackVerbObject(p, vo, d_vo, *grad);
  }

  if (!composited.empty()) {
    VerbObjectPass comp;
    FillComposited(composited, p, comp);
    RunVerbObject(p, comp);
    MatrixXd d_comp;
    out.comp = WeightedBce(comp.logits, LabelMatrix(composited, num_hois), cw,
                           w.lambda2, grad ? &d_comp : nullptr);
    if (grad) BackVerbObject(p, comp, d_comp, *grad);
  }

  out.total = out.sp + w.lambda1 * out.verb_obj + w.lambda2 * out.comp;
  if (!std::isfinite(out.total)) {
    throw Error(ErrorCode::kNonFiniteLoss, "loss is not finite");
  }
  if (grad && !grad->AllFinite()) {
    throw Error(ErrorCode::kNonFiniteGradient, "gradient is not finite");
  }
  return out;
}

}  // namespace

VectorXd ForwardVerbObject(std::span<const double> verb_feat,
                           std::span<const double> object_feat,
                           const ModelParams& params) {
  CheckFeature(verb_feat, params.dims.feature_dim, "verb_feat");
  CheckFeature(object_feat, params.dims.feature_dim, "object_feat");
  VerbObjectPass s;
  s.xv.resize(params.dims.feature_dim, 1);
  s.xo.resize(params.dims.feature_dim, 1);
  SetColumn(s.xv, 0, verb_feat);
  SetColumn(s.xo, 0, object_feat);
  RunVerbObject(params, s);
  return s.logits.col(0);
}

VectorXd ForwardSpatialHuman(std::span<const double> human_feat,
                             const SpatialMap& map, const ModelParams& params) {
  CheckFeature(human_feat, params.dims.feature_dim, "human_feat");
  if (map.grid() != params.dims.grid) {
    throw Error(ErrorCode::kDimensionMismatch,
                "spatial map grid does not match the model");
  }
  SpatialHumanPass s;
  s.xh.resize(params.dims.feature_dim, 1);
  s.map.resize(params.dims.spatial_dim(), 1);
  SetColumn(s.xh, 0, human_feat);
  SetMapColumn(s.map, 0, map);
  RunSpatialHuman(params, s);
  return s.logits.col(0);
}

std::vector<double> InverseLogFrequencyWeights(std::span<const int> counts) {
  std::vector<double> w(counts.size());
  double total = 0;
  for (size_t c = 0; c < counts.size(); ++c) {
    w[c] = 1.0 / std::log(1.0 + std::max(counts[c], 1));
    total += w[c];
  }
  const double mean = total / static_cast<double>(counts.size());
  for (auto& x : w) x /= mean;
  return w;
}

LossBreakdown LossTotal(std::span<const Instance> real,
                        std::span<const CompositedInstance> composited,
                        const ModelParams& params, const LossWeights& weights) {
  return Evaluate(real, composited, params, weights, nullptr);
}

LossBreakdown LossAndGradient(std::span<const Instance> real,
                              std::span<const CompositedInstance> composited,
                              const ModelParams& params,
                              const LossWeights& weights, ModelParams& grad) {
  return Evaluate(real, composited, params, weights, &grad);
}

BranchMode ParseBranchMode(std::string_view text) {
  if (text == "both") return BranchMode::kBoth;
  if (text == "vo_only") return BranchMode::kVerbObjectOnly;
  if (text == "sp_only") return BranchMode::kSpatialHumanOnly;
  throw Error(ErrorCode::kInvalidConfig,
              "branch mode must be both|vo_only|sp_only, got '" +
                  std::string(text) + "'");
}

const char* BranchModeName(BranchMode mode) {
  switch (mode) {
    case BranchMode::kBoth: return "both";
    case BranchMode::kVerbObjectOnly: return "vo_only";
    case BranchMode::kSpatialHumanOnly: return "sp_only";
  }
  return "both";
}

std::vector<Scores> PredictScores(std::span<const Instance> instances,
                                  const ModelParams& params) {
  std::vector<Scores> out(instances.size());
  constexpr size_t kChunk = 256;
  for (size_t start = 0; start < instances.size(); start += kChunk) {
    auto chunk = instances.subspan(start,
                                   std::min(kChunk, instances.size() - start));
    SpatialHumanPass sp;
    FillSpatialHuman(chunk, params, sp);
    RunSpatialHuman(params, sp);
    VerbObjectPass vo;
    FillVerbObject(chunk, params, vo);
    RunVerbObject(params, vo);
    for (size_t i = 0; i < chunk.size(); ++i) {
      Scores& s = out[start + i];
      s.sp.resize(params.dims.num_hois);
      s.verb_obj.resize(params.dims.num_hois);
      for (int c = 0; c < params.dims.num_hois; ++c) {
        s.sp[c] = Sigmoid(sp.logits(c, i));
        s.verb_obj[c] = Sigmoid(vo.logits(c, i));
      }
    }
  }
  return out;
}

std::vector<double> FuseScores(double s_h, double s_o, const Scores& scores,
                               BranchMode mode) {
  auto in_range = [](double x) { return x >= 0.0 && x <= 1.0; };
  if (!in_range(s_h) || !in_range(s_o)) {
    throw Error(ErrorCode::kOutOfRange, "detection score outside [0, 1]");
  }
  if (scores.sp.size() != scores.verb_obj.size()) {
    throw Error(ErrorCode::kShapeMismatch, "branch score lengths differ");
  }
  std::vector<double> fused(scores.sp.size());
  for (size_t c = 0; c < fused.size(); ++c) {
    if (!in_range(scores.sp[c]) || !in_range(scores.verb_obj[c])) {
      throw Error(ErrorCode::kOutOfRange, "branch score outside [0, 1]");
    }
    const double vo = mode == BranchMode::kSpatialHumanOnly ? 1.0 : scores.verb_obj[c];
    const double sp = mode == BranchMode::kVerbObjectOnly ? 1.0 : scores.sp[c];
    fused[c] = s_h * s_o * vo * sp;
  }
  return fused;
}

void WriteCheckpoint(std::ostream& out, const ModelParams& params,
                     uint64_t seed) {
  const auto& d = params.dims;
  out << "vcl-checkpoint 1\n";
  out << "feature_dim " << d.feature_dim << '\n';
  out << "hidden " << d.hidden << '\n';
  out << "sp_hidden " << d.sp_hidden << '\n';
  out << "vo_hidden " << d.vo_hidden << '\n';
  out << "num_hois " << d.num_hois << '\n';
  out << "grid " << d.grid << '\n';
  out << "seed " << seed << '\n';
  for (const auto& block : params.Blocks()) {
    out << "block " << block.name << ' ' << block.rows << ' ' << block.cols
        << '\n';
    for (double v : block.values) out << FormatDouble(v) << '\n';
  }
}

void SaveCheckpoint(const std::string& path, const ModelParams& params,
                    uint64_t seed) {
  std::ostringstream ss;
  WriteCheckpoint(ss, params, seed);
  WriteFile(path, ss.str());
}

Checkpoint ReadCheckpoint(std::istream& in) {
  int line_number = 0;
  std::string line;
  auto next = [&]() -> std::string_view {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kParseError,
                  "checkpoint truncated after line " +
                      std::to_string(line_number));
    }
    ++line_number;
    return Trim(line);
  };
  auto fail = [&](const std::string& msg) -> Error {
    return Error(ErrorCode::kParseError,
                 "checkpoint line " + std::to_string(line_number) + ": " + msg);
  };
  if (next() != "vcl-checkpoint 1") throw fail("bad header");
  auto field = [&](std::string_view key) -> int64_t {
    auto parts = Split(next(), ' ');
    if (parts.size() != 2 || parts[0] != key) {
      throw fail("expected '" + std::string(key) + "'");
    }
    return ParseInt(parts[1], key);
  };
  ModelDims d;
  d.feature_dim = static_cast<int>(field("feature_dim"));
  d.hidden = static_cast<int>(field("hidden"));
  d.sp_hidden = static_cast<int>(field("sp_hidden"));
  d.vo_hidden = static_cast<int>(field("vo_hidden"));
  d.num_hois = static_cast<int>(field("num_hois"));
  d.grid = static_cast<int>(field("grid"));
  Checkpoint ck;
  ck.seed = static_cast<uint64_t>(field("seed"));
  ck.params = ModelParams::Zeros(d);
  for (auto& block : ck.params.Blocks()) {
    auto parts = Split(next(), ' ');
    if (parts.size() != 4 || parts[0] != "block" || parts[1] != block.name ||
        ParseInt(parts[2], "rows") != block.rows ||
        ParseInt(parts[3], "cols") != block.cols) {
      throw fail("expected block " + std::string(block.name) + " " +
                 std::to_string(block.rows) + " " +
                 std::to_string(block.cols));
    }
    for (double& v : block.values) v = ParseDouble(next(), block.name);
  }
  return ck;
}

Checkpoint LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return ReadCheckpoint(in);
}

}  // namespace vcl
