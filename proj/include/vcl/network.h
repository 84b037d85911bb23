#ifndef VCL_NETWORK_H_
#define VCL_NETWORK_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vcl/composer.h"
#include "vcl/dataset.h"
#include "vcl/rng.h"
#include "vcl/spatial_map.h"

namespace vcl {

struct ModelDims {
  int feature_dim = 32;
  int hidden = 64;      // width of the human/verb stream and object stream
  int sp_hidden = 64;   // spatial-human head hidden layer
  int vo_hidden = 128;  // both verb-object head hidden layers
  int num_hois = 60;
  int grid = kSpatialGrid;

  int spatial_dim() const { return 2 * grid * grid; }
  bool operator==(const ModelDims&) const = default;
};

struct ParamBlock {
  std::string_view name;
  std::span<double> values;  // column-major
  int rows = 0;
  int cols = 0;
};

struct ConstParamBlock {
  std::string_view name;
  std::span<const double> values;
  int rows = 0;
  int cols = 0;
};

// Learnable weights of all three branches. `stream_w`/`stream_b` is the
// single block applied to both human and verb features; the composition
// branch reuses the verb-object head.
struct ModelParams {
  ModelDims dims;
  Eigen::MatrixXd stream_w;  // hidden x D
  Eigen::VectorXd stream_b;
  Eigen::MatrixXd object_w;  // hidden x D
  Eigen::VectorXd object_b;
  Eigen::MatrixXd sp_w1;     // sp_hidden x (hidden + 2*grid*grid)
  Eigen::VectorXd sp_b1;
  Eigen::MatrixXd sp_w2;     // C x sp_hidden
  Eigen::VectorXd sp_b2;
  Eigen::MatrixXd vo_w1;     // vo_hidden x (2 * hidden)
  Eigen::VectorXd vo_b1;
  Eigen::MatrixXd vo_w2;     // vo_hidden x vo_hidden
  Eigen::VectorXd vo_b2;
  Eigen::MatrixXd vo_w3;     // C x vo_hidden
  Eigen::VectorXd vo_b3;

  static ModelParams Zeros(const ModelDims& dims);
  // Weights ~ U(-sqrt(6 / fan_in), sqrt(6 / fan_in)), biases zero.
  static ModelParams Init(const ModelDims& dims, Rng& rng);

  std::vector<ParamBlock> Blocks();
  std::vector<ConstParamBlock> Blocks() const;
  size_t num_values() const;
  bool AllFinite() const;
  bool operator==(const ModelParams& other) const;
};

// Both return logits. The spatial head reads each occupied map cell as
// 1/grid. Throws Error(kDimensionMismatch | kNonFiniteInput).
Eigen::VectorXd ForwardVerbObject(std::span<const double> verb_feat,
                                  std::span<const double> object_feat,
                                  const ModelParams& params);
Eigen::VectorXd ForwardSpatialHuman(std::span<const double> human_feat,
                                    const SpatialMap& map,
                                    const ModelParams& params);

struct LossWeights {
  double lambda1 = 2.0;
  double lambda2 = 0.5;
  std::vector<double> class_weights;  // length C; empty = all ones
};

// class_weights[c] = 1 / log(1 + max(count[c], 1)), rescaled to mean 1.
std::vector<double> InverseLogFrequencyWeights(std::span<const int> counts);

struct LossBreakdown {
  double sp = 0;        // L_sp
  double verb_obj = 0;  // L_verb_obj
  double comp = 0;      // L_comp (0 when nothing was composited)
  double total = 0;     // L_sp + lambda1 L_verb_obj + lambda2 L_comp
};

// Class-weighted sigmoid cross-entropy, summed over classes and averaged
// over instances, for each branch. Throws Error(kNonFiniteLoss).
LossBreakdown LossTotal(std::span<const Instance> real,
                        std::span<const CompositedInstance> composited,
                        const ModelParams& params, const LossWeights& weights);

// Same loss plus its analytic gradient w.r.t. every block. `grad` is
// overwritten. Throws Error(kNonFiniteLoss | kNonFiniteGradient).
LossBreakdown LossAndGradient(std::span<const Instance> real,
                              std::span<const CompositedInstance> composited,
                              const ModelParams& params,
                              const LossWeights& weights, ModelParams& grad);

enum class BranchMode { kBoth, kVerbObjectOnly, kSpatialHumanOnly };

BranchMode ParseBranchMode(std::string_view text);
const char* BranchModeName(BranchMode mode);

struct Scores {
  std::vector<double> sp;        // sigmoid of spatial-human logits
  std::vector<double> verb_obj;  // sigmoid of verb-object logits
};

// Branch probabilities for each instance.
std::vector<Scores> PredictScores(std::span<const Instance> instances,
                                  const ModelParams& params);

// S^c = s_h * s_o * s_vo^c * s_sp^c; the dropped branch contributes 1 in the
// single-branch modes. Throws Error(kOutOfRange) for factors outside [0, 1].
std::vector<double> FuseScores(double s_h, double s_o, const Scores& scores,
                               BranchMode mode = BranchMode::kBoth);

// Checkpoint: "vcl-checkpoint 1" header with dims and seed, then one
// "block <name> <rows> <cols>" line per parameter block followed by its
// column-major values, one per line, in shortest round-trip form.
void WriteCheckpoint(std::ostream& out, const ModelParams& params,
                     uint64_t seed);
void SaveCheckpoint(const std::string& path, const ModelParams& params,
                    uint64_t seed);

struct Checkpoint {
  ModelParams params;
  uint64_t seed = 0;
};
Checkpoint ReadCheckpoint(std::istream& in);
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace vcl

#endif  // VCL_NETWORK_H_
