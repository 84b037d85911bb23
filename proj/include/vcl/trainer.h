#ifndef VCL_TRAINER_H_
#define VCL_TRAINER_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vcl/composer.h"
#include "vcl/dataset.h"
#include "vcl/network.h"
#include "vcl/rng.h"

namespace vcl {

struct TrainConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0005;
  int iterations = 3000;
  int interactions_per_minibatch = 16;
  ComposeConfig compose;
  LossWeights loss_weights;
  // Derive class weights from training counts when loss_weights has none.
  bool reweight = true;
  uint64_t seed = 7;
  int eval_every = 0;  // 0 disables periodic evaluation
  ModelDims dims;
};

// Throws Error(kInvalidConfig).
void ValidateTrainConfig(const TrainConfig& config);

// Draws pairs of distinct images and interleaves their instances until the
// batch holds `count` of them, so a batch of two or more spans at least two
// images whenever the dataset does. Returns indices into `train`.
class MinibatchSampler {
 public:
  explicit MinibatchSampler(std::span<const Instance> train);
  std::vector<int> Sample(int count, Rng& rng) const;
  int num_images() const { return static_cast<int>(images_.size()); }

 private:
  std::vector<std::vector<int>> images_;
};

struct MomentumState {
  std::vector<std::vector<double>> velocity;  // one per parameter block
};

// v <- momentum * v + grad + weight_decay * param; param <- param - lr * v.
// Throws Error(kNonFiniteUpdate | kShapeMismatch).
void SgdStep(ModelParams& params, const ModelParams& grad, MomentumState& state,
             double lr, double momentum, double weight_decay);

struct IterationRecord {
  int iter = 0;
  // Terms as they enter the total: L_sp, lambda1 * L_vo, lambda2 * L_comp.
  double l_sp = 0;
  double l_vo = 0;
  double l_comp = 0;
  double loss = 0;
  int num_composited = 0;
  std::optional<double> map_full;
  std::optional<double> map_rare;
};

// "iter=... L_sp=... L_vo=... L_comp=..." plus mAP_full / mAP_rare on
// evaluation iterations.
std::string FormatRecord(const IterationRecord& record);

struct TrainResult {
  ModelParams params;
  std::vector<IterationRecord> log;
  std::vector<std::vector<int>> batches;  // sampled instance indices per step
};

// Periodic evaluation hook: (params) -> (mAP_full, mAP_rare).
using EvalHook = std::function<std::pair<double, double>(const ModelParams&)>;

// Runs `iterations` of sample -> compose -> loss/gradient -> SGD. Batching,
// composition and initialization each draw from their own named stream of
// config.seed. Throws Error(kDivergedTraining) naming the iteration.
TrainResult Train(std::span<const Instance> train, const HoiLabelSpace& space,
                  const TrainConfig& config, const EvalHook& eval = nullptr);

}  // namespace vcl

#endif  // VCL_TRAINER_H_
