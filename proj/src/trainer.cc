#include "vcl/trainer.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "vcl/error.h"
#include "vcl/text_io.h"

namespace vcl {

void ValidateTrainConfig(const TrainConfig& c) {
  auto fail = [](const std::string& m) {
    throw Error(ErrorCode::kInvalidConfig, m);
  };
  if (!(c.lr > 0)) fail("lr must be > 0");
  if (!(c.momentum >= 0 && c.momentum < 1)) fail("momentum must lie in [0, 1)");
  if (!(c.weight_decay >= 0)) fail("weight_decay must be >= 0");
  if (c.iterations < 0) fail("iterations must be >= 0");
  if (c.interactions_per_minibatch < 1) {
    fail("interactions_per_minibatch must be >= 1");
  }
  if (!(c.loss_weights.lambda1 >= 0) || !(c.loss_weights.lambda2 >= 0)) {
    fail("lambda1, lambda2 must be >= 0");
  }
  if (c.eval_every < 0) fail("eval_every must be >= 0");
}

MinibatchSampler::MinibatchSampler(std::span<const Instance> train) {
  std::map<int64_t, int> slot;
  for (size_t i = 0; i < train.size(); ++i) {
    auto [it, inserted] =
        slot.emplace(train[i].image_id, static_cast<int>(images_.size()));
    if (inserted) images_.emplace_back();
    images_[it->second].push_back(static_cast<int>(i));
  }
}

std::vector<int> MinibatchSampler::Sample(int count, Rng& rng) const {
  std::vector<int> batch;
  if (images_.empty()) return batch;
  std::uniform_int_distribution<int> pick(0, num_images() - 1);
  batch.reserve(count);
  while (static_cast<int>(batch.size()) < count) {
    const int a = pick(rng);
    int b = a;
    if (num_images() > 1) {
      while (b == a) b = pick(rng);
    }
    const auto& first = images_[a];
    const auto& second = images_[b];
    const size_t longest = std::max(first.size(), second.size());
    for (size_t k = 0; k < longest && static_cast<int>(batch.size()) < count;
         ++k) {
      if (k < first.size()) batch.push_back(first[k]);
      if (b != a && k < second.size() && static_cast<int>(batch.size()) < count) {
        batch.push_back(second[k]);
      }
    }
  }
  return batch;
}

void SgdStep(ModelParams& params, const ModelParams& grad, MomentumState& state,
             double lr, double momentum, double weight_decay) {
  auto blocks = params.Blocks();
  auto grads = grad.Blocks();
  if (state.velocity.empty()) {
    for (const auto& b : blocks) state.velocity.emplace_back(b.values.size(), 0.0);
  }
  if (grads.size() != blocks.size() || state.velocity.size() != blocks.size()) {
    throw Error(ErrorCode::kShapeMismatch, "sgd: block count mismatch");
  }
  for (size_t k = 0; k < blocks.size(); ++k) {
    auto& p = blocks[k].values;
    const auto& g = grads[k].values;
    auto& v = state.velocity[k];
    if (g.size() != p.size() || v.size() != p.size()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "sgd: block " + std::string(blocks[k].name) + " size mismatch");
    }
    for (size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum * v[i] + g[i] + weight_decay * p[i];
      p[i] -= lr * v[i];
    }
  }
  for (const auto& b : blocks) {
    for (double x : b.values) {
      if (!std::isfinite(x)) {
        throw Error(ErrorCode::kNonFiniteUpdate,
                    "sgd produced a non-finite value in " + std::string(b.name));
      }
    }
  }
}

std::string FormatRecord(const IterationRecord& r) {
  std::string out = "iter=" + std::to_string(r.iter) +
                    " L_sp=" + FormatDouble(r.l_sp) +
                    " L_vo=" + FormatDouble(r.l_vo) +
                    " L_comp=" + FormatDouble(r.l_comp);
  if (r.map_full) out += " mAP_full=" + FormatDouble(*r.map_full);
  if (r.map_rare) out += " mAP_rare=" + FormatDouble(*r.map_rare);
  return out;
}

TrainResult Train(std::span<const Instance> train, const HoiLabelSpace& space,
                  const TrainConfig& config, const EvalHook& eval) {
  ValidateTrainConfig(config);
  ModelDims dims = config.dims;
  dims.num_hois = space.num_hois();
  if (!train.empty()) dims.feature_dim = static_cast<int>(train[0].verb_feat.size());

  Rng init_rng = MakeStream(config.seed, "init");
  Rng batch_rng = MakeStream(config.seed, "batching");
  Rng compose_rng = MakeStream(config.seed, "composition");

  TrainResult result;
  result.params = ModelParams::Init(dims, init_rng);
  if (config.iterations == 0) return result;
  if (train.empty()) {
    throw Error(ErrorCode::kEmptyBatch, "train: no training instances");
  }

  LossWeights weights = config.loss_weights;
  if (weights.class_weights.empty() && config.reweight) {
    const auto counts = ClassCounts(train, space);
    weights.class_weights = InverseLogFrequencyWeights(counts);
  }

  const MinibatchSampler sampler(train);
  MomentumState momentum;
  ModelParams grad = ModelParams::Zeros(dims);
  std::vector<Instance> batch;
  for (int it = 1; it <= config.iterations; ++it) {
    auto ids = sampler.Sample(config.interactions_per_minibatch, batch_rng);
    batch.clear();
    for (int id : ids) batch.push_back(train[id]);
    const auto composited = ComposeBatch(batch, space, config.compose, compose_rng);

    IterationRecord rec;
    rec.iter = it;
    try {
      const LossBreakdown loss =
          LossAndGradient(batch, composited, result.params, weights, grad);
      rec.l_sp = loss.sp;
      rec.l_vo = weights.lambda1 * loss.verb_obj;
      rec.l_comp = weights.lambda2 * loss.comp;
      rec.loss = loss.total;
      SgdStep(result.params, grad, momentum, config.lr, config.momentum,
              config.weight_decay);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNonFiniteLoss ||
          e.code() == ErrorCode::kNonFiniteGradient ||
          e.code() == ErrorCode::kNonFiniteUpdate) {
        throw Error(ErrorCode::kDivergedTraining,
                    "iteration " + std::to_string(it) + ": " + e.what());
      }
      throw;
    }
    rec.num_composited = static_cast<int>(composited.size());
    if (eval && config.eval_every > 0 &&
        (it % config.eval_every == 0 || it == config.iterations)) {
      auto [full, rare] = eval(result.params);
      rec.map_full = full;
      rec.map_rare = rare;
    }
    result.log.push_back(rec);
    result.batches.push_back(std::move(ids));
  }
  return result;
}

}  // namespace vcl
