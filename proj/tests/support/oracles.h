#ifndef VCL_TESTS_ORACLES_H_
#define VCL_TESTS_ORACLES_H_

#include <cstdint>
#include <random>
#include <vector>

#include "vcl/composer.h"
#include "vcl/dataset.h"
#include "vcl/evaluator.h"
#include "vcl/label_space.h"
#include "vcl/network.h"
#include "vcl/zeroshot_split.h"

namespace vcl::testing {

using TestRng = std::mt19937_64;

// ride=0, feed=1; horse=0, bicycle=1.
// HOIs: 0 ride-horse, 1 feed-horse, 2 ride-bicycle.
HoiLabelSpace ToySpace();

// Covering space with at most the given sizes; some HOIs carry two verbs.
HoiLabelSpace RandomSpace(TestRng& rng, int max_verbs, int max_objects,
                          int max_hois);

LabelVec RandomLabel(TestRng& rng, int num_hois, double density);
VerbVec RandomVerbs(TestRng& rng, int num_verbs, double density);
ObjectVec RandomObjects(TestRng& rng, int num_objects, double density);

// Set definitions, evaluated HOI by HOI.
LabelVec BruteCompose(const ObjectVec& l_o, const VerbVec& l_v,
                      const HoiLabelSpace& space);
std::pair<ObjectVec, VerbVec> BruteDecompose(const LabelVec& y,
                                             const HoiLabelSpace& space);

// Instance with a fresh random label drawn from `space` (one or two HOIs
// sharing an object), random features and non-degenerate boxes.
Instance RandomInstance(TestRng& rng, const HoiLabelSpace& space,
                        int feature_dim, int64_t image_id);
std::vector<Instance> RandomBatch(TestRng& rng, const HoiLabelSpace& space,
                                  int size, int num_images, int feature_dim);

struct OracleComposite {
  int verb_source;
  int object_source;
  LabelVec label;
  bool within_image;
};

// All ordered pairs i != j, filtered by mode, labeled by the set definition
// and masked per `config`; unbalanced.
std::vector<OracleComposite> BruteComposeBatch(std::span<const Instance> batch,
                                               const HoiLabelSpace& space,
                                               const ComposeConfig& config);

// Logits by explicit loops over the weight matrices.
std::vector<double> ReferenceVerbObject(std::span<const double> verb_feat,
                                        std::span<const double> object_feat,
                                        const ModelParams& p);
std::vector<double> ReferenceSpatialHuman(std::span<const double> human_feat,
                                          const SpatialMap& map,
                                          const ModelParams& p);
// Scalar-loop loss with the same weighting as the trainer objective.
LossBreakdown ReferenceLoss(std::span<const Instance> real,
                            std::span<const CompositedInstance> composited,
                            const ModelParams& p, const LossWeights& w);

// Central differences of LossTotal over every parameter value.
ModelParams FiniteDifferenceGradient(std::span<const Instance> real,
                                     std::span<const CompositedInstance> composited,
                                     const ModelParams& p, const LossWeights& w,
                                     double step);

// ||a - b|| / (||a|| + ||b||) per block, 0 when both vanish.
std::vector<double> BlockRelativeErrors(const ModelParams& a,
                                        const ModelParams& b);

// Per-class AP from first principles: rank by score (input order on ties),
// try every still-free same-image ground truth and take the best pair IoU,
// then integrate the max-precision-at-recall envelope point by point.
std::vector<double> ReferenceAp(std::span<const Detection> dets,
                                std::span<const GroundTruth> gts, int num_hois,
                                const HoiLabelSpace& space, EvalMode mode,
                                double iou_threshold);

struct MicroCase {
  HoiLabelSpace space;
  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
};

// At most 5 detections, 5 ground truths and 3 classes over two images, with
// boxes jittered around shared anchors so IoUs straddle 0.5 and scores on a
// coarse grid so ties occur.
MicroCase RandomMicroCase(TestRng& rng);

// True when exchanging one unseen HOI for one seen HOI keeps coverage and
// strictly improves the split's order (lower total count for rare-first,
// higher for non-rare-first). Tries every pair.
bool HasImprovingSwap(const ZeroShotSplit& split, std::span<const int> counts,
                      const HoiLabelSpace& space);

ModelDims SmallDims(int num_hois);

// ModelParams::Init with random biases, so every path is exercised.
ModelParams RandomParams(const ModelDims& dims, TestRng& rng);
// Class weights in [0.2, 2].
std::vector<double> RandomWeights(TestRng& rng, int n);

}  // namespace vcl::testing

#endif  // VCL_TESTS_ORACLES_H_
