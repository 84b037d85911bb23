#ifndef VCL_COMPOSER_H_
#define VCL_COMPOSER_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vcl/dataset.h"
#include "vcl/label_space.h"
#include "vcl/rng.h"

namespace vcl {

enum class ComposeMode { kOff, kWithin, kBetween, kBoth };

ComposeMode ParseComposeMode(std::string_view text);
const char* ComposeModeName(ComposeMode mode);

struct ComposeConfig {
  ComposeMode mode = ComposeMode::kBoth;
  // Subsample composited interactions down to the number of real ones.
  bool balance = true;
  // When false, bits on classes flagged in `unseen` are cleared and
  // compositions left with no seen bit are dropped.
  bool unseen_allowed = true;
  std::vector<uint8_t> unseen;  // per HOI id; empty = nothing unseen
};

struct CompositedInstance {
  // Features are referenced from the batch, not copied.
  const std::vector<double>* verb_feat = nullptr;
  const std::vector<double>* object_feat = nullptr;
  LabelVec label;
  int verb_source = 0;    // index into the batch
  int object_source = 0;  // index into the batch
  bool within_image = false;
};

// Stitches verb features of instance i with object features of instance
// j != i for every ordered pair the mode permits, labels each candidate
// with Compose(l_o(j), l_v(i)), drops infeasible ones and optionally
// balances against the real interaction count. Candidates are listed in
// (i, j) order; balancing keeps that relative order. Throws
// Error(kEmptyBatch).
std::vector<CompositedInstance> ComposeBatch(std::span<const Instance> batch,
                                             const HoiLabelSpace& space,
                                             const ComposeConfig& config,
                                             Rng& rng);

}  // namespace vcl

#endif  // VCL_COMPOSER_H_
