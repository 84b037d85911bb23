#include "vcl/composer.h"

#include <algorithm>
#include <iterator>
#include <numeric>

#include "vcl/error.h"

namespace vcl {

ComposeMode ParseComposeMode(std::string_view text) {
  if (text == "off") return ComposeMode::kOff;
  if (text == "within") return ComposeMode::kWithin;
  if (text == "between") return ComposeMode::kBetween;
  if (text == "both") return ComposeMode::kBoth;
  throw Error(ErrorCode::kInvalidConfig,
              "compose mode must be off|within|between|both, got '" +
                  std::string(text) + "'");
}

const char* ComposeModeName(ComposeMode mode) {
  switch (mode) {
    case ComposeMode::kOff: return "off";
    case ComposeMode::kWithin: return "within";
    case ComposeMode::kBetween: return "between";
    case ComposeMode::kBoth: return "both";
  }
  return "off";
}

std::vector<CompositedInstance> ComposeBatch(std::span<const Instance> batch,
                                             const HoiLabelSpace& space,
                                             const ComposeConfig& config,
                                             Rng& rng) {
  if (batch.empty()) throw Error(ErrorCode::kEmptyBatch, "compose: empty batch");
  if (config.mode == ComposeMode::kOff) return {};
  const bool mask_unseen = !config.unseen_allowed && !config.unseen.empty();
  if (mask_unseen && static_cast<int>(config.unseen.size()) != space.num_hois()) {
    throw Error(ErrorCode::kShapeMismatch, "compose: unseen mask length != C");
  }

  std::vector<ObjectVec> objects;
  std::vector<VerbVec> verbs;
  objects.reserve(batch.size());
  verbs.reserve(batch.size());
  for (const auto& inst : batch) {
    auto [l_o, l_v] = Decompose(inst.label, space);
    objects.push_back(std::move(l_o));
    verbs.push_back(std::move(l_v));
  }

  std::vector<CompositedInstance> candidates;
  const int n = static_cast<int>(batch.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const bool within = batch[i].image_id == batch[j].image_id;
      if ((config.mode == ComposeMode::kWithin && !within) ||
          (config.mode == ComposeMode::kBetween && within)) {
        continue;
      }
      LabelVec label = Compose(objects[j], verbs[i], space);
      if (mask_unseen) {
        for (int c = 0; c < space.num_hois(); ++c) {
          if (config.unseen[c]) label.set(c, false);
        }
      }
      if (!IsFeasible(label)) continue;
      candidates.push_back(CompositedInstance{&batch[i].verb_feat,
                                              &batch[j].object_feat,
                                              std::move(label), i, j, within});
    }
  }

  if (config.balance && candidates.size() > batch.size()) {
    std::vector<size_t> all(candidates.size());
    for (size_t k = 0; k < all.size(); ++k) all[k] = k;
    std::vector<size_t> chosen;
    chosen.reserve(batch.size());
    std::sample(all.begin(), all.end(), std::back_inserter(chosen),
                batch.size(), rng);
    std::vector<CompositedInstance> kept;
    kept.reserve(chosen.size());
    for (size_t k : chosen) kept.push_back(std::move(candidates[k]));
    return kept;
  }
  return candidates;
}

}  // namespace vcl
