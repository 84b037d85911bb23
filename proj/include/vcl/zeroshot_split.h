#ifndef VCL_ZEROSHOT_SPLIT_H_
#define VCL_ZEROSHOT_SPLIT_H_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vcl/dataset.h"
#include "vcl/label_space.h"

namespace vcl {

enum class SplitStrategy { kRareFirst, kNonRareFirst };

SplitStrategy ParseSplitStrategy(std::string_view text);
const char* SplitStrategyName(SplitStrategy strategy);

struct ZeroShotSplit {
  std::vector<int> unseen;  // ascending HOI ids
  std::vector<int> seen;    // ascending HOI ids
  SplitStrategy strategy = SplitStrategy::kRareFirst;
  uint64_t seed = 0;
  int removed_instance_count = 0;

  std::vector<uint8_t> UnseenMask(int num_hois) const;
};

// True when every verb and object occurs in at least one HOI of `seen`.
bool CoversLabelSpace(std::span<const int> seen, const HoiLabelSpace& space);

// Greedy scan over HOIs ordered by instance count (ascending for rare-first,
// descending for non-rare-first; ties by a seeded shuffle), moving an HOI to
// the unseen set whenever the remaining HOIs still cover every verb and
// object. Throws Error(kInfeasibleSplit) naming the verbs/objects that block
// further removal when fewer than n_unseen HOIs can be moved.
ZeroShotSplit MakeSplit(std::span<const int> counts, const HoiLabelSpace& space,
                        int n_unseen, SplitStrategy strategy,
                        uint64_t tie_break_seed);

// Clears unseen bits, drops instances left without labels and records the
// number dropped in split.removed_instance_count.
std::vector<Instance> ApplySplit(std::span<const Instance> train,
                                 ZeroShotSplit& split);

// Split file: "strategy=<name>", "seed=<n>", "[unseen]", then one HOI id
// per line.
void WriteSplit(std::ostream& out, const ZeroShotSplit& split);
ZeroShotSplit ReadSplit(std::istream& in, int num_hois);
ZeroShotSplit LoadSplit(const std::string& path, int num_hois);

}  // namespace vcl

#endif  // VCL_ZEROSHOT_SPLIT_H_
