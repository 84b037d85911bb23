#include "vcl/zeroshot_split.h"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "vcl/error.h"
#include "vcl/rng.h"
#include "vcl/text_io.h"

namespace vcl {

SplitStrategy ParseSplitStrategy(std::string_view text) {
  if (text == "rare_first") return SplitStrategy::kRareFirst;
  if (text == "nonrare_first") return SplitStrategy::kNonRareFirst;
  throw Error(ErrorCode::kInvalidConfig,
              "split strategy must be rare_first|nonrare_first, got '" +
                  std::string(text) + "'");
}

const char* SplitStrategyName(SplitStrategy strategy) {
  return strategy == SplitStrategy::kRareFirst ? "rare_first" : "nonrare_first";
}

std::vector<uint8_t> ZeroShotSplit::UnseenMask(int num_hois) const {
  std::vector<uint8_t> mask(num_hois, 0);
  for (int c : unseen) mask[c] = 1;
  return mask;
}

bool CoversLabelSpace(std::span<const int> seen, const HoiLabelSpace& space) {
  std::vector<uint8_t> verbs(space.num_verbs(), 0);
  std::vector<uint8_t> objects(space.num_objects(), 0);
  for (int c : seen) {
    for (int v : space.hoi(c).verbs) verbs[v] = 1;
    objects[space.hoi_object(c)] = 1;
  }
  return std::all_of(verbs.begin(), verbs.end(), [](uint8_t b) { return b; }) &&
         std::all_of(objects.begin(), objects.end(), [](uint8_t b) { return b; });
}

ZeroShotSplit MakeSplit(std::span<const int> counts, const HoiLabelSpace& space,
                        int n_unseen, SplitStrategy strategy,
                        uint64_t tie_break_seed) {
  const int num_hois = space.num_hois();
  if (static_cast<int>(counts.size()) != num_hois) {
    throw Error(ErrorCode::kShapeMismatch, "split: counts length != C");
  }
  if (n_unseen < 0 || n_unseen >= num_hois) {
    throw Error(ErrorCode::kInvalidConfig,
                "split: n_unseen must lie in [0, C)");
  }

  std::vector<int> order(num_hois);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = MakeStream(tie_break_seed, "split_ties");
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return strategy == SplitStrategy::kRareFirst ? counts[a] < counts[b]
                                                 : counts[a] > counts[b];
  });

  std::vector<int> verb_cover(space.num_verbs(), 0);
  std::vector<int> object_cover(space.num_objects(), 0);
  for (int c = 0; c < num_hois; ++c) {
    for (int v : space.hoi(c).verbs) ++verb_cover[v];
    ++object_cover[space.hoi_object(c)];
  }

  std::vector<uint8_t> unseen(num_hois, 0);
  int taken = 0;
  for (int c : order) {
    if (taken == n_unseen) break;
    const auto& def = space.hoi(c);
    bool removable = object_cover[def.object] > 1;
    for (int v : def.verbs) removable = removable && verb_cover[v] > 1;
    if (!removable) continue;
    unseen[c] = 1;
    ++taken;
    --object_cover[def.object];
    for (int v : def.verbs) --verb_cover[v];
  }

  if (taken < n_unseen) {
    std::string blockers;
    for (int v = 0; v < space.num_verbs(); ++v) {
      if (verb_cover[v] == 1) blockers += " verb:" + space.verb_name(v);
    }
    for (int o = 0; o < space.num_objects(); ++o) {
      if (object_cover[o] == 1) blockers += " object:" + space.object_name(o);
    }
    throw Error(ErrorCode::kInfeasibleSplit,
                "only " + std::to_string(taken) + " of " +
                    std::to_string(n_unseen) +
                    " HOIs can be held out while covering every verb and "
                    "object; blocked by" + blockers);
  }

  ZeroShotSplit split;
  split.strategy = strategy;
  split.seed = tie_break_seed;
  for (int c = 0; c < num_hois; ++c) {
    (unseen[c] ? split.unseen : split.seen).push_back(c);
  }
  return split;
}

std::vector<Instance> ApplySplit(std::span<const Instance> train,
                                 ZeroShotSplit& split) {
  std::vector<Instance> out;
  out.reserve(train.size());
  int removed = 0;
  for (const auto& inst : train) {
    Instance kept = inst;
    for (int c : split.unseen) {
      if (c < static_cast<int>(kept.label.size())) kept.label.set(c, false);
    }
    if (IsFeasible(kept.label)) {
      out.push_back(std::move(kept));
    } else {
      ++removed;
    }
  }
  split.removed_instance_count = removed;
  return out;
}

void WriteSplit(std::ostream& out, const ZeroShotSplit& split) {
  out << "strategy=" << SplitStrategyName(split.strategy) << '\n';
  out << "seed=" << split.seed << '\n';
  out << "[unseen]\n";
  for (int c : split.unseen) out << c << '\n';
}

ZeroShotSplit ReadSplit(std::istream& in, int num_hois) {
  ZeroShotSplit split;
  std::string line;
  int line_number = 0;
  bool in_unseen = false;
  std::vector<uint8_t> mask(num_hois, 0);
  auto fail = [&](const std::string& msg) {
    return Error(ErrorCode::kParseError,
                 "split line " + std::to_string(line_number) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_number;
    auto text = Trim(line);
    if (text.empty() || text[0] == '#') continue;
    if (text == "[unseen]") {
      in_unseen = true;
      continue;
    }
    if (in_unseen) {
      const auto id = ParseInt(text, "hoi id");
      if (id < 0 || id >= num_hois) throw fail("HOI id out of range");
      mask[id] = 1;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw fail("expected key=value");
    const auto key = text.substr(0, eq);
    const auto value = text.substr(eq + 1);
    if (key == "strategy") {
      split.strategy = ParseSplitStrategy(value);
    } else if (key == "seed") {
      split.seed = ParseUint(value, "seed");
    } else {
      throw fail("unknown key '" + std::string(key) + "'");
    }
  }
  if (!in_unseen) throw fail("missing [unseen] section");
  for (int c = 0; c < num_hois; ++c) (mask[c] ? split.unseen : split.seen).push_back(c);
  return split;
}

ZeroShotSplit LoadSplit(const std::string& path, int num_hois) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return ReadSplit(in, num_hois);
}

}  // namespace vcl
