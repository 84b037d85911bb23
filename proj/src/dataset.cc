#include "vcl/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vcl/error.h"
#include "vcl/text_io.h"

namespace vcl {

namespace {

constexpr double kImageWidth = 640.0;
constexpr double kImageHeight = 480.0;
constexpr char kFormatTag[] = "#vcl-dataset";

[[noreturn]] void InvalidConfig(const std::string& message) {
  throw Error(ErrorCode::kInvalidConfig, message);
}

std::vector<double> RandomOnSphere(int dim, double radius, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dim);
  double norm = 0;
  do {
    norm = 0;
    for (auto& x : v) {
      x = normal(rng);
      norm += x * x;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (auto& x : v) x *= radius / norm;
  return v;
}

// Class-conditional generator state shared by the train and test splits.
struct Generators {
  std::vector<std::vector<double>> verb_means;
  std::vector<std::vector<double>> human_means;
  std::vector<std::vector<double>> object_means;
  // Relative object placement per verb, in units of the human box:
  // center offset (dx, dy) and size (w, h).
  std::vector<std::array<double, 4>> verb_geometry;
};

Generators MakeGenerators(const DatasetConfig& config,
                          const HoiLabelSpace& space, Rng& rng) {
  Generators g;
  for (int v = 0; v < space.num_verbs(); ++v) {
    g.verb_means.push_back(
        RandomOnSphere(config.feature_dim, config.class_sep, rng));
  }
  for (int v = 0; v < space.num_verbs(); ++v) {
    g.human_means.push_back(
        RandomOnSphere(config.feature_dim, config.class_sep, rng));
  }
  for (int o = 0; o < space.num_objects(); ++o) {
    g.object_means.push_back(
        RandomOnSphere(config.feature_dim, config.class_sep, rng));
  }
  std::uniform_real_distribution<double> offset(-1.0, 1.0);
  std::uniform_real_distribution<double> size(0.4, 1.2);
  for (int v = 0; v < space.num_verbs(); ++v) {
    g.verb_geometry.push_back({offset(rng), offset(rng), size(rng), size(rng)});
  }
  return g;
}

std::vector<double> NoisyMean(const std::vector<const std::vector<double>*>& means,
                              double sigma, Rng& rng) {
  std::normal_distribution<double> normal(0.0, sigma);
  const size_t dim = means.front()->size();
  std::vector<double> out(dim, 0.0);
  for (const auto* m : means) {
    for (size_t d = 0; d < dim; ++d) out[d] += (*m)[d];
  }
  for (auto& x : out) x = x / static_cast<double>(means.size()) + normal(rng);
  return out;
}

// Places a human/object pair with verb-dependent relative geometry inside a
// horizontal slot of the image.
void PlaceBoxes(const std::array<double, 4>& geom, double slot_x0,
                double slot_width, Rng& rng, Instance& inst) {
  std::normal_distribution<double> jitter(0.0, 0.08);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double hw = 1.0, hh = 1.6;
  Box2D human{0.0, 0.0, hw, hh};
  const double ow = std::max(0.25, geom[2] + jitter(rng)) * hw;
  const double oh = std::max(0.25, geom[3] + jitter(rng)) * hh;
  const double cx = hw * (0.5 + geom[0] + jitter(rng));
  const double cy = hh * (0.5 + geom[1] + jitter(rng));
  Box2D object{cx - ow / 2, cy - oh / 2, cx + ow / 2, cy + oh / 2};
  const Box2D frame = UnionBox(human, object);
  const double max_scale = std::min(slot_width / frame.width(),
                                    kImageHeight / frame.height());
  const double scale = max_scale * (0.5 + 0.45 * unit(rng));
  const double tx = slot_x0 + unit(rng) * (slot_width - scale * frame.width());
  const double ty = unit(rng) * (kImageHeight - scale * frame.height());
  auto place = [&](const Box2D& b) {
    return Box2D{tx + scale * (b.x1 - frame.x1), ty + scale * (b.y1 - frame.y1),
                 tx + scale * (b.x2 - frame.x1),
                 ty + scale * (b.y2 - frame.y1)};
  };
  inst.human_box = place(human);
  inst.object_box = place(object);
}

std::vector<Instance> GenerateSplit(const DatasetConfig& config,
                                    const HoiLabelSpace& space,
                                    const Generators& gen,
                                    const std::vector<double>& class_probs,
                                    int count, Rng& rng) {
  std::vector<Instance> out;
  out.reserve(count);
  std::discrete_distribution<int> pick_class(class_probs.begin(),
                                             class_probs.end());
  std::uniform_int_distribution<int> per_image(1, config.max_instances_per_image);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> score(0.5, 1.0);

  int64_t image_id = 0;
  while (static_cast<int>(out.size()) < count) {
    const int k = std::min(per_image(rng), count - static_cast<int>(out.size()));
    const double slot_width = kImageWidth / k;
    for (int slot = 0; slot < k; ++slot) {
      Instance inst;
      inst.image_id = image_id;
      const int primary = pick_class(rng);
      const int object = space.hoi_object(primary);
      inst.object_id = object;
      inst.label = LabelVec(space.num_hois());
      inst.label.set(primary);
      if (unit(rng) < config.multi_verb_fraction) {
        std::vector<int> partners;
        std::vector<double> weights;
        for (int c = 0; c < space.num_hois(); ++c) {
          if (c != primary && space.hoi_object(c) == object) {
            partners.push_back(c);
            weights.push_back(class_probs[c]);
          }
        }
        if (!partners.empty()) {
          std::discrete_distribution<int> pick(weights.begin(), weights.end());
          inst.label.set(partners[pick(rng)]);
        }
      }
      auto [l_o, l_v] = Decompose(inst.label, space);
      std::vector<const std::vector<double>*> verb_means, human_means;
      for (int v : l_v.ids()) {
        verb_means.push_back(&gen.verb_means[v]);
        human_means.push_back(&gen.human_means[v]);
      }
      inst.human_feat = NoisyMean(human_means, config.noise_sigma, rng);
      inst.verb_feat = NoisyMean(verb_means, config.noise_sigma, rng);
      inst.object_feat =
          NoisyMean({&gen.object_means[object]}, config.noise_sigma, rng);
      const int geometry_verb = space.hoi(primary).verbs.front();
      PlaceBoxes(gen.verb_geometry[geometry_verb], slot * slot_width,
                 slot_width, rng, inst);
      inst.human_score = score(rng);
      inst.object_score = score(rng);
      out.push_back(std::move(inst));
    }
    ++image_id;
  }
  return out;
}

}  // namespace

void ValidateDatasetConfig(const DatasetConfig& config) {
  if (config.num_verbs < 1 || config.num_objects < 1) {
    InvalidConfig("num_verbs and num_objects must be >= 1");
  }
  if (config.hoi_defs.empty()) {
    if (config.num_hois < std::max(config.num_verbs, config.num_objects) ||
        config.num_hois > config.num_verbs * config.num_objects) {
      InvalidConfig("num_hois must lie in [max(num_verbs, num_objects), "
                    "num_verbs * num_objects]");
    }
  }
  if (!(config.zipf_exponent >= 0)) InvalidConfig("zipf_exponent must be >= 0");
  if (!(config.class_sep > 0)) InvalidConfig("class_sep must be > 0");
  if (!(config.noise_sigma >= 0)) InvalidConfig("noise_sigma must be >= 0");
  if (config.feature_dim < 2) InvalidConfig("feature_dim must be >= 2");
  if (config.n_train < 0 || config.n_test < 0) {
    InvalidConfig("instance counts must be >= 0");
  }
  if (!(config.multi_verb_fraction >= 0 && config.multi_verb_fraction <= 1)) {
    InvalidConfig("multi_verb_fraction must lie in [0, 1]");
  }
  if (config.max_instances_per_image < 1) {
    InvalidConfig("max_instances_per_image must be >= 1");
  }
}

std::vector<HoiDef> RandomHoiDefs(int num_verbs, int num_objects, int num_hois,
                                  Rng& rng) {
  std::vector<int> verbs(num_verbs), objects(num_objects);
  std::iota(verbs.begin(), verbs.end(), 0);
  std::iota(objects.begin(), objects.end(), 0);
  std::shuffle(verbs.begin(), verbs.end(), rng);
  std::shuffle(objects.begin(), objects.end(), rng);

  std::vector<std::vector<uint8_t>> used(num_verbs,
                                         std::vector<uint8_t>(num_objects, 0));
  std::vector<std::pair<int, int>> pairs;
  const int cover = std::max(num_verbs, num_objects);
  for (int i = 0; i < cover; ++i) {
    const int v = verbs[i % num_verbs];
    const int o = objects[i % num_objects];
    used[v][o] = 1;
    pairs.emplace_back(v, o);
  }
  std::vector<std::pair<int, int>> rest;
  for (int v = 0; v < num_verbs; ++v) {
    for (int o = 0; o < num_objects; ++o) {
      if (!used[v][o]) rest.emplace_back(v, o);
    }
  }
  std::shuffle(rest.begin(), rest.end(), rng);
  for (int i = 0; static_cast<int>(pairs.size()) < num_hois; ++i) {
    pairs.push_back(rest[i]);
  }
  std::shuffle(pairs.begin(), pairs.end(), rng);

  std::vector<int> verb_map(num_verbs, -1), object_map(num_objects, -1);
  int next_verb = 0, next_object = 0;
  std::vector<HoiDef> defs;
  for (auto [v, o] : pairs) {
    if (verb_map[v] < 0) verb_map[v] = next_verb++;
    if (object_map[o] < 0) object_map[o] = next_object++;
    defs.push_back(HoiDef{{verb_map[v]}, object_map[o]});
  }
  return defs;
}

std::vector<double> ZipfProbabilities(int n, double exponent) {
  std::vector<double> p(n);
  double total = 0;
  for (int r = 1; r <= n; ++r) {
    p[r - 1] = std::pow(static_cast<double>(r), -exponent);
    total += p[r - 1];
  }
  for (auto& x : p) x /= total;
  return p;
}

std::vector<int> ZipfRanks(const DatasetConfig& config, int num_hois) {
  Rng rng = MakeStream(config.seed, "zipf_ranks");
  std::vector<int> ranks(num_hois);
  std::iota(ranks.begin(), ranks.end(), 1);
  std::shuffle(ranks.begin(), ranks.end(), rng);
  return ranks;
}

Dataset Generate(const DatasetConfig& config) {
  ValidateDatasetConfig(config);
  Dataset data;
  if (config.hoi_defs.empty()) {
    Rng rng = MakeStream(config.seed, "label_space");
    auto defs = RandomHoiDefs(config.num_verbs, config.num_objects,
                              config.num_hois, rng);
    data.space =
        HoiLabelSpace::Build(defs, config.num_verbs, config.num_objects);
  } else {
    data.space =
        HoiLabelSpace::Build(config.hoi_defs, config.num_verbs,
                             config.num_objects, config.verb_names,
                             config.object_names);
  }
  const int num_hois = data.space.num_hois();
  const auto ranks = ZipfRanks(config, num_hois);
  auto class_probs = [&](double exponent) {
    const auto by_rank = ZipfProbabilities(num_hois, exponent);
    std::vector<double> p(num_hois);
    for (int c = 0; c < num_hois; ++c) p[c] = by_rank[ranks[c] - 1];
    return p;
  };
  Rng gen_rng = MakeStream(config.seed, "generators");
  const Generators gen = MakeGenerators(config, data.space, gen_rng);

  Rng train_rng = MakeStream(config.seed, "train");
  data.train = GenerateSplit(config, data.space, gen,
                             class_probs(config.zipf_exponent), config.n_train,
                             train_rng);
  const double test_exponent = config.test_zipf_exponent < 0
                                   ? config.zipf_exponent
                                   : config.test_zipf_exponent;
  Rng test_rng = MakeStream(config.seed, "test");
  data.test = GenerateSplit(config, data.space, gen, class_probs(test_exponent),
                            config.n_test, test_rng);
  return data;
}

namespace {

std::string FormatBox(const Box2D& b) {
  return FormatDouble(b.x1) + "," + FormatDouble(b.y1) + "," +
         FormatDouble(b.x2) + "," + FormatDouble(b.y2);
}

std::string JoinNames(int n, const auto& name_of) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out.push_back(',');
    out += name_of(i);
  }
  return out;
}

}  // namespace

void WriteDataset(std::ostream& out, std::span<const Instance> instances,
                  const HoiLabelSpace& space) {
  const size_t dim = instances.empty() ? 0 : instances.front().verb_feat.size();
  out << kFormatTag << "\t1\n";
  out << "#feature_dim\t" << dim << '\n';
  out << "#num_instances\t" << instances.size() << '\n';
  out << "#verbs\t"
      << JoinNames(space.num_verbs(),
                   [&](int v) { return space.verb_name(v); })
      << '\n';
  out << "#objects\t"
      << JoinNames(space.num_objects(),
                   [&](int o) { return space.object_name(o); })
      << '\n';
  out << "#label_space\t" << space.num_hois() << '\n';
  WriteLabelSpace(out, space);
  out << "#instances\n";
  for (const auto& inst : instances) {
    out << inst.image_id << '\t' << FormatBox(inst.human_box) << '\t'
        << FormatBox(inst.object_box) << '\t' << FormatDouble(inst.human_score)
        << '\t' << FormatDouble(inst.object_score) << '\t' << inst.object_id
        << '\t';
    const auto ids = inst.label.ids();
    for (size_t i = 0; i < ids.size(); ++i) {
      if (i) out << ',';
      out << ids[i];
    }
    out << '\t' << JoinDoubles(inst.human_feat, ',') << '\t'
        << JoinDoubles(inst.verb_feat, ',') << '\t'
        << JoinDoubles(inst.object_feat, ',') << '\n';
  }
}

void SaveDataset(const std::string& path, std::span<const Instance> instances,
                 const HoiLabelSpace& space) {
  std::ostringstream ss;
  WriteDataset(ss, instances, space);
  WriteFile(path, ss.str());
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool Next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
  int line_number() const { return line_number_; }

  [[noreturn]] void Fail(int column, const std::string& message) const {
    throw Error(ErrorCode::kParseError,
                "line " + std::to_string(line_number_) + ", column " +
                    std::to_string(column) + ": " + message);
  }

 private:
  std::istream& in_;
  int line_number_ = 0;
};

// Runs `parse`, re-throwing parse failures with the reader's position.
template <typename Fn>
auto AtColumn(const LineReader& reader, int column, Fn&& parse) {
  try {
    return parse();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParseError) throw;
    reader.Fail(column, e.what());
  }
}

std::vector<std::string_view> HeaderFields(LineReader& reader,
                                           std::string& line,
                                           std::string_view key) {
  if (!reader.Next(line)) reader.Fail(1, "missing header " + std::string(key));
  auto fields = Split(line, '\t');
  if (fields.size() != 2 || fields[0] != key) {
    reader.Fail(1, "expected header '" + std::string(key) + "'");
  }
  return fields;
}

Box2D ParseBox(const LineReader& reader, int column, std::string_view field) {
  auto values = AtColumn(reader, column,
                         [&] { return ParseDoubleList(field, "box"); });
  if (values.size() != 4) reader.Fail(column, "box needs 4 coordinates");
  Box2D box{values[0], values[1], values[2], values[3]};
  if (!box.valid()) reader.Fail(column, "invalid box");
  return box;
}

}  // namespace

LoadedDataset ReadDataset(std::istream& in) {
  LineReader reader(in);
  std::string line;
  auto tag = HeaderFields(reader, line, kFormatTag);
  if (tag[1] != "1") reader.Fail(2, "unsupported dataset version");
  const auto dim = static_cast<size_t>(AtColumn(reader, 2, [&] {
    return ParseUint(HeaderFields(reader, line, "#feature_dim")[1],
                     "feature_dim");
  }));
  const auto count = static_cast<size_t>(AtColumn(reader, 2, [&] {
    return ParseUint(HeaderFields(reader, line, "#num_instances")[1],
                     "num_instances");
  }));
  std::vector<std::string> verbs, objects;
  for (auto name : Split(HeaderFields(reader, line, "#verbs")[1], ',')) {
    verbs.emplace_back(name);
  }
  for (auto name : Split(HeaderFields(reader, line, "#objects")[1], ',')) {
    objects.emplace_back(name);
  }
  const auto num_hois = static_cast<int>(AtColumn(reader, 2, [&] {
    return ParseUint(HeaderFields(reader, line, "#label_space")[1],
                     "label_space");
  }));
  LabelSpaceParser parser;
  parser.SeedNames(verbs, objects);
  for (int c = 0; c < num_hois; ++c) {
    if (!reader.Next(line)) reader.Fail(1, "truncated label space");
    parser.AddLine(line, reader.line_number());
  }
  LoadedDataset data;
  data.space = parser.Finish();
  if (data.space.num_verbs() != static_cast<int>(verbs.size()) ||
      data.space.num_objects() != static_cast<int>(objects.size())) {
    reader.Fail(1, "label space uses names missing from the header tables");
  }
  if (!reader.Next(line) || line != "#instances") {
    reader.Fail(1, "expected '#instances'");
  }

  const int num_objects = data.space.num_objects();
  while (reader.Next(line)) {
    if (line.empty()) continue;
    auto f = Split(line, '\t');
    if (f.size() != 10) {
      reader.Fail(1, "expected 10 tab-separated fields, got " +
                         std::to_string(f.size()));
    }
    Instance inst;
    inst.image_id =
        AtColumn(reader, 1, [&] { return ParseInt(f[0], "image_id"); });
    inst.human_box = ParseBox(reader, 2, f[1]);
    inst.object_box = ParseBox(reader, 3, f[2]);
    inst.human_score =
        AtColumn(reader, 4, [&] { return ParseDouble(f[3], "s_h"); });
    inst.object_score =
        AtColumn(reader, 5, [&] { return ParseDouble(f[4], "s_o"); });
    for (int col : {4, 5}) {
      const double s = col == 4 ? inst.human_score : inst.object_score;
      if (!(s >= 0 && s <= 1)) reader.Fail(col, "score outside [0, 1]");
    }
    const auto object_id = AtColumn(reader, 6, [&] { return ParseInt(f[5], "object_id"); });
    if (object_id < 0 || object_id >= num_objects) {
      reader.Fail(6, "object_id out of range");
    }
    inst.object_id = static_cast<int>(object_id);
    const auto hois = AtColumn(reader, 7, [&] { return ParseIntList(f[6], "hoi_ids"); });
    inst.label = LabelVec(data.space.num_hois());
    for (int c : hois) {
      if (c < 0 || c >= data.space.num_hois()) {
        reader.Fail(7, "hoi id " + std::to_string(c) + " out of range");
      }
      if (data.space.hoi_object(c) != inst.object_id) {
        throw Error(ErrorCode::kInconsistentLabel,
                    "line " + std::to_string(reader.line_number()) + ": HOI " +
                        std::to_string(c) + " has object " +
                        std::to_string(data.space.hoi_object(c)) +
                        " but object_id is " + std::to_string(inst.object_id));
      }
      inst.label.set(c);
    }
    if (!IsFeasible(inst.label)) reader.Fail(7, "instance has no HOI label");
    inst.human_feat = AtColumn(reader, 8, [&] { return ParseDoubleList(f[7], "human_feat"); });
    inst.verb_feat = AtColumn(reader, 9, [&] { return ParseDoubleList(f[8], "verb_feat"); });
    inst.object_feat = AtColumn(reader, 10, [&] { return ParseDoubleList(f[9], "object_feat"); });
    for (const auto* feat : {&inst.human_feat, &inst.verb_feat, &inst.object_feat}) {
      if (feat->size() != dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "line " + std::to_string(reader.line_number()) +
                        ": feature length " + std::to_string(feat->size()) +
                        " != feature_dim " + std::to_string(dim));
      }
    }
    data.instances.push_back(std::move(inst));
  }
  if (data.instances.size() != count) {
    reader.Fail(1, "header declares " + std::to_string(count) +
                       " instances, file has " +
                       std::to_string(data.instances.size()));
  }
  return data;
}

LoadedDataset LoadDataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return ReadDataset(in);
}

std::vector<int> ClassCounts(std::span<const Instance> instances,
                             const HoiLabelSpace& space) {
  std::vector<int> counts(space.num_hois(), 0);
  for (const auto& inst : instances) {
    for (int c = 0; c < space.num_hois(); ++c) counts[c] += inst.label.test(c);
  }
  return counts;
}

}  // namespace vcl
