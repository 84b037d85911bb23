#include "vcl/label_space.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <string_view>

#include "vcl/error.h"
#include "vcl/text_io.h"

namespace vcl {

namespace {

std::string DefaultHoiName(const HoiDef& def,
                           const std::vector<std::string>& verbs,
                           const std::vector<std::string>& objects) {
  // Verb names sorted, so the name survives id renumbering.
  std::vector<std::string> parts;
  for (int v : def.verbs) parts.push_back(verbs[v]);
  std::sort(parts.begin(), parts.end());
  std::string name;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i) name += '+';
    name += parts[i];
  }
  return name + "_" + objects[def.object];
}

}  // namespace

HoiLabelSpace HoiLabelSpace::Build(std::span<const HoiDef> defs, int num_verbs,
                                   int num_objects,
                                   std::vector<std::string> verb_names,
                                   std::vector<std::string> object_names) {
  if (defs.empty()) {
    throw Error(ErrorCode::kEmptyDefinition, "label space has no HOIs");
  }
  if (num_verbs <= 0 || num_objects <= 0) {
    throw Error(ErrorCode::kEmptyDefinition,
                "label space needs at least one verb and one object");
  }
  HoiLabelSpace space;
  space.num_verbs_ = num_verbs;
  space.num_objects_ = num_objects;

  std::set<std::pair<std::vector<int>, int>> seen;
  std::vector<uint8_t> verb_used(num_verbs, 0), object_used(num_objects, 0);
  for (size_t c = 0; c < defs.size(); ++c) {
    HoiDef def = defs[c];
    std::sort(def.verbs.begin(), def.verbs.end());
    def.verbs.erase(std::unique(def.verbs.begin(), def.verbs.end()),
                    def.verbs.end());
    if (def.verbs.empty()) {
      throw Error(ErrorCode::kEmptyDefinition,
                  "HOI " + std::to_string(c) + " has no verbs");
    }
    for (int v : def.verbs) {
      if (v < 0 || v >= num_verbs) {
        throw Error(ErrorCode::kDanglingId,
                    "HOI " + std::to_string(c) + " references verb " +
                        std::to_string(v) + " outside [0, " +
                        std::to_string(num_verbs) + ")");
      }
      verb_used[v] = 1;
    }
    if (def.object < 0 || def.object >= num_objects) {
      throw Error(ErrorCode::kDanglingId,
                  "HOI " + std::to_string(c) + " references object " +
                      std::to_string(def.object) + " outside [0, " +
                      std::to_string(num_objects) + ")");
    }
    object_used[def.object] = 1;
    if (!seen.emplace(def.verbs, def.object).second) {
      throw Error(ErrorCode::kDuplicateHoi,
                  "HOI " + std::to_string(c) +
                      " repeats an earlier (verb set, object) pair");
    }
    space.defs_.push_back(std::move(def));
  }
  for (int v = 0; v < num_verbs; ++v) {
    if (!verb_used[v]) {
      throw Error(ErrorCode::kDanglingId,
                  "verb " + std::to_string(v) + " appears in no HOI");
    }
  }
  for (int o = 0; o < num_objects; ++o) {
    if (!object_used[o]) {
      throw Error(ErrorCode::kDanglingId,
                  "object " + std::to_string(o) + " appears in no HOI");
    }
  }

  const size_t num_hois = space.defs_.size();
  space.verb_hoi_.assign(static_cast<size_t>(num_verbs) * num_hois, 0);
  space.object_hoi_.assign(static_cast<size_t>(num_objects) * num_hois, 0);
  for (size_t c = 0; c < num_hois; ++c) {
    for (int v : space.defs_[c].verbs) space.verb_hoi_[v * num_hois + c] = 1;
    space.object_hoi_[space.defs_[c].object * num_hois + c] = 1;
  }

  if (verb_names.empty()) {
    for (int v = 0; v < num_verbs; ++v) {
      verb_names.push_back("verb" + std::to_string(v));
    }
  }
  if (object_names.empty()) {
    for (int o = 0; o < num_objects; ++o) {
      object_names.push_back("obj" + std::to_string(o));
    }
  }
  if (static_cast<int>(verb_names.size()) != num_verbs ||
      static_cast<int>(object_names.size()) != num_objects) {
    throw Error(ErrorCode::kShapeMismatch, "name table size mismatch");
  }
  space.verb_names_ = std::move(verb_names);
  space.object_names_ = std::move(object_names);
  for (const auto& def : space.defs_) {
    space.hoi_names_.push_back(
        DefaultHoiName(def, space.verb_names_, space.object_names_));
  }
  return space;
}

bool HoiLabelSpace::operator==(const HoiLabelSpace& other) const {
  if (num_verbs_ != other.num_verbs_ || num_objects_ != other.num_objects_ ||
      defs_.size() != other.defs_.size()) {
    return false;
  }
  for (size_t c = 0; c < defs_.size(); ++c) {
    if (defs_[c].verbs != other.defs_[c].verbs ||
        defs_[c].object != other.defs_[c].object) {
      return false;
    }
  }
  return verb_names_ == other.verb_names_ &&
         object_names_ == other.object_names_;
}

std::pair<ObjectVec, VerbVec> Decompose(const LabelVec& y,
                                        const HoiLabelSpace& space) {
  const int num_hois = space.num_hois();
  if (static_cast<int>(y.size()) != num_hois) {
    throw Error(ErrorCode::kShapeMismatch,
                "label length " + std::to_string(y.size()) + " != C=" +
                    std::to_string(num_hois));
  }
  std::vector<int> object_counts(space.num_objects(), 0);
  std::vector<int> verb_counts(space.num_verbs(), 0);
  for (int o = 0; o < space.num_objects(); ++o) {
    for (int c = 0; c < num_hois; ++c) {
      object_counts[o] += y.test(c) * space.object_hoi(o, c);
    }
  }
  for (int v = 0; v < space.num_verbs(); ++v) {
    for (int c = 0; c < num_hois; ++c) {
      verb_counts[v] += y.test(c) * space.verb_hoi(v, c);
    }
  }
  ObjectVec l_o(space.num_objects());
  VerbVec l_v(space.num_verbs());
  for (int o = 0; o < space.num_objects(); ++o) l_o.set(o, object_counts[o] > 0);
  for (int v = 0; v < space.num_verbs(); ++v) l_v.set(v, verb_counts[v] > 0);
  return {std::move(l_o), std::move(l_v)};
}

std::pair<std::vector<ObjectVec>, std::vector<VerbVec>> Decompose(
    std::span<const LabelVec> y, const HoiLabelSpace& space) {
  std::pair<std::vector<ObjectVec>, std::vector<VerbVec>> out;
  out.first.reserve(y.size());
  out.second.reserve(y.size());
  for (const auto& row : y) {
    auto [l_o, l_v] = Decompose(row, space);
    out.first.push_back(std::move(l_o));
    out.second.push_back(std::move(l_v));
  }
  return out;
}

LabelVec Compose(const ObjectVec& l_o, const VerbVec& l_v,
                 const HoiLabelSpace& space) {
  if (static_cast<int>(l_o.size()) != space.num_objects() ||
      static_cast<int>(l_v.size()) != space.num_verbs()) {
    throw Error(ErrorCode::kShapeMismatch,
                "compose: vector lengths do not match the label space");
  }
  const int num_hois = space.num_hois();
  LabelVec y(num_hois);
  for (int c = 0; c < num_hois; ++c) {
    int object_count = 0;
    for (int o = 0; o < space.num_objects(); ++o) {
      object_count += l_o.test(o) * space.object_hoi(o, c);
    }
    int verb_count = 0;
    for (int v = 0; v < space.num_verbs(); ++v) {
      verb_count += l_v.test(v) * space.verb_hoi(v, c);
    }
    y.set(c, object_count > 0 && verb_count > 0);
  }
  return y;
}

void LabelSpaceParser::SeedNames(std::vector<std::string> verbs,
                                 std::vector<std::string> objects) {
  verb_names_ = std::move(verbs);
  object_names_ = std::move(objects);
}

int LabelSpaceParser::Intern(std::vector<std::string>& names,
                             std::string_view name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it != names.end()) return static_cast<int>(it - names.begin());
  names.emplace_back(name);
  return static_cast<int>(names.size()) - 1;
}

void LabelSpaceParser::AddLine(std::string_view line, int line_number) {
  auto where = [&](int column) {
    return "line " + std::to_string(line_number) + ", column " +
           std::to_string(column);
  };
  auto fields = Split(line, '\t');
  if (fields.size() != 3) {
    throw Error(ErrorCode::kParseError,
                where(1) + ": expected 3 tab-separated fields, got " +
                    std::to_string(fields.size()));
  }
  int64_t id = 0;
  try {
    id = ParseInt(fields[0], "hoi_id");
  } catch (const Error& e) {
    throw Error(ErrorCode::kParseError, where(1) + ": " + e.what());
  }
  if (id != static_cast<int64_t>(defs_.size())) {
    throw Error(ErrorCode::kParseError,
                where(1) + ": hoi ids must be dense from 0; expected " +
                    std::to_string(defs_.size()) + ", got " +
                    std::to_string(id));
  }
  HoiDef def;
  for (auto verb : Split(fields[1], ',')) {
    verb = Trim(verb);
    if (verb.empty()) {
      throw Error(ErrorCode::kParseError, where(2) + ": empty verb name");
    }
    def.verbs.push_back(Intern(verb_names_, verb));
  }
  auto object = Trim(fields[2]);
  if (object.empty()) {
    throw Error(ErrorCode::kParseError, where(3) + ": empty object name");
  }
  def.object = Intern(object_names_, object);
  defs_.push_back(std::move(def));
}

HoiLabelSpace LabelSpaceParser::Finish() const {
  return HoiLabelSpace::Build(defs_, static_cast<int>(verb_names_.size()),
                              static_cast<int>(object_names_.size()),
                              verb_names_, object_names_);
}

HoiLabelSpace ReadLabelSpace(std::istream& in) {
  LabelSpaceParser parser;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty() || line[0] == '#') continue;
    parser.AddLine(line, line_number);
  }
  return parser.Finish();
}

HoiLabelSpace LoadLabelSpace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return ReadLabelSpace(in);
}

void WriteLabelSpace(std::ostream& out, const HoiLabelSpace& space) {
  for (int c = 0; c < space.num_hois(); ++c) {
    const auto& def = space.hoi(c);
    out << c << '\t';
    for (size_t i = 0; i < def.verbs.size(); ++i) {
      if (i) out << ',';
      out << space.verb_name(def.verbs[i]);
    }
    out << '\t' << space.object_name(def.object) << '\n';
  }
}

}  // namespace vcl
