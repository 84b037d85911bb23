#ifndef VCL_LABEL_SPACE_H_
#define VCL_LABEL_SPACE_H_

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vcl {

// Dense binary vector over a typed id space. The tag keeps HOI, verb and
// object vectors from being mixed up at call sites.
template <typename Tag>
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(size_t size) : bits_(size, 0) {}
  explicit BitVector(std::vector<uint8_t> bits) : bits_(std::move(bits)) {}

  static BitVector FromIds(size_t size, std::span<const int> ids) {
    BitVector v(size);
    for (int id : ids) v.set(static_cast<size_t>(id));
    return v;
  }

  size_t size() const { return bits_.size(); }
  bool test(size_t i) const { return bits_[i] != 0; }
  void set(size_t i, bool on = true) { bits_[i] = on ? 1 : 0; }

  size_t count() const {
    size_t n = 0;
    for (uint8_t b : bits_) n += b;
    return n;
  }
  bool any() const { return count() > 0; }

  std::vector<int> ids() const {
    std::vector<int> out;
    for (size_t i = 0; i < bits_.size(); ++i) {
      if (bits_[i]) out.push_back(static_cast<int>(i));
    }
    return out;
  }

  const std::vector<uint8_t>& bits() const { return bits_; }

  // Elementwise OR; sizes must match.
  BitVector& operator|=(const BitVector& other) {
    for (size_t i = 0; i < bits_.size(); ++i) bits_[i] |= other.bits_[i];
    return *this;
  }

  bool operator==(const BitVector&) const = default;

 private:
  std::vector<uint8_t> bits_;
};

struct HoiTag {};
struct VerbTag {};
struct ObjectTag {};

using LabelVec = BitVector<HoiTag>;
using VerbVec = BitVector<VerbTag>;
using ObjectVec = BitVector<ObjectTag>;

// One HOI category: a non-empty verb set acting on a single object.
struct HoiDef {
  std::vector<int> verbs;
  int object = 0;
};

// Verb-HOI and object-HOI co-occurrence matrices plus id tables. Immutable
// after construction.
class HoiLabelSpace {
 public:
  // An empty space; only useful as a placeholder to assign into.
  HoiLabelSpace() = default;

  // Throws Error(kEmptyDefinition | kDuplicateHoi | kDanglingId).
  // Empty name tables get generated names ("verb3", "obj1", "verb3_obj1").
  static HoiLabelSpace Build(std::span<const HoiDef> defs, int num_verbs,
                             int num_objects,
                             std::vector<std::string> verb_names = {},
                             std::vector<std::string> object_names = {});

  int num_verbs() const { return num_verbs_; }
  int num_objects() const { return num_objects_; }
  int num_hois() const { return static_cast<int>(defs_.size()); }

  // A_v(v, c) and A_o(o, c).
  bool verb_hoi(int verb, int hoi) const {
    return verb_hoi_[static_cast<size_t>(verb) * defs_.size() + hoi] != 0;
  }
  bool object_hoi(int object, int hoi) const {
    return object_hoi_[static_cast<size_t>(object) * defs_.size() + hoi] != 0;
  }

  const HoiDef& hoi(int id) const { return defs_[id]; }
  const std::vector<HoiDef>& hois() const { return defs_; }
  int hoi_object(int id) const { return defs_[id].object; }

  const std::string& verb_name(int id) const { return verb_names_[id]; }
  const std::string& object_name(int id) const { return object_names_[id]; }
  const std::string& hoi_name(int id) const { return hoi_names_[id]; }

  bool operator==(const HoiLabelSpace& other) const;

 private:
  int num_verbs_ = 0;
  int num_objects_ = 0;
  std::vector<HoiDef> defs_;
  std::vector<uint8_t> verb_hoi_;    // row-major N_v x C
  std::vector<uint8_t> object_hoi_;  // row-major N_o x C
  std::vector<std::string> verb_names_;
  std::vector<std::string> object_names_;
  std::vector<std::string> hoi_names_;
};

// l_o = y A_o^T, l_v = y A_v^T, binarized at > 0.
std::pair<ObjectVec, VerbVec> Decompose(const LabelVec& y,
                                        const HoiLabelSpace& space);
std::pair<std::vector<ObjectVec>, std::vector<VerbVec>> Decompose(
    std::span<const LabelVec> y, const HoiLabelSpace& space);

// y_hat = (l_o A_o) & (l_v A_v). Infeasible verb/object combinations come
// back all-zero.
LabelVec Compose(const ObjectVec& l_o, const VerbVec& l_v,
                 const HoiLabelSpace& space);

inline bool IsFeasible(const LabelVec& y) { return y.any(); }

// Text format, one HOI per line: hoi_id<TAB>verb[,verb...]<TAB>object.
// Ids are dense from 0; verb and object ids are assigned in order of first
// appearance. Blank lines and lines starting with '#' are skipped.
HoiLabelSpace ReadLabelSpace(std::istream& in);
HoiLabelSpace LoadLabelSpace(const std::string& path);
void WriteLabelSpace(std::ostream& out, const HoiLabelSpace& space);

// Parses one label-space line into the running name tables. Shared by the
// standalone loader and the dataset file reader.
class LabelSpaceParser {
 public:
  // Fixes verb/object ids up front instead of first-appearance order.
  void SeedNames(std::vector<std::string> verbs,
                 std::vector<std::string> objects);
  void AddLine(std::string_view line, int line_number);
  HoiLabelSpace Finish() const;
  int num_lines() const { return static_cast<int>(defs_.size()); }

 private:
  int Intern(std::vector<std::string>& names, std::string_view name);

  std::vector<HoiDef> defs_;
  std::vector<std::string> hoi_names_;
  std::vector<std::string> verb_names_;
  std::vector<std::string> object_names_;
};

}  // namespace vcl

#endif  // VCL_LABEL_SPACE_H_
