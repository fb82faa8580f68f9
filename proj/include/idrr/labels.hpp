#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace idrr {

// The 14 Level-2 senses with more than 100 annotated instances in PDTB-3,
// in canonical index order. The order is fixed for the life of a run manifest.
inline constexpr int kNumLabels = 14;

enum class SenseLabel : int {
  Concession = 0,
  Contrast = 1,
  Cause = 2,
  CauseBelief = 3,
  Condition = 4,
  Purpose = 5,
  Conjunction = 6,
  Equivalence = 7,
  Instantiation = 8,
  LevelOfDetail = 9,
  Manner = 10,
  Substitution = 11,
  Asynchronous = 12,
  Synchronous = 13,
};

inline constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "Concession",    "Contrast",     "Cause",  "Cause+Belief",    "Condition",
    "Purpose",       "Conjunction",  "Equivalence", "Instantiation",
    "Level-of-detail", "Manner",     "Substitution", "Asynchronous", "Synchronous",
};

// Level-1 parent of each Level-2 sense (kept for statistics only; all
// classification targets are Level-2).
inline constexpr std::array<std::string_view, kNumLabels> kLevel1Parent = {
    "Comparison",  "Comparison",  "Contingency", "Contingency", "Contingency",
    "Contingency", "Expansion",   "Expansion",   "Expansion",   "Expansion",
    "Expansion",   "Expansion",   "Temporal",    "Temporal",
};

inline std::string_view to_string(SenseLabel l) { return kLabelNames[static_cast<int>(l)]; }

inline std::optional<SenseLabel> parse_label(std::string_view name) {
  for (int i = 0; i < kNumLabels; ++i)
    if (kLabelNames[i] == name) return static_cast<SenseLabel>(i);
  return std::nullopt;
}

// Set of sense labels as a 14-bit mask. Value type, cheap to copy and compare.
class LabelSet {
 public:
  LabelSet() = default;

  static LabelSet of(std::initializer_list<SenseLabel> labels) {
    LabelSet s;
    for (SenseLabel l : labels) s.insert(l);
    return s;
  }

  void insert(SenseLabel l) { bits_ |= static_cast<std::uint16_t>(1u << static_cast<int>(l)); }
  void erase(SenseLabel l) { bits_ &= static_cast<std::uint16_t>(~(1u << static_cast<int>(l))); }
  bool contains(SenseLabel l) const { return (bits_ >> static_cast<int>(l)) & 1u; }
  int size() const { return __builtin_popcount(bits_); }
  bool empty() const { return bits_ == 0; }
  std::uint16_t bits() const { return bits_; }

  // Members in canonical index order.
  std::vector<SenseLabel> members() const {
    std::vector<SenseLabel> out;
    for (int i = 0; i < kNumLabels; ++i)
      if (contains(static_cast<SenseLabel>(i))) out.push_back(static_cast<SenseLabel>(i));
    return out;
  }

  LabelSet intersect(LabelSet o) const {
    LabelSet s;
    s.bits_ = bits_ & o.bits_;
    return s;
  }
  LabelSet sym_diff(LabelSet o) const {
    LabelSet s;
    s.bits_ = bits_ ^ o.bits_;
    return s;
  }

  bool operator==(const LabelSet&) const = default;

 private:
  std::uint16_t bits_ = 0;
};

// Unordered label pair, stored with lo < hi by canonical index.
struct LabelPair {
  int lo = 0;
  int hi = 0;

  static LabelPair of(SenseLabel a, SenseLabel b) {
    int i = static_cast<int>(a), j = static_cast<int>(b);
    if (i > j) std::swap(i, j);
    return LabelPair{i, j};
  }
  auto operator<=>(const LabelPair&) const = default;
};

}  // namespace idrr
