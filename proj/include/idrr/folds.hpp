#pragma once

#include <string>
#include <vector>

#include "idrr/corpus.hpp"

namespace idrr {

inline constexpr int kNumFolds = 12;

struct FoldSpec {
  int fold_id = 0;
  std::vector<int> train;  // instance ids, sorted ascending
  std::vector<int> dev;
  std::vector<int> test;
};

enum class SplitMode { SectionLevel, ExampleLevel };

std::string_view to_string(SplitMode m);

struct SplitPlan {
  SplitMode mode = SplitMode::SectionLevel;
  std::vector<FoldSpec> folds;  // exactly 12
  std::uint64_t seed = 0;
  std::string corpus_digest;
  std::vector<std::string> notes;  // e.g. sections never used as test
};

// 12-fold plan over whole WSJ sections: fold i tests sections
// {2i, 2i+1} mod 25, uses {2i+2, 2i+3} mod 25 for dev, and trains on the
// remaining 21 sections. Deterministic and seed-independent.
SplitPlan section_folds(const std::vector<Instance>& instances);

// 12-fold plan stratified at the example level: multi-label instances by
// unordered pair type, single-label instances by label, each stratum shuffled
// by the seeded generator and dealt round-robin into 12 portions. Fold i
// tests portion i and uses portion (i+1) mod 12 for dev.
SplitPlan example_folds(const std::vector<Instance>& instances, std::uint64_t seed);

std::string serialize_plan(const SplitPlan& plan);
SplitPlan parse_plan(const std::string& text);
void save_plan(const SplitPlan& plan, const std::string& path);
SplitPlan load_plan(const std::string& path);

}  // namespace idrr
