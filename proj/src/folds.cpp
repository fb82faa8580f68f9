#include "idrr/folds.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "idrr/io.hpp"
#include "idrr/rng.hpp"
#include "json.hpp"

namespace idrr {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(SplitMode m) {
  return m == SplitMode::SectionLevel ? "section-level" : "example-level";
}

SplitPlan section_folds(const std::vector<Instance>& instances) {
  SplitPlan plan;
  plan.mode = SplitMode::SectionLevel;
  plan.corpus_digest = corpus_digest(instances);

  std::set<int> present;
  for (const Instance& inst : instances) present.insert(inst.section);
  if (static_cast<int>(present.size()) < 25)
    plan.notes.push_back("warning: corpus has only " + std::to_string(present.size()) +
                         " distinct sections of 25; folds built over sections present");

  std::set<int> tested;
  for (int i = 0; i < kNumFolds; ++i) {
    FoldSpec fold;
    fold.fold_id = i;
    const int t0 = (2 * i) % 25, t1 = (2 * i + 1) % 25;
    const int d0 = (2 * i + 2) % 25, d1 = (2 * i + 3) % 25;
    tested.insert(t0);
    tested.insert(t1);
    for (const Instance& inst : instances) {
      if (inst.section == t0 || inst.section == t1)
        fold.test.push_back(inst.id);
      else if (inst.section == d0 || inst.section == d1)
        fold.dev.push_back(inst.id);
      else
        fold.train.push_back(inst.id);
    }
    plan.folds.push_back(std::move(fold));
  }
  for (int s = 0; s < 25; ++s)
    if (!tested.count(s))
      plan.notes.push_back("section " + std::to_string(s) +
                           " never appears in any test set under the stride-2 rotation");
  return plan;
}

SplitPlan example_folds(const std::vector<Instance>& instances, std::uint64_t seed) {
  SplitPlan plan;
  plan.mode = SplitMode::ExampleLevel;
  plan.seed = seed;
  plan.corpus_digest = corpus_digest(instances);

  // Strata in deterministic key order: single-label by label index, then
  // multi-label by unordered pair.
  std::map<int, std::vector<int>> single_strata;
  std::map<LabelPair, std::vector<int>> pair_strata;
  for (const Instance& inst : instances) {
    const auto members = inst.labels.members();
    if (members.size() == 1)
      single_strata[static_cast<int>(members[0])].push_back(inst.id);
    else
      pair_strata[LabelPair::of(members[0], members[1])].push_back(inst.id);
  }

  std::array<std::vector<int>, kNumFolds> portions;
  Rng rng(seed);
  auto deal = [&](std::vector<int>& ids) {
    rng.shuffle(ids);
    for (std::size_t k = 0; k < ids.size(); ++k)
      portions[k % kNumFolds].push_back(ids[k]);
  };
  for (auto& [label, ids] : single_strata) deal(ids);
  for (auto& [pair, ids] : pair_strata) deal(ids);

  for (int i = 0; i < kNumFolds; ++i) {
    FoldSpec fold;
    fold.fold_id = i;
    fold.test = portions[i];
    fold.dev = portions[(i + 1) % kNumFolds];
    for (int j = 0; j < kNumFolds; ++j) {
      if (j == i || j == (i + 1) % kNumFolds) continue;
      fold.train.insert(fold.train.end(), portions[j].begin(), portions[j].end());
    }
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.dev.begin(), fold.dev.end());
    std::sort(fold.test.begin(), fold.test.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

std::string serialize_plan(const SplitPlan& plan) {
  ordered_json j;
  j["mode"] = std::string(to_string(plan.mode));
  j["seed"] = plan.seed;
  j["corpus_digest"] = plan.corpus_digest;
  j["notes"] = plan.notes;
  ordered_json folds = ordered_json::array();
  for (const FoldSpec& f : plan.folds) {
    ordered_json fj;
    fj["fold_id"] = f.fold_id;
    fj["train"] = f.train;
    fj["dev"] = f.dev;
    fj["test"] = f.test;
    folds.push_back(std::move(fj));
  }
  j["folds"] = std::move(folds);
  return j.dump(2) + "\n";
}

SplitPlan parse_plan(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  SplitPlan plan;
  const auto mode = j.at("mode").get<std::string>();
  if (mode == "section-level")
    plan.mode = SplitMode::SectionLevel;
  else if (mode == "example-level")
    plan.mode = SplitMode::ExampleLevel;
  else
    throw std::runtime_error("unknown split mode '" + mode + "'");
  plan.seed = j.at("seed").get<std::uint64_t>();
  plan.corpus_digest = j.at("corpus_digest").get<std::string>();
  plan.notes = j.at("notes").get<std::vector<std::string>>();
  for (const auto& fj : j.at("folds")) {
    FoldSpec f;
    f.fold_id = fj.at("fold_id").get<int>();
    f.train = fj.at("train").get<std::vector<int>>();
    f.dev = fj.at("dev").get<std::vector<int>>();
    f.test = fj.at("test").get<std::vector<int>>();
    plan.folds.push_back(std::move(f));
  }
  if (plan.folds.size() != kNumFolds)
    throw std::runtime_error("plan must contain exactly 12 folds");
  return plan;
}

void save_plan(const SplitPlan& plan, const std::string& path) {
  write_file_atomic(path, serialize_plan(plan));
}

SplitPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

}  // namespace idrr
