#include "idrr/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "idrr/rng.hpp"
#include "json.hpp"

namespace idrr {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(RelationKind k) {
  switch (k) {
    case RelationKind::ImplicitInterSentential: return "implicit-inter-sentential";
    case RelationKind::ImplicitIntraSentential: return "implicit-intra-sentential";
  }
  return "";
}

static std::optional<RelationKind> parse_kind(std::string_view s) {
  if (s == "implicit-inter-sentential") return RelationKind::ImplicitInterSentential;
  if (s == "implicit-intra-sentential") return RelationKind::ImplicitIntraSentential;
  return std::nullopt;
}

static bool whitespace_only(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Parses one record object. Throws std::runtime_error with a message on any
// schema violation.
static Instance parse_one(const json& j) {
  Instance inst;
  for (const char* field : {"doc_id", "section", "relation_kind", "arg1", "arg2", "labels"}) {
    if (!j.contains(field)) throw std::runtime_error(std::string("missing field '") + field + "'");
  }
  inst.doc_id = j.at("doc_id").get<std::string>();
  if (!j.at("section").is_number_integer()) throw std::runtime_error("section must be an integer");
  inst.section = j.at("section").get<int>();
  if (inst.section < 0 || inst.section > 24)
    throw std::runtime_error("section " + std::to_string(inst.section) + " outside [0,24]");
  const auto kind_str = j.at("relation_kind").get<std::string>();
  auto kind = parse_kind(kind_str);
  if (!kind) throw std::runtime_error("unknown relation_kind '" + kind_str + "'");
  inst.kind = *kind;
  inst.arg1 = j.at("arg1").get<std::string>();
  inst.arg2 = j.at("arg2").get<std::string>();
  if (inst.arg1.empty() || whitespace_only(inst.arg1)) throw std::runtime_error("arg1 is empty");
  if (inst.arg2.empty() || whitespace_only(inst.arg2)) throw std::runtime_error("arg2 is empty");
  const json& labels = j.at("labels");
  if (!labels.is_array()) throw std::runtime_error("labels must be an array");
  if (labels.empty()) throw std::runtime_error("label set is empty");
  if (labels.size() > 2) throw std::runtime_error("label set exceeds 2");
  for (const auto& l : labels) {
    const auto name = l.get<std::string>();
    if (auto sl = parse_label(name)) {
      if (inst.labels.contains(*sl)) throw std::runtime_error("duplicate label '" + name + "'");
      inst.labels.insert(*sl);
    } else {
      if (std::find(inst.extra_labels.begin(), inst.extra_labels.end(), name) !=
          inst.extra_labels.end())
        throw std::runtime_error("duplicate label '" + name + "'");
      inst.extra_labels.push_back(name);
    }
  }
  return inst;
}

ParseResult parse_records(std::istream& in) {
  ParseResult result;
  std::string line;
  int line_no = 0;
  int next_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || whitespace_only(line)) continue;
    try {
      json j = json::parse(line);
      Instance inst = parse_one(j);
      inst.id = next_id++;
      result.instances.push_back(std::move(inst));
    } catch (const std::exception& e) {
      result.errors.push_back({line_no, e.what()});
    }
  }
  return result;
}

ParseResult parse_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open record file: " + path);
  return parse_records(in);
}

std::string serialize_record(const Instance& inst) {
  ordered_json j;
  j["doc_id"] = inst.doc_id;
  j["section"] = inst.section;
  j["relation_kind"] = std::string(to_string(inst.kind));
  j["arg1"] = inst.arg1;
  j["arg2"] = inst.arg2;
  std::vector<std::string> names;
  for (SenseLabel l : inst.labels.members()) names.emplace_back(to_string(l));
  for (const auto& e : inst.extra_labels) names.push_back(e);
  j["labels"] = names;
  return j.dump();
}

FilterResult filter_vocabulary(const std::vector<Instance>& instances) {
  FilterResult out;
  for (const Instance& inst : instances) {
    if (inst.extra_labels.empty() && !inst.labels.empty()) {
      out.kept.push_back(inst);
      continue;
    }
    if (inst.labels.empty()) {
      out.report.labels_removed += static_cast<int>(inst.extra_labels.size());
      out.report.dropped_instances.push_back(inst.id);
      out.report.notes.push_back("instance " + std::to_string(inst.id) +
                                 " dropped: no in-vocabulary label");
      continue;
    }
    Instance kept = inst;
    out.report.labels_removed += static_cast<int>(kept.extra_labels.size());
    for (const auto& name : kept.extra_labels)
      out.report.notes.push_back("instance " + std::to_string(inst.id) +
                                 ": removed out-of-vocabulary label '" + name + "'");
    kept.extra_labels.clear();
    out.kept.push_back(std::move(kept));
  }
  for (std::size_t i = 0; i < out.kept.size(); ++i) out.kept[i].id = static_cast<int>(i);
  return out;
}

CorpusStats compute_stats(const std::vector<Instance>& instances) {
  if (instances.empty()) throw std::runtime_error("compute_stats: empty corpus");
  CorpusStats stats;
  stats.total = static_cast<long>(instances.size());
  long doubles = 0;
  for (const Instance& inst : instances) {
    const auto members = inst.labels.members();
    for (SenseLabel l : members) {
      stats.label_counts[static_cast<int>(l)]++;
      stats.level1_counts[std::string(kLevel1Parent[static_cast<int>(l)])]++;
    }
    if (members.size() == 2) {
      ++doubles;
      stats.pair_counts[LabelPair::of(members[0], members[1])]++;
    }
  }
  stats.multilabel_share = static_cast<double>(doubles) / static_cast<double>(stats.total);
  return stats;
}

Vector to_label_vector(LabelSet labels) {
  if (labels.empty()) throw std::invalid_argument("to_label_vector: empty label set");
  Vector v = Vector::Zero(kNumLabels);
  for (SenseLabel l : labels.members()) v(static_cast<int>(l)) = 1.0;
  return v;
}

LabelSet from_label_vector(const Vector& v) {
  LabelSet s;
  for (int i = 0; i < kNumLabels; ++i)
    if (v(i) != 0.0) s.insert(static_cast<SenseLabel>(i));
  return s;
}

std::vector<Instance> duplicate_expansion(const std::vector<Instance>& instances) {
  std::vector<Instance> out;
  for (const Instance& inst : instances) {
    const auto members = inst.labels.members();
    if (members.size() <= 1) {
      Instance copy = inst;
      copy.origin = inst.id;
      out.push_back(std::move(copy));
      continue;
    }
    for (SenseLabel l : members) {
      Instance copy = inst;
      copy.labels = LabelSet::of({l});
      copy.origin = inst.id;
      out.push_back(std::move(copy));
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);
  return out;
}

std::string corpus_digest(const std::vector<Instance>& instances) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const Instance& inst : instances) {
    h = fnv1a64(serialize_record(inst), h);
    h = fnv1a64("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace idrr
