#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "idrr/labels.hpp"
#include "idrr/types.hpp"

namespace idrr {

enum class RelationKind { ImplicitInterSentential, ImplicitIntraSentential };

std::string_view to_string(RelationKind k);

// One argument pair with provenance and its gold Level-2 sense set.
// `extra_labels` holds label names outside the 14-name vocabulary exactly as
// they appeared in the record; filter_vocabulary removes them.
struct Instance {
  int id = -1;
  std::string doc_id;
  int section = 0;  // WSJ section, 0..24
  RelationKind kind = RelationKind::ImplicitInterSentential;
  std::string arg1;
  std::string arg2;
  LabelSet labels;
  std::vector<std::string> extra_labels;
  int origin = -1;  // source instance id after duplicate_expansion, else -1
};

struct ParseError {
  int line = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  std::vector<Instance> instances;
  std::vector<ParseError> errors;
};

// Parses line-delimited records (one JSON object per line). Valid instances
// are returned in input order with id = 0-based line index; malformed lines
// are reported with their line number. Blank lines are skipped.
ParseResult parse_records(std::istream& in);
ParseResult parse_records_file(const std::string& path);

// Canonical single-line serialization; parse_records(serialize(x)) == x.
std::string serialize_record(const Instance& inst);

struct FilterReport {
  int labels_removed = 0;                // out-of-vocabulary labels stripped
  std::vector<int> dropped_instances;    // ids whose label set became empty
  std::vector<std::string> notes;
};

struct FilterResult {
  std::vector<Instance> kept;
  FilterReport report;
};

// Removes labels outside the 14-label vocabulary; drops instances whose set
// becomes empty. Total and idempotent. Kept instances get ids 0..n-1.
FilterResult filter_vocabulary(const std::vector<Instance>& instances);

struct CorpusStats {
  std::array<long, kNumLabels> label_counts{};
  std::map<std::string, long> level1_counts;  // derived from the 14-label vocabulary
  std::map<LabelPair, long> pair_counts;
  long total = 0;
  double multilabel_share = 0.0;
};

CorpusStats compute_stats(const std::vector<Instance>& instances);

// Binary indicator vector over the 14 labels (the multi-hot target).
Vector to_label_vector(LabelSet labels);
LabelSet from_label_vector(const Vector& v);

// Replaces each 2-label instance by two single-label copies sharing doc_id,
// section, and arguments; `origin` links back to the source instance id.
std::vector<Instance> duplicate_expansion(const std::vector<Instance>& instances);

// FNV-1a over the canonical serialization of all instances, hex-encoded.
std::string corpus_digest(const std::vector<Instance>& instances);

}  // namespace idrr
