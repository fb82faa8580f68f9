#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "idrr/corpus.hpp"
#include "idrr/heads.hpp"
#include "idrr/labels.hpp"

namespace idrr {

struct ConfusionCounts {
  std::array<long, kNumLabels> tp{};
  std::array<long, kNumLabels> fp{};
  std::array<long, kNumLabels> fn{};
};

// Per-label and macro precision/recall/F1 as fractions in [0,1]; reports
// render them as percentages. Zero denominators yield 0.
struct PrfReport {
  Vector precision{Vector::Zero(kNumLabels)};
  Vector recall{Vector::Zero(kNumLabels)};
  Vector f1{Vector::Zero(kNumLabels)};
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
};

// Predicted-count x gold-count table. Rows: 2, 1, 0 predictions plus an
// overflow row for >2 (never observed in the paper). Columns: 2 and 1 gold.
struct CountTable {
  std::array<std::array<long, 2>, 4> cells{};

  static int pred_row(int pred_count) {
    if (pred_count == 2) return 0;
    if (pred_count == 1) return 1;
    if (pred_count == 0) return 2;
    return 3;
  }
  static int gold_col(int gold_count) { return gold_count == 2 ? 0 : 1; }
  long total() const;
};

// Outcome classes for 2-gold-label instances.
struct Breakdown {
  long both_correct = 0;
  long one_correct = 0;
  long both_incorrect = 0;
  long no_prediction = 0;
  long overflow_flagged = 0;  // predictions covering both golds plus extras
  long total() const { return both_correct + one_correct + both_incorrect + no_prediction; }
};

using CooccurrenceMatrix = Eigen::Matrix<long, kNumLabels, kNumLabels>;

// (gold pair -> predicted single label -> count), |gold|=2 and |pred|=1.
using UnderpredictionMap = std::map<LabelPair, std::array<long, kNumLabels>>;
// (gold single label -> predicted pair -> count), |gold|=1 and |pred|=2.
using OverpredictionMap = std::map<int, std::map<LabelPair, long>>;

// Joins prediction records to gold instances by instance id; throws on an
// id with no matching instance.
class GoldIndex {
 public:
  explicit GoldIndex(const std::vector<Instance>& instances);
  const Instance& at(int instance_id) const;

 private:
  std::map<int, const Instance*> by_id_;
};

ConfusionCounts confusion(const std::vector<PredictionRecord>& records, const GoldIndex& golds);
PrfReport macro_prf(const ConfusionCounts& counts);
double hamming(const std::vector<PredictionRecord>& records, const GoldIndex& golds);

// Single-label criterion: each record reduced to its argmax label; a match
// with any gold label counts as tp for that label, otherwise fp for the
// predicted label and fn for every gold label.
ConfusionCounts single_criterion_confusion(const std::vector<PredictionRecord>& records,
                                           const GoldIndex& golds);
PrfReport single_criterion_eval(const std::vector<PredictionRecord>& records,
                                const GoldIndex& golds);

CountTable count_table(const std::vector<PredictionRecord>& records, const GoldIndex& golds);
Breakdown multilabel_breakdown(const std::vector<PredictionRecord>& records,
                               const GoldIndex& golds);

CooccurrenceMatrix cooccurrence(const std::vector<LabelPair>& pairs);
std::vector<LabelPair> gold_pairs(const std::vector<PredictionRecord>& records,
                                  const GoldIndex& golds);
std::vector<LabelPair> predicted_pairs(const std::vector<PredictionRecord>& records);

UnderpredictionMap underprediction_matrix(const std::vector<PredictionRecord>& records,
                                          const GoldIndex& golds);
OverpredictionMap overprediction_matrix(const std::vector<PredictionRecord>& records,
                                        const GoldIndex& golds);

// Everything the evaluation stage derives from one fold's predictions.
struct MetricsReport {
  int fold_id = 0;
  std::string manifest_digest;
  ConfusionCounts counts;
  PrfReport multi;
  std::optional<PrfReport> single;  // present when records carry probabilities
  double hamming_loss = 0.0;        // fraction in [0,1]
  CountTable table;
  Breakdown breakdown;
  CooccurrenceMatrix cooc_gold = CooccurrenceMatrix::Zero();
  CooccurrenceMatrix cooc_pred = CooccurrenceMatrix::Zero();
  UnderpredictionMap underpred;
  OverpredictionMap overpred;
};

MetricsReport evaluate_fold(const std::vector<PredictionRecord>& records,
                            const std::vector<Instance>& instances, int fold_id,
                            const std::string& manifest_digest);

std::string serialize_report(const MetricsReport& report);
MetricsReport parse_report(const std::string& text);

struct MeanStd {
  double mean = 0.0;
  double std_pop = 0.0;     // population standard deviation (the default)
  double std_sample = 0.0;  // auxiliary column
};

// Mean and standard deviation across fold reports; count-style tables and
// matrices are summed. Requires at least 2 folds.
struct AggregateReport {
  int num_folds = 0;
  std::string manifest_digest;
  std::array<MeanStd, kNumLabels> precision;
  std::array<MeanStd, kNumLabels> recall;
  std::array<MeanStd, kNumLabels> f1;
  MeanStd macro_precision, macro_recall, macro_f1;
  MeanStd hamming_loss;
  std::optional<std::array<MeanStd, kNumLabels>> single_f1;
  std::optional<MeanStd> single_macro_f1;
  CountTable table_sum;
  Breakdown breakdown_sum;
  CooccurrenceMatrix cooc_gold_sum = CooccurrenceMatrix::Zero();
  CooccurrenceMatrix cooc_pred_sum = CooccurrenceMatrix::Zero();
};

AggregateReport aggregate(const std::vector<MetricsReport>& folds);

// Human-readable renderings (values as percentages, two decimals).
std::string report_text(const MetricsReport& report);
std::string aggregate_text(const AggregateReport& report);
std::string cooccurrence_text(const CooccurrenceMatrix& m, const std::string& title);
std::string underprediction_text(const UnderpredictionMap& m);
std::string overprediction_text(const OverpredictionMap& m);

}  // namespace idrr
