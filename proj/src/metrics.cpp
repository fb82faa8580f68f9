#include "idrr/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace idrr {

using ordered_json = nlohmann::ordered_json;

long CountTable::total() const {
  long n = 0;
  for (const auto& row : cells)
    for (long c : row) n += c;
  return n;
}

GoldIndex::GoldIndex(const std::vector<Instance>& instances) {
  for (const Instance& inst : instances) by_id_[inst.id] = &inst;
}

const Instance& GoldIndex::at(int instance_id) const {
  auto it = by_id_.find(instance_id);
  if (it == by_id_.end())
    throw std::runtime_error("prediction references unknown instance id " +
                             std::to_string(instance_id));
  return *it->second;
}

ConfusionCounts confusion(const std::vector<PredictionRecord>& records, const GoldIndex& golds) {
  ConfusionCounts counts;
  for (const PredictionRecord& rec : records) {
    const LabelSet gold = golds.at(rec.instance_id).labels;
    for (int i = 0; i < kNumLabels; ++i) {
      const auto l = static_cast<SenseLabel>(i);
      const bool p = rec.predicted.contains(l);
      const bool g = gold.contains(l);
      if (p && g) counts.tp[i]++;
      if (p && !g) counts.fp[i]++;
      if (!p && g) counts.fn[i]++;
    }
  }
  return counts;
}

static double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

PrfReport macro_prf(const ConfusionCounts& counts) {
  PrfReport r;
  for (int i = 0; i < kNumLabels; ++i) {
    const double tp = static_cast<double>(counts.tp[i]);
    const double p = safe_div(tp, tp + static_cast<double>(counts.fp[i]));
    const double rec = safe_div(tp, tp + static_cast<double>(counts.fn[i]));
    r.precision(i) = p;
    r.recall(i) = rec;
    r.f1(i) = safe_div(2.0 * p * rec, p + rec);
  }
  r.macro_precision = r.precision.mean();
  r.macro_recall = r.recall.mean();
  r.macro_f1 = r.f1.mean();
  return r;
}

double hamming(const std::vector<PredictionRecord>& records, const GoldIndex& golds) {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const PredictionRecord& rec : records) {
    const LabelSet gold = golds.at(rec.instance_id).labels;
    sum += static_cast<double>(rec.predicted.sym_diff(gold).size()) / kNumLabels;
  }
  return sum / static_cast<double>(records.size());
}

ConfusionCounts single_criterion_confusion(const std::vector<PredictionRecord>& records,
                                           const GoldIndex& golds) {
  ConfusionCounts counts;
  for (const PredictionRecord& rec : records) {
    if (rec.probs.size() != kNumLabels)
      throw std::runtime_error("single-label criterion needs per-label probabilities");
    const SenseLabel pred = argmax_predict(rec.probs);
    const LabelSet gold = golds.at(rec.instance_id).labels;
    if (gold.contains(pred)) {
      counts.tp[static_cast<int>(pred)]++;
    } else {
      counts.fp[static_cast<int>(pred)]++;
      for (SenseLabel g : gold.members()) counts.fn[static_cast<int>(g)]++;
    }
  }
  return counts;
}

PrfReport single_criterion_eval(const std::vector<PredictionRecord>& records,
                                const GoldIndex& golds) {
  return macro_prf(single_criterion_confusion(records, golds));
}

CountTable count_table(const std::vector<PredictionRecord>& records, const GoldIndex& golds) {
  CountTable table;
  for (const PredictionRecord& rec : records) {
    const LabelSet gold = golds.at(rec.instance_id).labels;
    table.cells[CountTable::pred_row(rec.predicted.size())][CountTable::gold_col(gold.size())]++;
  }
  return table;
}

Breakdown multilabel_breakdown(const std::vector<PredictionRecord>& records,
                               const GoldIndex& golds) {
  Breakdown b;
  for (const PredictionRecord& rec : records) {
    const LabelSet gold = golds.at(rec.instance_id).labels;
    if (gold.size() != 2) continue;
    const LabelSet pred = rec.predicted;
    if (pred.empty()) {
      b.no_prediction++;
    } else if (pred == gold) {
      b.both_correct++;
    } else if (pred.intersect(gold).size() >= 1) {
      b.one_correct++;
      if (pred.intersect(gold).size() == 2) b.overflow_flagged++;
    } else {
      b.both_incorrect++;
    }
  }
  return b;
}

CooccurrenceMatrix cooccurrence(const std::vector<LabelPair>& pairs) {
  CooccurrenceMatrix m = CooccurrenceMatrix::Zero();
  for (const LabelPair& p : pairs) {
    m(p.lo, p.hi)++;
    m(p.hi, p.lo)++;
  }
  return m;
}

std::vector<LabelPair> gold_pairs(const std::vector<PredictionRecord>& records,
                                  const GoldIndex& golds) {
  std::vector<LabelPair> out;
  for (const PredictionRecord& rec : records) {
    const auto members = golds.at(rec.instance_id).labels.members();
    if (members.size() == 2) out.push_back(LabelPair::of(members[0], members[1]));
  }
  return out;
}

std::vector<LabelPair> predicted_pairs(const std::vector<PredictionRecord>& records) {
  std::vector<LabelPair> out;
  for (const PredictionRecord& rec : records) {
    const auto members = rec.predicted.members();
    if (members.size() == 2) out.push_back(LabelPair::of(members[0], members[1]));
  }
  return out;
}

UnderpredictionMap underprediction_matrix(const std::vector<PredictionRecord>& records,
                                          const GoldIndex& golds) {
  UnderpredictionMap m;
  for (const PredictionRecord& rec : records) {
    const auto gold = golds.at(rec.instance_id).labels.members();
    const auto pred = rec.predicted.members();
    if (gold.size() != 2 || pred.size() != 1) continue;
    auto& row = m[LabelPair::of(gold[0], gold[1])];
    row[static_cast<int>(pred[0])]++;
  }
  return m;
}

OverpredictionMap overprediction_matrix(const std::vector<PredictionRecord>& records,
                                        const GoldIndex& golds) {
  OverpredictionMap m;
  for (const PredictionRecord& rec : records) {
    const auto gold = golds.at(rec.instance_id).labels.members();
    const auto pred = rec.predicted.members();
    if (gold.size() != 1 || pred.size() != 2) continue;
    m[static_cast<int>(gold[0])][LabelPair::of(pred[0], pred[1])]++;
  }
  return m;
}

MetricsReport evaluate_fold(const std::vector<PredictionRecord>& records,
                            const std::vector<Instance>& instances, int fold_id,
                            const std::string& manifest_digest) {
  GoldIndex golds(instances);
  MetricsReport report;
  report.fold_id = fold_id;
  report.manifest_digest = manifest_digest;
  report.counts = confusion(records, golds);
  report.multi = macro_prf(report.counts);
  report.hamming_loss = hamming(records, golds);
  report.table = count_table(records, golds);
  report.breakdown = multilabel_breakdown(records, golds);
  report.cooc_gold = cooccurrence(gold_pairs(records, golds));
  report.cooc_pred = cooccurrence(predicted_pairs(records));
  report.underpred = underprediction_matrix(records, golds);
  report.overpred = overprediction_matrix(records, golds);
  const bool has_probs =
      !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) {
        return r.probs.size() == kNumLabels;
      });
  if (has_probs) report.single = single_criterion_eval(records, golds);
  return report;
}

namespace {

ordered_json prf_to_json(const PrfReport& r) {
  ordered_json j;
  j["precision"] = std::vector<double>(r.precision.data(), r.precision.data() + kNumLabels);
  j["recall"] = std::vector<double>(r.recall.data(), r.recall.data() + kNumLabels);
  j["f1"] = std::vector<double>(r.f1.data(), r.f1.data() + kNumLabels);
  j["macro_precision"] = r.macro_precision;
  j["macro_recall"] = r.macro_recall;
  j["macro_f1"] = r.macro_f1;
  return j;
}

PrfReport prf_from_json(const ordered_json& j) {
  PrfReport r;
  const auto p = j.at("precision").get<std::vector<double>>();
  const auto rec = j.at("recall").get<std::vector<double>>();
  const auto f = j.at("f1").get<std::vector<double>>();
  r.precision = Eigen::Map<const Vector>(p.data(), kNumLabels);
  r.recall = Eigen::Map<const Vector>(rec.data(), kNumLabels);
  r.f1 = Eigen::Map<const Vector>(f.data(), kNumLabels);
  r.macro_precision = j.at("macro_precision").get<double>();
  r.macro_recall = j.at("macro_recall").get<double>();
  r.macro_f1 = j.at("macro_f1").get<double>();
  return r;
}

ordered_json matrix_to_json(const CooccurrenceMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < kNumLabels; ++i) {
    std::vector<long> row(kNumLabels);
    for (int j = 0; j < kNumLabels; ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(row);
  }
  return rows;
}

CooccurrenceMatrix matrix_from_json(const ordered_json& j) {
  CooccurrenceMatrix m = CooccurrenceMatrix::Zero();
  int i = 0;
  for (const auto& row : j) {
    const auto vals = row.get<std::vector<long>>();
    for (int k = 0; k < kNumLabels; ++k) m(i, k) = vals[static_cast<std::size_t>(k)];
    ++i;
  }
  return m;
}

}  // namespace

std::string serialize_report(const MetricsReport& report) {
  ordered_json j;
  j["fold_id"] = report.fold_id;
  j["manifest_digest"] = report.manifest_digest;
  j["tp"] = report.counts.tp;
  j["fp"] = report.counts.fp;
  j["fn"] = report.counts.fn;
  j["multi"] = prf_to_json(report.multi);
  if (report.single) j["single"] = prf_to_json(*report.single);
  j["hamming_loss"] = report.hamming_loss;
  j["count_table"] = report.table.cells;
  j["breakdown"] = {{"both_correct", report.breakdown.both_correct},
                    {"one_correct", report.breakdown.one_correct},
                    {"both_incorrect", report.breakdown.both_incorrect},
                    {"no_prediction", report.breakdown.no_prediction},
                    {"overflow_flagged", report.breakdown.overflow_flagged}};
  j["cooc_gold"] = matrix_to_json(report.cooc_gold);
  j["cooc_pred"] = matrix_to_json(report.cooc_pred);
  ordered_json under = ordered_json::array();
  for (const auto& [pair, counts] : report.underpred) {
    ordered_json e;
    e["gold_pair"] = {pair.lo, pair.hi};
    e["predicted_counts"] = counts;
    under.push_back(std::move(e));
  }
  j["underprediction"] = std::move(under);
  ordered_json over = ordered_json::array();
  for (const auto& [gold, pairs] : report.overpred) {
    ordered_json e;
    e["gold_label"] = gold;
    ordered_json ps = ordered_json::array();
    for (const auto& [pair, n] : pairs) ps.push_back({{"pair", {pair.lo, pair.hi}}, {"n", n}});
    e["predicted_pairs"] = std::move(ps);
    over.push_back(std::move(e));
  }
  j["overprediction"] = std::move(over);
  return j.dump(2) + "\n";
}

MetricsReport parse_report(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  MetricsReport report;
  report.fold_id = j.at("fold_id").get<int>();
  report.manifest_digest = j.at("manifest_digest").get<std::string>();
  report.counts.tp = j.at("tp").get<std::array<long, kNumLabels>>();
  report.counts.fp = j.at("fp").get<std::array<long, kNumLabels>>();
  report.counts.fn = j.at("fn").get<std::array<long, kNumLabels>>();
  report.multi = prf_from_json(j.at("multi"));
  if (j.contains("single")) report.single = prf_from_json(j.at("single"));
  report.hamming_loss = j.at("hamming_loss").get<double>();
  report.table.cells = j.at("count_table").get<std::array<std::array<long, 2>, 4>>();
  const auto& b = j.at("breakdown");
  report.breakdown.both_correct = b.at("both_correct").get<long>();
  report.breakdown.one_correct = b.at("one_correct").get<long>();
  report.breakdown.both_incorrect = b.at("both_incorrect").get<long>();
  report.breakdown.no_prediction = b.at("no_prediction").get<long>();
  report.breakdown.overflow_flagged = b.at("overflow_flagged").get<long>();
  report.cooc_gold = matrix_from_json(j.at("cooc_gold"));
  report.cooc_pred = matrix_from_json(j.at("cooc_pred"));
  for (const auto& e : j.at("underprediction")) {
    const auto pair = e.at("gold_pair").get<std::vector<int>>();
    report.underpred[LabelPair{pair[0], pair[1]}] =
        e.at("predicted_counts").get<std::array<long, kNumLabels>>();
  }
  for (const auto& e : j.at("overprediction")) {
    const int gold = e.at("gold_label").get<int>();
    for (const auto& pe : e.at("predicted_pairs")) {
      const auto pair = pe.at("pair").get<std::vector<int>>();
      report.overpred[gold][LabelPair{pair[0], pair[1]}] = pe.at("n").get<long>();
    }
  }
  return report;
}

static MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd ms;
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  ms.mean = sum / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - ms.mean) * (x - ms.mean);
  ms.std_pop = std::sqrt(ss / n);
  ms.std_sample = xs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return ms;
}

AggregateReport aggregate(const std::vector<MetricsReport>& folds) {
  if (folds.size() < 2)
    throw std::runtime_error("aggregate: need at least 2 fold reports for a standard deviation");
  AggregateReport agg;
  agg.num_folds = static_cast<int>(folds.size());
  agg.manifest_digest = folds.front().manifest_digest;

  auto collect = [&](auto&& get) {
    std::vector<double> xs;
    xs.reserve(folds.size());
    for (const auto& f : folds) xs.push_back(get(f));
    return mean_std(xs);
  };

  for (int i = 0; i < kNumLabels; ++i) {
    agg.precision[i] = collect([i](const MetricsReport& f) { return f.multi.precision(i); });
    agg.recall[i] = collect([i](const MetricsReport& f) { return f.multi.recall(i); });
    agg.f1[i] = collect([i](const MetricsReport& f) { return f.multi.f1(i); });
  }
  agg.macro_precision = collect([](const MetricsReport& f) { return f.multi.macro_precision; });
  agg.macro_recall = collect([](const MetricsReport& f) { return f.multi.macro_recall; });
  agg.macro_f1 = collect([](const MetricsReport& f) { return f.multi.macro_f1; });
  agg.hamming_loss = collect([](const MetricsReport& f) { return f.hamming_loss; });

  const bool all_single = std::all_of(folds.begin(), folds.end(),
                                      [](const MetricsReport& f) { return f.single.has_value(); });
  if (all_single) {
    std::array<MeanStd, kNumLabels> sf1;
    for (int i = 0; i < kNumLabels; ++i)
      sf1[i] = collect([i](const MetricsReport& f) { return f.single->f1(i); });
    agg.single_f1 = sf1;
    agg.single_macro_f1 = collect([](const MetricsReport& f) { return f.single->macro_f1; });
  }

  for (const MetricsReport& f : folds) {
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 2; ++c) agg.table_sum.cells[r][c] += f.table.cells[r][c];
    agg.breakdown_sum.both_correct += f.breakdown.both_correct;
    agg.breakdown_sum.one_correct += f.breakdown.one_correct;
    agg.breakdown_sum.both_incorrect += f.breakdown.both_incorrect;
    agg.breakdown_sum.no_prediction += f.breakdown.no_prediction;
    agg.breakdown_sum.overflow_flagged += f.breakdown.overflow_flagged;
    agg.cooc_gold_sum += f.cooc_gold;
    agg.cooc_pred_sum += f.cooc_pred;
  }
  return agg;
}

namespace {

std::string pct(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.2f", 100.0 * fraction);
  return buf;
}

std::string pct_pm(const MeanStd& ms) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%6.2f +- %5.2f", 100.0 * ms.mean, 100.0 * ms.std_pop);
  return buf;
}

constexpr int kNameWidth = 16;

std::string padded(std::string_view name) {
  std::string s(name);
  if (s.size() < kNameWidth) s.append(kNameWidth - s.size(), ' ');
  return s;
}

}  // namespace

std::string report_text(const MetricsReport& report) {
  std::ostringstream out;
  out << "# fold " << report.fold_id << "  manifest " << report.manifest_digest << "\n";
  out << padded("Label") << "       P       R      F1\n";
  for (int i = 0; i < kNumLabels; ++i) {
    out << padded(kLabelNames[i]) << "  " << pct(report.multi.precision(i)) << "  "
        << pct(report.multi.recall(i)) << "  " << pct(report.multi.f1(i)) << "\n";
  }
  out << padded("Total") << "  " << pct(report.multi.macro_precision) << "  "
      << pct(report.multi.macro_recall) << "  " << pct(report.multi.macro_f1) << "\n";
  out << "Hamming loss: " << pct(report.hamming_loss) << "\n";
  if (report.single)
    out << "Single-criterion Total F1: " << pct(report.single->macro_f1) << "\n";
  out << "Count table (rows pred 2/1/0/>2, cols gold 2/1):\n";
  for (const auto& row : report.table.cells)
    out << "  " << row[0] << "\t" << row[1] << "\n";
  const Breakdown& b = report.breakdown;
  out << "Multi-label breakdown: both=" << b.both_correct << " one=" << b.one_correct
      << " none=" << b.both_incorrect << " empty=" << b.no_prediction << "\n";
  return out.str();
}

std::string aggregate_text(const AggregateReport& report) {
  std::ostringstream out;
  out << "# aggregate over " << report.num_folds << " folds  manifest "
      << report.manifest_digest << "\n";
  out << padded("Label") << "  " << "P mean +- std      R mean +- std      F1 mean +- std\n";
  for (int i = 0; i < kNumLabels; ++i) {
    out << padded(kLabelNames[i]) << "  " << pct_pm(report.precision[i]) << "  "
        << pct_pm(report.recall[i]) << "  " << pct_pm(report.f1[i]) << "\n";
  }
  out << padded("Total") << "  " << pct_pm(report.macro_precision) << "  "
      << pct_pm(report.macro_recall) << "  " << pct_pm(report.macro_f1) << "\n";
  out << "Hamming loss: " << pct_pm(report.hamming_loss) << "\n";
  if (report.single_macro_f1) {
    out << "\nSingle-label criterion F1:\n";
    for (int i = 0; i < kNumLabels; ++i)
      out << padded(kLabelNames[i]) << "  " << pct_pm((*report.single_f1)[i]) << "\n";
    out << padded("Total") << "  " << pct_pm(*report.single_macro_f1) << "\n";
  }
  out << "\nCount table sum (rows pred 2/1/0/>2, cols gold 2/1):\n";
  for (const auto& row : report.table_sum.cells)
    out << "  " << row[0] << "\t" << row[1] << "\n";
  const Breakdown& b = report.breakdown_sum;
  const double total = static_cast<double>(b.total());
  auto share = [&](long n) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.0f%%", total == 0 ? 0.0 : 100.0 * n / total);
    return std::string(buf);
  };
  out << "Multi-label breakdown sum: both=" << b.both_correct << " (" << share(b.both_correct)
      << ") one=" << b.one_correct << " (" << share(b.one_correct) << ") none="
      << b.both_incorrect << " (" << share(b.both_incorrect) << ") empty=" << b.no_prediction
      << " (" << share(b.no_prediction) << ")\n";
  return out.str();
}

std::string cooccurrence_text(const CooccurrenceMatrix& m, const std::string& title) {
  std::ostringstream out;
  out << "# " << title << "\n";
  out << padded("");
  for (int j = 0; j < kNumLabels; ++j) out << "\t" << kLabelNames[j];
  out << "\n";
  for (int i = 0; i < kNumLabels; ++i) {
    out << padded(kLabelNames[i]);
    for (int j = 0; j < kNumLabels; ++j) out << "\t" << m(i, j);
    out << "\n";
  }
  return out.str();
}

std::string underprediction_text(const UnderpredictionMap& m) {
  std::ostringstream out;
  out << "# under-prediction: gold pair -> single predicted label counts\n";
  out << padded("gold pair");
  for (int j = 0; j < kNumLabels; ++j) out << "\t" << kLabelNames[j];
  out << "\n";
  for (const auto& [pair, counts] : m) {
    std::string key = std::string(kLabelNames[pair.lo]) + "/" + std::string(kLabelNames[pair.hi]);
    out << padded(key);
    for (long c : counts) out << "\t" << c;
    out << "\n";
  }
  return out.str();
}

std::string overprediction_text(const OverpredictionMap& m) {
  std::ostringstream out;
  out << "# over-prediction: gold single label -> predicted pair counts\n";
  for (const auto& [gold, pairs] : m) {
    out << padded(kLabelNames[gold]);
    bool first = true;
    for (const auto& [pair, n] : pairs) {
      if (!first) out << ", ";
      first = false;
      out << kLabelNames[pair.lo] << "/" << kLabelNames[pair.hi] << "=" << n;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace idrr
