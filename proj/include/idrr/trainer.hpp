#pragma once

#include <array>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "idrr/corpus.hpp"
#include "idrr/decoder.hpp"
#include "idrr/encoder.hpp"
#include "idrr/folds.hpp"
#include "idrr/heads.hpp"
#include "idrr/losses.hpp"
#include "idrr/metrics.hpp"

namespace idrr {

enum class LossVariant { CE, Focal };

std::string_view to_string(LossVariant v);
std::optional<LossVariant> parse_loss_variant(std::string_view s);

// Adam hyperparameters beyond the learning rate are fixed conventional
// defaults, recorded in the run manifest.
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;
inline constexpr double kClipNorm = 1.0;
inline constexpr double kThreshold = 0.5;
inline constexpr int kBeamWidth = 4;
inline constexpr int kBeamMaxLen = 4;

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 64;
  int max_epochs = 20;
  int patience = 10;
  int max_seq_len = kMaxSeqLen;
  std::uint64_t seed = 0;
  Method method = Method::M2;
  LossVariant loss_variant = LossVariant::CE;
  EncoderConfig encoder{};
  FocalConfig focal{};

  void validate() const;
};

// Flat key-value config document; unknown keys are rejected.
TrainConfig config_from_json(const std::string& text);
std::string config_to_json(const TrainConfig& cfg);
std::string config_digest(const TrainConfig& cfg);

// The trainable assembly for one method. Only the active head is sized.
struct TrainModel {
  Method method = Method::M2;
  std::shared_ptr<ToyEncoder> toy;                 // owned when kind == Toy
  std::shared_ptr<const EncoderAdapter> encoder;   // toy or external adapter
  bool encoder_trainable = false;
  Method1Head m1;
  Method2Head m2;
  BaselineHead baseline;
  Method3Decoder m3;
  std::array<long, kNumLabels> train_label_freq{};  // fixes Method 3 target order

  EncoderOutput encode(const Instance& inst) const {
    return encoder->encode(inst.arg1, inst.arg2);
  }

  template <typename F>
  void visit_params(F&& f) {
    if (toy && encoder_trainable) f(toy->table());
    switch (method) {
      case Method::M1: m1.visit(f); break;
      case Method::M2: m2.visit(f); break;
      case Method::M3: m3.visit(f); break;
      case Method::Baseline: baseline.visit(f); break;
    }
  }
};

TrainModel make_model(const TrainConfig& cfg,
                      std::shared_ptr<const EncoderAdapter> external = nullptr);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_metric = 0.0;  // dev macro-F1
};

// Bit-exact restorable training state: parameters plus optimizer moments.
struct Snapshot {
  Vector params;
  Vector adam_m, adam_v;
  long adam_t = 0;
  int epoch = 0;
  double dev_metric = 0.0;
};

void save_snapshot(const Snapshot& snap, const std::string& path);
Snapshot load_snapshot(const std::string& path);

struct TrainResult {
  TrainModel model;  // restored to the best-dev snapshot
  std::vector<EpochRecord> history;
  Snapshot best;
};

// Adam at the configured learning rate over shuffled batches, early stopping
// on dev macro-F1 with the configured patience; returns the best snapshot.
// The baseline method trains on duplicate_expansion of the train split.
TrainResult train_fold(const std::vector<Instance>& corpus, const FoldSpec& fold,
                       const TrainConfig& cfg,
                       std::shared_ptr<const EncoderAdapter> external = nullptr);

PredictionRecord predict_one(const TrainModel& model, const Instance& inst);
std::vector<PredictionRecord> predict_fold(const TrainModel& model,
                                           const std::vector<Instance>& test_instances);

// Single forward/backward pass for one instance; accumulates into `grads`
// (same visit order as TrainModel). Exposed for gradient checking.
struct GradientStore {
  Matrix encoder_table;  // sized only for a trainable toy encoder
  Method1Head m1;
  Method2Head m2;
  BaselineHead baseline;
  Method3Decoder m3;
  Method method = Method::M2;
  bool encoder_trainable = false;

  static GradientStore zeros_like(TrainModel& model);
  void set_zero();

  template <typename F>
  void visit_params(F&& f) {
    if (encoder_trainable) f(encoder_table);
    switch (method) {
      case Method::M1: m1.visit(f); break;
      case Method::M2: m2.visit(f); break;
      case Method::M3: m3.visit(f); break;
      case Method::Baseline: baseline.visit(f); break;
    }
  }
};

double instance_loss_and_grads(TrainModel& model, const Instance& inst, const TrainConfig& cfg,
                               GradientStore& grads);
double instance_loss(TrainModel& model, const Instance& inst, const TrainConfig& cfg);

struct RunManifest {
  TrainConfig config;
  std::string corpus_digest;
  std::string plan_digest;
  std::string plan_mode;
  std::uint64_t plan_seed = 0;
  std::vector<std::string> label_order;
  std::map<std::string, std::string> decisions;

  static RunManifest build(const TrainConfig& cfg, const std::string& corpus_digest,
                           const SplitPlan& plan);
};

std::string serialize_manifest(const RunManifest& m);
RunManifest parse_manifest(const std::string& text);
// Digest over the serialized manifest; stamps every downstream report.
std::string manifest_digest(const RunManifest& m);

// File layout inside a run directory.
std::string fold_tag(int fold_id);
std::string predictions_path(const std::string& run_dir, int fold_id);
std::string history_path(const std::string& run_dir, int fold_id);
std::string snapshot_path(const std::string& run_dir, int fold_id);
std::string metrics_path(const std::string& run_dir, int fold_id);
std::string manifest_path(const std::string& run_dir);

void save_history(const std::vector<EpochRecord>& history, const std::string& path);

// Trains every fold of the plan (optionally with `jobs` parallel fold
// workers), writes manifest / histories / snapshots / predictions / metrics
// into run_dir, and returns the aggregate over the per-fold reports.
AggregateReport run_experiment(const std::vector<Instance>& corpus, const SplitPlan& plan,
                               const TrainConfig& cfg, const std::string& run_dir, int jobs = 1,
                               std::shared_ptr<const EncoderAdapter> external = nullptr);

}  // namespace idrr
