#include "idrr/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "idrr/io.hpp"
#include "idrr/rng.hpp"
#include "json.hpp"

namespace idrr {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(LossVariant v) { return v == LossVariant::CE ? "ce" : "focal"; }

std::optional<LossVariant> parse_loss_variant(std::string_view s) {
  if (s == "ce") return LossVariant::CE;
  if (s == "focal") return LossVariant::Focal;
  return std::nullopt;
}

static std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
  return fnv1a64(tag, 0xcbf29ce484222325ull ^ seed);
}

void TrainConfig::validate() const {
  if (learning_rate <= 0) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be positive");
  if (patience < 1) throw std::invalid_argument("patience must be positive");
  if (loss_variant == LossVariant::Focal && (method == Method::M3 || method == Method::Baseline))
    throw std::invalid_argument("focal loss applies only to the probability-output methods m1/m2");
  EncoderConfig ec = encoder;
  ec.max_seq_len = max_seq_len;
  ec.validate();
}

static ordered_json config_json(const TrainConfig& cfg) {
  ordered_json j;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["max_epochs"] = cfg.max_epochs;
  j["patience"] = cfg.patience;
  j["max_seq_len"] = cfg.max_seq_len;
  j["seed"] = cfg.seed;
  j["method"] = std::string(to_string(cfg.method));
  j["loss_variant"] = std::string(to_string(cfg.loss_variant));
  j["encoder_kind"] = cfg.encoder.kind == EncoderKind::Toy ? "toy" : "external-adapter";
  j["hidden_dim"] = cfg.encoder.hidden_dim;
  j["vocab_hash_buckets"] = cfg.encoder.vocab_hash_buckets;
  j["encoder_trainable"] = cfg.encoder.trainable;
  j["focal_gamma_pos"] = cfg.focal.gamma_pos;
  j["focal_gamma_neg"] = cfg.focal.gamma_neg;
  return j;
}

std::string config_to_json(const TrainConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

TrainConfig config_from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  TrainConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate")
      cfg.learning_rate = value.get<double>();
    else if (key == "batch_size")
      cfg.batch_size = value.get<int>();
    else if (key == "max_epochs")
      cfg.max_epochs = value.get<int>();
    else if (key == "patience")
      cfg.patience = value.get<int>();
    else if (key == "max_seq_len")
      cfg.max_seq_len = value.get<int>();
    else if (key == "seed")
      cfg.seed = value.get<std::uint64_t>();
    else if (key == "method") {
      auto m = parse_method(value.get<std::string>());
      if (!m) throw std::runtime_error("config: unknown method");
      cfg.method = *m;
    } else if (key == "loss_variant") {
      auto v = parse_loss_variant(value.get<std::string>());
      if (!v) throw std::runtime_error("config: unknown loss_variant");
      cfg.loss_variant = *v;
    } else if (key == "encoder_kind") {
      const auto kind = value.get<std::string>();
      if (kind == "toy")
        cfg.encoder.kind = EncoderKind::Toy;
      else if (kind == "external-adapter")
        cfg.encoder.kind = EncoderKind::ExternalAdapter;
      else
        throw std::runtime_error("config: unknown encoder_kind");
    } else if (key == "hidden_dim")
      cfg.encoder.hidden_dim = value.get<int>();
    else if (key == "vocab_hash_buckets")
      cfg.encoder.vocab_hash_buckets = value.get<int>();
    else if (key == "encoder_trainable")
      cfg.encoder.trainable = value.get<bool>();
    else if (key == "focal_gamma_pos")
      cfg.focal.gamma_pos = value.get<double>();
    else if (key == "focal_gamma_neg")
      cfg.focal.gamma_neg = value.get<double>();
    else
      throw std::runtime_error("config: unknown key '" + key + "'");
  }
  return cfg;
}

std::string config_digest(const TrainConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_json(cfg))));
  return buf;
}

TrainModel make_model(const TrainConfig& cfg, std::shared_ptr<const EncoderAdapter> external) {
  cfg.validate();
  TrainModel model;
  model.method = cfg.method;
  EncoderConfig ec = cfg.encoder;
  ec.seed = mix_seed(cfg.seed, "encoder");
  ec.max_seq_len = cfg.max_seq_len;
  if (ec.kind == EncoderKind::Toy) {
    model.toy = std::make_shared<ToyEncoder>(ec);
    model.encoder = model.toy;
    model.encoder_trainable = ec.trainable;
  } else {
    model.encoder = make_encoder(ec, std::move(external));
    model.encoder_trainable = false;
  }
  const int H = ec.hidden_dim;
  switch (cfg.method) {
    case Method::M1: model.m1 = Method1Head::zeros(H); break;
    case Method::M2: model.m2 = Method2Head::zeros(H); break;
    case Method::Baseline: model.baseline = BaselineHead::zeros(H); break;
    case Method::M3: model.m3 = Method3Decoder::random_init(H, mix_seed(cfg.seed, "m3")); break;
  }
  return model;
}

GradientStore GradientStore::zeros_like(TrainModel& model) {
  GradientStore g;
  g.method = model.method;
  g.encoder_trainable = model.encoder_trainable;
  if (g.encoder_trainable)
    g.encoder_table = Matrix::Zero(model.toy->table().rows(), model.toy->table().cols());
  const int H = model.encoder->hidden_dim();
  switch (model.method) {
    case Method::M1: g.m1 = Method1Head::zeros(H); break;
    case Method::M2: g.m2 = Method2Head::zeros(H); break;
    case Method::Baseline: g.baseline = BaselineHead::zeros(H); break;
    case Method::M3: g.m3 = Method3Decoder::zeros(H); break;
  }
  return g;
}

void GradientStore::set_zero() {
  visit_params([](auto& m) { m.setZero(); });
}

namespace {

struct Blocks {
  std::vector<double*> ptr;
  std::vector<long> len;
  long total = 0;
};

template <typename Visitable>
Blocks collect_blocks(Visitable& v) {
  Blocks b;
  v.visit_params([&](auto& m) {
    b.ptr.push_back(m.data());
    b.len.push_back(static_cast<long>(m.size()));
    b.total += static_cast<long>(m.size());
  });
  return b;
}

Vector flatten(const Blocks& b) {
  Vector out(b.total);
  long off = 0;
  for (std::size_t i = 0; i < b.ptr.size(); ++i) {
    std::copy(b.ptr[i], b.ptr[i] + b.len[i], out.data() + off);
    off += b.len[i];
  }
  return out;
}

void unflatten(const Vector& flat, Blocks& b) {
  if (flat.size() != b.total) throw std::runtime_error("snapshot size does not match model");
  long off = 0;
  for (std::size_t i = 0; i < b.ptr.size(); ++i) {
    std::copy(flat.data() + off, flat.data() + off + b.len[i], b.ptr[i]);
    off += b.len[i];
  }
}

double grad_norm(const Blocks& b) {
  double ss = 0.0;
  for (std::size_t i = 0; i < b.ptr.size(); ++i)
    for (long k = 0; k < b.len[i]; ++k) ss += b.ptr[i][k] * b.ptr[i][k];
  return std::sqrt(ss);
}

void scale_blocks(Blocks& b, double s) {
  for (std::size_t i = 0; i < b.ptr.size(); ++i)
    for (long k = 0; k < b.len[i]; ++k) b.ptr[i][k] *= s;
}

class AdamOptimizer {
 public:
  AdamOptimizer(long total, double lr)
      : lr_(lr), m_(Vector::Zero(total)), v_(Vector::Zero(total)) {}

  void step(Blocks& params, const Blocks& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t_));
    long off = 0;
    for (std::size_t i = 0; i < params.ptr.size(); ++i) {
      for (long k = 0; k < params.len[i]; ++k) {
        const double g = grads.ptr[i][k];
        double& m = m_(off);
        double& v = v_(off);
        m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
        v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g * g;
        params.ptr[i][k] -= lr_ * (m / bc1) / (std::sqrt(v / bc2) + kAdamEps);
        ++off;
      }
    }
  }

  double lr_;
  Vector m_, v_;
  long t_ = 0;
};

}  // namespace

double instance_loss_and_grads(TrainModel& model, const Instance& inst, const TrainConfig& cfg,
                               GradientStore& grads) {
  const EncoderOutput enc = model.encode(inst);
  const int H = model.encoder->hidden_dim();
  Vector d_pooled = Vector::Zero(H);
  Matrix d_tokens;
  double loss = 0.0;

  switch (model.method) {
    case Method::M1: {
      const Vector y = to_label_vector(inst.labels);
      const Vector z = m1_logits(enc.pooled, model.m1);
      Vector dz;
      if (cfg.loss_variant == LossVariant::CE) {
        loss = bce_sigmoid(logistic(z), y).value;
        dz = bce_sigmoid_grad_logits(z, y);
      } else {
        loss = focal(logistic(z), y, cfg.focal).value;
        dz = focal_grad_logits_sigmoid(z, y, cfg.focal);
      }
      grads.m1.weight += enc.pooled * dz.transpose();
      grads.m1.bias += dz;
      d_pooled = model.m1.weight * dz;
      break;
    }
    case Method::M2: {
      const Vector y = to_label_vector(inst.labels);
      const Matrix logits = m2_logits(enc.pooled, model.m2);
      Matrix dl(kNumLabels, 2);
      if (cfg.loss_variant == LossVariant::CE) {
        loss = per_label_softmax_ce(logits, y).value;
        dl = per_label_softmax_ce_grad_logits(logits, y);
      } else {
        Vector p(kNumLabels);
        for (int i = 0; i < kNumLabels; ++i) p(i) = softmax(logits.row(i).transpose())(0);
        loss = focal(p, y, cfg.focal).value;
        const Vector dp = focal_grad_probs(p, y, cfg.focal);
        for (int i = 0; i < kNumLabels; ++i) {
          const double s = dp(i) * p(i) * (1.0 - p(i));
          dl(i, 0) = s;
          dl(i, 1) = -s;
        }
      }
      Vector dflat(2 * kNumLabels);
      for (int i = 0; i < kNumLabels; ++i) {
        dflat(2 * i) = dl(i, 0);
        dflat(2 * i + 1) = dl(i, 1);
      }
      grads.m2.weight += enc.pooled * dflat.transpose();
      grads.m2.bias += dflat;
      d_pooled = model.m2.weight * dflat;
      break;
    }
    case Method::Baseline: {
      const auto members = inst.labels.members();
      if (members.size() != 1)
        throw std::runtime_error("baseline training expects single-label (expanded) instances");
      const Vector z = baseline_logits(enc.pooled, model.baseline);
      loss = multiclass_ce(softmax(z), members[0]).value;
      const Vector dz = multiclass_ce_grad_logits(z, members[0]);
      grads.baseline.weight += enc.pooled * dz.transpose();
      grads.baseline.bias += dz;
      d_pooled = model.baseline.weight * dz;
      break;
    }
    case Method::M3: {
      const auto ordered = canonical_sequence(inst.labels, model.train_label_freq);
      d_tokens = Matrix::Zero(enc.tokens.rows(), H);
      loss = m3_loss_and_grads(enc, ordered, model.m3, grads.m3, d_pooled, d_tokens);
      break;
    }
  }
  if (model.encoder_trainable) model.toy->backward(enc, d_pooled, d_tokens, grads.encoder_table);
  return loss;
}

double instance_loss(TrainModel& model, const Instance& inst, const TrainConfig& cfg) {
  const EncoderOutput enc = model.encode(inst);
  switch (model.method) {
    case Method::M1: {
      const Vector y = to_label_vector(inst.labels);
      const Vector p = m1_forward(enc.pooled, model.m1);
      return cfg.loss_variant == LossVariant::CE ? bce_sigmoid(p, y).value
                                                 : focal(p, y, cfg.focal).value;
    }
    case Method::M2: {
      const Vector y = to_label_vector(inst.labels);
      if (cfg.loss_variant == LossVariant::CE)
        return per_label_softmax_ce(m2_logits(enc.pooled, model.m2), y).value;
      return focal(m2_forward(enc.pooled, model.m2), y, cfg.focal).value;
    }
    case Method::Baseline: {
      const auto members = inst.labels.members();
      if (members.size() != 1)
        throw std::runtime_error("baseline training expects single-label (expanded) instances");
      return multiclass_ce(baseline_forward(enc.pooled, model.baseline), members[0]).value;
    }
    case Method::M3: {
      const auto ordered = canonical_sequence(inst.labels, model.train_label_freq);
      return sequence_ce(m3_teacher_forced_logprobs(enc, ordered, model.m3)).value;
    }
  }
  throw std::logic_error("unreachable");
}

PredictionRecord predict_one(const TrainModel& model, const Instance& inst) {
  PredictionRecord rec;
  rec.instance_id = inst.id;
  rec.method = model.method;
  const EncoderOutput enc = model.encode(inst);
  switch (model.method) {
    case Method::M1:
      rec.probs = m1_forward(enc.pooled, model.m1);
      rec.predicted = threshold_predict(rec.probs, kThreshold);
      break;
    case Method::M2:
      rec.probs = m2_forward(enc.pooled, model.m2);
      rec.predicted = threshold_predict(rec.probs, kThreshold);
      break;
    case Method::Baseline:
      rec.probs = baseline_forward(enc.pooled, model.baseline);
      rec.predicted = LabelSet::of({argmax_predict(rec.probs)});
      break;
    case Method::M3: {
      const BeamResult beam = m3_beam_search(enc, model.m3, kBeamWidth, kBeamMaxLen);
      for (SenseLabel l : beam.labels) rec.predicted.insert(l);
      break;
    }
  }
  return rec;
}

std::vector<PredictionRecord> predict_fold(const TrainModel& model,
                                           const std::vector<Instance>& test_instances) {
  std::vector<PredictionRecord> out;
  out.reserve(test_instances.size());
  for (const Instance& inst : test_instances) out.push_back(predict_one(model, inst));
  return out;
}

static double dev_macro_f1(const TrainModel& model, const std::vector<const Instance*>& dev,
                           const GoldIndex& golds) {
  std::vector<PredictionRecord> records;
  records.reserve(dev.size());
  for (const Instance* inst : dev) records.push_back(predict_one(model, *inst));
  if (model.method == Method::Baseline) return single_criterion_eval(records, golds).macro_f1;
  return macro_prf(confusion(records, golds)).macro_f1;
}

TrainResult train_fold(const std::vector<Instance>& corpus, const FoldSpec& fold,
                       const TrainConfig& cfg, std::shared_ptr<const EncoderAdapter> external) {
  cfg.validate();
  if (fold.train.empty()) throw std::runtime_error("train_fold: empty train split");

  std::map<int, const Instance*> by_id;
  for (const Instance& inst : corpus) by_id[inst.id] = &inst;
  auto lookup = [&](int id) -> const Instance& {
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw std::runtime_error("fold references unknown instance id " + std::to_string(id));
    return *it->second;
  };

  std::vector<Instance> train_insts;
  train_insts.reserve(fold.train.size());
  for (int id : fold.train) train_insts.push_back(lookup(id));
  std::vector<const Instance*> dev_insts;
  dev_insts.reserve(fold.dev.size());
  for (int id : fold.dev) dev_insts.push_back(&lookup(id));

  std::array<long, kNumLabels> freq{};
  for (const Instance& inst : train_insts)
    for (SenseLabel l : inst.labels.members()) freq[static_cast<int>(l)]++;

  if (cfg.method == Method::Baseline) train_insts = duplicate_expansion(train_insts);

  TrainModel model = make_model(cfg, std::move(external));
  model.train_label_freq = freq;

  Blocks params = collect_blocks(model);
  GradientStore grads = GradientStore::zeros_like(model);
  Blocks grad_blocks = collect_blocks(grads);
  AdamOptimizer adam(params.total, cfg.learning_rate);
  GoldIndex golds(corpus);

  TrainResult result;
  Snapshot best;
  best.dev_metric = -1.0;
  int stale_epochs = 0;
  const std::size_t n = train_insts.size();

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(cfg.seed, "epoch:" + std::to_string(epoch)));
    rng.shuffle(order);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      grads.set_zero();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k)
        batch_loss += instance_loss_and_grads(model, train_insts[order[k]], cfg, grads);
      const double scale = 1.0 / static_cast<double>(end - start);
      batch_loss *= scale;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
      scale_blocks(grad_blocks, scale);
      const double norm = grad_norm(grad_blocks);
      if (norm > kClipNorm) scale_blocks(grad_blocks, kClipNorm / norm);
      adam.step(params, grad_blocks);
      epoch_loss += batch_loss * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(n);

    const double dev = dev_macro_f1(model, dev_insts, golds);
    result.history.push_back({epoch, epoch_loss, dev});

    if (dev > best.dev_metric) {
      best.params = flatten(params);
      best.adam_m = adam.m_;
      best.adam_v = adam.v_;
      best.adam_t = adam.t_;
      best.epoch = epoch;
      best.dev_metric = dev;
      stale_epochs = 0;
    } else if (++stale_epochs >= cfg.patience) {
      break;
    }
  }

  unflatten(best.params, params);
  adam.m_ = best.adam_m;
  adam.v_ = best.adam_v;
  adam.t_ = best.adam_t;
  result.best = best;
  result.model = std::move(model);
  return result;
}

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::istream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof v);
}

void write_vec(std::ostream& out, const Vector& v) {
  const std::uint64_t n = static_cast<std::uint64_t>(v.size());
  write_pod(out, n);
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

Vector read_vec(std::istream& in) {
  std::uint64_t n = 0;
  read_pod(in, n);
  Vector v(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}

constexpr std::uint64_t kSnapshotMagic = 0x49445252534e5031ull;  // "IDRRSNP1"

}  // namespace

void save_snapshot(const Snapshot& snap, const std::string& path) {
  std::ostringstream out(std::ios::binary);
  write_pod(out, kSnapshotMagic);
  write_pod(out, snap.epoch);
  write_pod(out, snap.dev_metric);
  write_pod(out, snap.adam_t);
  write_vec(out, snap.params);
  write_vec(out, snap.adam_m);
  write_vec(out, snap.adam_v);
  write_file_atomic(path, out.str());
}

Snapshot load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open snapshot: " + path);
  std::uint64_t magic = 0;
  read_pod(in, magic);
  if (magic != kSnapshotMagic) throw std::runtime_error("bad snapshot file: " + path);
  Snapshot snap;
  read_pod(in, snap.epoch);
  read_pod(in, snap.dev_metric);
  read_pod(in, snap.adam_t);
  snap.params = read_vec(in);
  snap.adam_m = read_vec(in);
  snap.adam_v = read_vec(in);
  if (!in) throw std::runtime_error("truncated snapshot file: " + path);
  return snap;
}

RunManifest RunManifest::build(const TrainConfig& cfg, const std::string& corpus_digest,
                               const SplitPlan& plan) {
  RunManifest m;
  m.config = cfg;
  m.corpus_digest = corpus_digest;
  {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(serialize_plan(plan))));
    m.plan_digest = buf;
  }
  m.plan_mode = std::string(to_string(plan.mode));
  m.plan_seed = plan.seed;
  for (const auto& name : kLabelNames) m.label_order.emplace_back(name);
  m.decisions = {
      {"adam", "beta1=0.9 beta2=0.999 eps=1e-8"},
      {"argmax_tie_break", "lowest canonical index"},
      {"batch_reduction", "mean"},
      {"beam", "width 4, max length 4"},
      {"early_stopping", "dev macro-F1, strictly-greater improvement resets patience"},
      {"encoder_finetuning", "full (adapter); embedding table (toy, when trainable)"},
      {"grad_clip", "global norm 1.0"},
      {"input_template", "begin, arg1, separator, arg2, end"},
      {"label_reduction", "mean over the 14 labels"},
      {"m3_output_layer", "hidden state concatenated with attention context"},
      {"m3_target_order", "train-fold frequency descending, ties by canonical index"},
      {"pooling", "masked mean of token rows (toy); begin-marker position (adapter)"},
      {"std", "population std; sample std as auxiliary"},
      {"threshold", "predict label iff probability > 0.5 (strict)"},
      {"truncation", "trim tail of the longer argument, ties from arg2"},
  };
  return m;
}

std::string serialize_manifest(const RunManifest& m) {
  ordered_json j;
  j["config"] = config_json(m.config);
  j["config_digest"] = config_digest(m.config);
  j["corpus_digest"] = m.corpus_digest;
  j["plan"] = {{"digest", m.plan_digest}, {"mode", m.plan_mode}, {"seed", m.plan_seed}};
  j["label_order"] = m.label_order;
  j["decisions"] = m.decisions;
  return j.dump(2) + "\n";
}

RunManifest parse_manifest(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  RunManifest m;
  m.config = config_from_json(j.at("config").dump());
  m.corpus_digest = j.at("corpus_digest").get<std::string>();
  m.plan_digest = j.at("plan").at("digest").get<std::string>();
  m.plan_mode = j.at("plan").at("mode").get<std::string>();
  m.plan_seed = j.at("plan").at("seed").get<std::uint64_t>();
  m.label_order = j.at("label_order").get<std::vector<std::string>>();
  m.decisions = j.at("decisions").get<std::map<std::string, std::string>>();
  return m;
}

std::string manifest_digest(const RunManifest& m) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(serialize_manifest(m))));
  return buf;
}

std::string fold_tag(int fold_id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "fold%02d", fold_id);
  return buf;
}

std::string predictions_path(const std::string& run_dir, int fold_id) {
  return run_dir + "/predictions_" + fold_tag(fold_id) + ".jsonl";
}
std::string history_path(const std::string& run_dir, int fold_id) {
  return run_dir + "/history_" + fold_tag(fold_id) + ".tsv";
}
std::string snapshot_path(const std::string& run_dir, int fold_id) {
  return run_dir + "/snapshot_" + fold_tag(fold_id) + ".bin";
}
std::string metrics_path(const std::string& run_dir, int fold_id) {
  return run_dir + "/metrics_" + fold_tag(fold_id) + ".json";
}
std::string manifest_path(const std::string& run_dir) { return run_dir + "/manifest.json"; }

void save_history(const std::vector<EpochRecord>& history, const std::string& path) {
  std::string content = "epoch\ttrain_loss\tdev_macro_f1\n";
  char buf[96];
  for (const EpochRecord& r : history) {
    std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\n", r.epoch, r.train_loss, r.dev_metric);
    content += buf;
  }
  write_file_atomic(path, content);
}

AggregateReport run_experiment(const std::vector<Instance>& corpus, const SplitPlan& plan,
                               const TrainConfig& cfg, const std::string& run_dir, int jobs,
                               std::shared_ptr<const EncoderAdapter> external) {
  std::filesystem::create_directories(run_dir);
  const std::string digest = corpus_digest(corpus);
  if (plan.corpus_digest != digest)
    throw std::runtime_error("split plan was built for a different corpus (digest " +
                             plan.corpus_digest + " vs " + digest + ")");

  const RunManifest manifest = RunManifest::build(cfg, digest, plan);
  write_file_atomic(manifest_path(run_dir), serialize_manifest(manifest));
  const std::string stamp = manifest_digest(manifest);

  std::map<int, const Instance*> by_id;
  for (const Instance& inst : corpus) by_id[inst.id] = &inst;

  const int nf = static_cast<int>(plan.folds.size());
  std::vector<MetricsReport> reports(static_cast<std::size_t>(nf));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(nf));

  auto worker = [&](int f) {
    try {
      TrainResult result = train_fold(corpus, plan.folds[static_cast<std::size_t>(f)], cfg, external);
      save_history(result.history, history_path(run_dir, f));
      save_snapshot(result.best, snapshot_path(run_dir, f));
      std::vector<Instance> test;
      for (int id : plan.folds[static_cast<std::size_t>(f)].test) test.push_back(*by_id.at(id));
      const auto preds = predict_fold(result.model, test);
      save_predictions(preds, predictions_path(run_dir, f));
      reports[static_cast<std::size_t>(f)] = evaluate_fold(preds, corpus, f, stamp);
      write_file_atomic(metrics_path(run_dir, f),
                        serialize_report(reports[static_cast<std::size_t>(f)]));
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  };

  if (jobs <= 1) {
    for (int f = 0; f < nf; ++f) worker(f);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(jobs, nf); ++t) {
      pool.emplace_back([&] {
        for (int f = next.fetch_add(1); f < nf; f = next.fetch_add(1)) worker(f);
      });
    }
    for (auto& th : pool) th.join();
  }

  for (int f = 0; f < nf; ++f) {
    if (!errors[static_cast<std::size_t>(f)]) continue;
    try {
      std::rethrow_exception(errors[static_cast<std::size_t>(f)]);
    } catch (const std::exception& e) {
      throw std::runtime_error("fold " + std::to_string(f) + " failed: " + e.what());
    }
  }

  const AggregateReport agg = aggregate(reports);
  write_file_atomic(run_dir + "/report.txt", aggregate_text(agg));
  return agg;
}

}  // namespace idrr
