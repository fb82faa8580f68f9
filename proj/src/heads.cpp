#include "idrr/heads.hpp"

#include <fstream>
#include <stdexcept>

#include "idrr/io.hpp"
#include "json.hpp"

namespace idrr {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Method m) {
  switch (m) {
    case Method::M1: return "m1";
    case Method::M2: return "m2";
    case Method::M3: return "m3";
    case Method::Baseline: return "baseline";
  }
  return "";
}

std::optional<Method> parse_method(std::string_view s) {
  if (s == "m1") return Method::M1;
  if (s == "m2") return Method::M2;
  if (s == "m3") return Method::M3;
  if (s == "baseline") return Method::Baseline;
  return std::nullopt;
}

Method1Head Method1Head::zeros(int hidden_dim) {
  return {Matrix::Zero(hidden_dim, kNumLabels), Vector::Zero(kNumLabels)};
}

Method2Head Method2Head::zeros(int hidden_dim) {
  return {Matrix::Zero(hidden_dim, 2 * kNumLabels), Vector::Zero(2 * kNumLabels)};
}

BaselineHead BaselineHead::zeros(int hidden_dim) {
  return {Matrix::Zero(hidden_dim, kNumLabels), Vector::Zero(kNumLabels)};
}

static void check_dim(const Vector& pooled, const Matrix& weight) {
  if (pooled.size() != weight.rows())
    throw std::invalid_argument("pooled dimension does not match head weight rows");
}

Vector m1_logits(const Vector& pooled, const Method1Head& head) {
  check_dim(pooled, head.weight);
  return head.weight.transpose() * pooled + head.bias;
}

Vector m1_forward(const Vector& pooled, const Method1Head& head) {
  return logistic(m1_logits(pooled, head));
}

Matrix m2_logits(const Vector& pooled, const Method2Head& head) {
  check_dim(pooled, head.weight);
  const Vector flat = head.weight.transpose() * pooled + head.bias;
  Matrix logits(kNumLabels, 2);
  for (int i = 0; i < kNumLabels; ++i) {
    logits(i, 0) = flat(2 * i);
    logits(i, 1) = flat(2 * i + 1);
  }
  return logits;
}

Vector m2_forward(const Vector& pooled, const Method2Head& head) {
  const Matrix logits = m2_logits(pooled, head);
  Vector probs(kNumLabels);
  for (int i = 0; i < kNumLabels; ++i) {
    const Vector p = softmax(logits.row(i).transpose());
    probs(i) = p(0);
  }
  return probs;
}

Vector baseline_logits(const Vector& pooled, const BaselineHead& head) {
  check_dim(pooled, head.weight);
  return head.weight.transpose() * pooled + head.bias;
}

Vector baseline_forward(const Vector& pooled, const BaselineHead& head) {
  return softmax(baseline_logits(pooled, head));
}

LabelSet threshold_predict(const Vector& probs, double threshold) {
  if (probs.size() != kNumLabels) throw std::invalid_argument("threshold_predict: need 14 probs");
  LabelSet out;
  for (int i = 0; i < kNumLabels; ++i)
    if (probs(i) > threshold) out.insert(static_cast<SenseLabel>(i));
  return out;
}

SenseLabel argmax_predict(const Vector& probs) {
  if (probs.size() != kNumLabels) throw std::invalid_argument("argmax_predict: need 14 probs");
  if (!probs.allFinite()) throw std::invalid_argument("argmax_predict: non-finite probs");
  int best = 0;
  for (int i = 1; i < kNumLabels; ++i)
    if (probs(i) > probs(best)) best = i;
  return static_cast<SenseLabel>(best);
}

Vector attention_forward(const Vector& hidden, const Matrix& tokens, const VectorI& mask,
                         AttentionCache& cache) {
  if (tokens.cols() != hidden.size())
    throw std::invalid_argument("attention: token width does not match hidden size");
  const Vector scores = tokens * hidden;
  cache.weights = masked_softmax(scores, mask);
  return tokens.transpose() * cache.weights;
}

Vector attention(const Vector& hidden, const Matrix& tokens, const VectorI& mask) {
  AttentionCache cache;
  return attention_forward(hidden, tokens, mask, cache);
}

void attention_backward(const Vector& hidden, const Matrix& tokens, const VectorI& mask,
                        const AttentionCache& cache, const Vector& d_context, Vector& d_hidden,
                        Matrix& d_tokens) {
  const Vector& w = cache.weights;
  // context = tokens^T w
  Vector d_w = tokens * d_context;
  // softmax jacobian; masked positions have w=0 so they stay 0.
  const double dot = w.dot(d_w);
  Vector d_scores = w.cwiseProduct(d_w.array().matrix() - Vector::Constant(w.size(), dot));
  (void)mask;
  d_hidden += tokens.transpose() * d_scores;
  d_tokens += d_scores * hidden.transpose() + w * d_context.transpose();
}

std::string serialize_prediction(const PredictionRecord& rec) {
  ordered_json j;
  j["instance_id"] = rec.instance_id;
  j["method"] = std::string(to_string(rec.method));
  if (rec.probs.size() > 0) {
    std::vector<double> probs(rec.probs.data(), rec.probs.data() + rec.probs.size());
    j["probs"] = probs;
  }
  std::vector<std::string> names;
  for (SenseLabel l : rec.predicted.members()) names.emplace_back(to_string(l));
  j["predicted"] = names;
  return j.dump();
}

PredictionRecord parse_prediction(const std::string& line) {
  ordered_json j = ordered_json::parse(line);
  PredictionRecord rec;
  rec.instance_id = j.at("instance_id").get<int>();
  const auto method_str = j.at("method").get<std::string>();
  auto m = parse_method(method_str);
  if (!m) throw std::runtime_error("unknown method '" + method_str + "'");
  rec.method = *m;
  if (j.contains("probs")) {
    const auto probs = j.at("probs").get<std::vector<double>>();
    if (probs.size() != kNumLabels) throw std::runtime_error("prediction probs must have 14 entries");
    rec.probs = Eigen::Map<const Vector>(probs.data(), kNumLabels);
  }
  for (const auto& name : j.at("predicted")) {
    auto l = parse_label(name.get<std::string>());
    if (!l) throw std::runtime_error("unknown predicted label");
    rec.predicted.insert(*l);
  }
  return rec;
}

std::vector<PredictionRecord> load_predictions(const std::string& path) {
  std::vector<PredictionRecord> out;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    out.push_back(parse_prediction(line));
  }
  return out;
}

void save_predictions(const std::vector<PredictionRecord>& records, const std::string& path) {
  std::string content;
  for (const auto& rec : records) {
    content += serialize_prediction(rec);
    content += '\n';
  }
  write_file_atomic(path, content);
}

}  // namespace idrr
