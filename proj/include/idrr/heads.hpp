#pragma once

#include <optional>
#include <string>
#include <vector>

#include "idrr/encoder.hpp"
#include "idrr/labels.hpp"
#include "idrr/types.hpp"

namespace idrr {

enum class Method { M1, M2, M3, Baseline };

std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view s);

// Single classification head over all 14 labels, one logistic unit each.
struct Method1Head {
  Matrix weight;  // H x 14
  Vector bias;    // 14

  static Method1Head zeros(int hidden_dim);
  template <typename F>
  void visit(F&& f) {
    f(weight);
    f(bias);
  }
};

// 14 independent two-way heads. Label i owns columns 2i (positive) and
// 2i+1 (negative).
struct Method2Head {
  Matrix weight;  // H x 28
  Vector bias;    // 28

  static Method2Head zeros(int hidden_dim);
  template <typename F>
  void visit(F&& f) {
    f(weight);
    f(bias);
  }
};

// Multi-class softmax head for the single-label duplication baseline.
struct BaselineHead {
  Matrix weight;  // H x 14
  Vector bias;    // 14

  static BaselineHead zeros(int hidden_dim);
  template <typename F>
  void visit(F&& f) {
    f(weight);
    f(bias);
  }
};

Vector m1_logits(const Vector& pooled, const Method1Head& head);
// Elementwise logistic probabilities, no simplex constraint.
Vector m1_forward(const Vector& pooled, const Method1Head& head);

Matrix m2_logits(const Vector& pooled, const Method2Head& head);  // 14 x 2
// Positive-class probability per label from each two-way softmax.
Vector m2_forward(const Vector& pooled, const Method2Head& head);

Vector baseline_logits(const Vector& pooled, const BaselineHead& head);
// Probability simplex over the 14 classes.
Vector baseline_forward(const Vector& pooled, const BaselineHead& head);

// Labels whose probability strictly exceeds the threshold; may be empty.
LabelSet threshold_predict(const Vector& probs, double threshold = 0.5);

// Highest-probability label, ties broken by lowest canonical index.
SenseLabel argmax_predict(const Vector& probs);

// Dot-product attention: weights = masked softmax of tokens * hidden,
// context = weighted average of token rows.
Vector attention(const Vector& hidden, const Matrix& tokens, const VectorI& mask);

struct AttentionCache {
  Vector weights;  // T
};

Vector attention_forward(const Vector& hidden, const Matrix& tokens, const VectorI& mask,
                         AttentionCache& cache);

// Backward of attention_forward. Accumulates into d_hidden and d_tokens.
void attention_backward(const Vector& hidden, const Matrix& tokens, const VectorI& mask,
                        const AttentionCache& cache, const Vector& d_context, Vector& d_hidden,
                        Matrix& d_tokens);

// Decoded prediction for one instance. `probs` is empty for Method 3.
struct PredictionRecord {
  int instance_id = -1;
  Method method = Method::M1;
  Vector probs;
  LabelSet predicted;
};

std::string serialize_prediction(const PredictionRecord& rec);
PredictionRecord parse_prediction(const std::string& line);
std::vector<PredictionRecord> load_predictions(const std::string& path);
void save_predictions(const std::vector<PredictionRecord>& records, const std::string& path);

}  // namespace idrr
