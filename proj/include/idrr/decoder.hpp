#pragma once

#include <array>
#include <vector>

#include "idrr/encoder.hpp"
#include "idrr/heads.hpp"
#include "idrr/labels.hpp"
#include "idrr/types.hpp"

namespace idrr {

// Decoder symbol ids: 0..13 are labels, 14 is begin, 15 is end.
inline constexpr int kBeginSymbol = kNumLabels;
inline constexpr int kEndSymbol = kNumLabels + 1;
// Output-layer class index of the end symbol (classes are 14 labels + end).
inline constexpr int kOutputEnd = kNumLabels;
inline constexpr int kOutputClasses = kNumLabels + 1;

// GRU cell, PyTorch gate convention:
//   r = sigmoid(Wxr x + Whr h + br)
//   z = sigmoid(Wxz x + Whz h + bz)
//   n = tanh(Wxn x + bxn + r .* (Whn h + bhn))
//   h' = (1 - z) .* n + z .* h
struct GruCell {
  Matrix Wxr, Wxz, Wxn;  // H x I
  Matrix Whr, Whz, Whn;  // H x H
  Vector br, bz, bxn, bhn;

  static GruCell zeros(int input_dim, int hidden_dim);
  int hidden_dim() const { return static_cast<int>(Whr.rows()); }
  int input_dim() const { return static_cast<int>(Wxr.cols()); }

  template <typename F>
  void visit(F&& f) {
    f(Wxr); f(Wxz); f(Wxn);
    f(Whr); f(Whz); f(Whn);
    f(br); f(bz); f(bxn); f(bhn);
  }
};

struct GruCache {
  Vector x, h_prev, r, z, n, a;  // a = Whn h + bhn
};

Vector gru_forward(const GruCell& cell, const Vector& x, const Vector& h_prev, GruCache& cache);

// Accumulates parameter gradients into `grads` and input gradients into
// d_x / d_h_prev.
void gru_backward(const GruCell& cell, const GruCache& cache, const Vector& d_h_new,
                  GruCell& grads, Vector& d_x, Vector& d_h_prev);

// Sequence decoder for Method 3: GRU initialized from the pooled encoder
// representation, dot-product attention over token rows, input at each step
// is [prev-symbol embedding ; attention context], and the output layer reads
// the concatenated new hidden state and context.
struct Method3Decoder {
  GruCell cell;             // input dim 2H, hidden dim H
  Matrix label_embeddings;  // (14 labels + begin + end) x E, E = H
  Matrix output_weight;     // 2H x 15
  Vector output_bias;       // 15

  static Method3Decoder zeros(int hidden_dim);
  static Method3Decoder random_init(int hidden_dim, std::uint64_t seed, double scale = 0.1);
  int hidden_dim() const { return cell.hidden_dim(); }

  template <typename F>
  void visit(F&& f) {
    cell.visit(f);
    f(label_embeddings);
    f(output_weight);
    f(output_bias);
  }
};

struct M3StepCache {
  int prev_symbol = kBeginSymbol;
  Vector h_prev, context, h_new, probs;  // probs = softmax over 15 classes
  AttentionCache attn;
  GruCache gru;
};

// One decode step. prev_symbol is a label id or kBeginSymbol. Returns
// log-probabilities over the 15 output classes and the new hidden state.
std::pair<Vector, Vector> m3_step(int prev_symbol, const Vector& hidden,
                                  const EncoderOutput& enc, const Method3Decoder& dec);
std::pair<Vector, Vector> m3_step_cached(int prev_symbol, const Vector& hidden,
                                         const EncoderOutput& enc, const Method3Decoder& dec,
                                         M3StepCache& cache);

// Log-probability of each gold symbol given the gold prefix; the sequence is
// the ordered labels followed by the end symbol, so the result has
// |gold_labels| + 1 entries.
std::vector<double> m3_teacher_forced_logprobs(const EncoderOutput& enc,
                                               const std::vector<SenseLabel>& gold_labels,
                                               const Method3Decoder& dec);

// Teacher-forced sequence cross-entropy plus gradients w.r.t. every decoder
// parameter and the encoder outputs. Returns the loss.
double m3_loss_and_grads(const EncoderOutput& enc, const std::vector<SenseLabel>& gold_labels,
                         const Method3Decoder& dec, Method3Decoder& grads, Vector& d_pooled,
                         Matrix& d_tokens);

struct BeamResult {
  std::vector<SenseLabel> labels;
  double score = 0.0;  // negated sum of log-probabilities of the returned path
  bool ended = false;
};

// Beam search over label sequences; duplicate labels within a path are
// forbidden, only end-terminated paths are candidates, and the result is
// never empty (a bare end path falls back to the best step-1 label; an
// unterminated search returns the best frontier path).
BeamResult m3_beam_search(const EncoderOutput& enc, const Method3Decoder& dec,
                          int beam_width = 4, int max_len = 4);

// Gold labels in the canonical target order: descending training-fold
// frequency, ties by canonical index.
std::vector<SenseLabel> canonical_sequence(LabelSet labels,
                                           const std::array<long, kNumLabels>& train_freq);

}  // namespace idrr
