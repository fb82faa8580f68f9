#include "idrr/decoder.hpp"

#include <algorithm>
#include <stdexcept>

#include "idrr/rng.hpp"

namespace idrr {

GruCell GruCell::zeros(int input_dim, int hidden_dim) {
  GruCell c;
  c.Wxr = Matrix::Zero(hidden_dim, input_dim);
  c.Wxz = Matrix::Zero(hidden_dim, input_dim);
  c.Wxn = Matrix::Zero(hidden_dim, input_dim);
  c.Whr = Matrix::Zero(hidden_dim, hidden_dim);
  c.Whz = Matrix::Zero(hidden_dim, hidden_dim);
  c.Whn = Matrix::Zero(hidden_dim, hidden_dim);
  c.br = Vector::Zero(hidden_dim);
  c.bz = Vector::Zero(hidden_dim);
  c.bxn = Vector::Zero(hidden_dim);
  c.bhn = Vector::Zero(hidden_dim);
  return c;
}

Vector gru_forward(const GruCell& cell, const Vector& x, const Vector& h_prev, GruCache& cache) {
  if (x.size() != cell.input_dim() || h_prev.size() != cell.hidden_dim())
    throw std::invalid_argument("gru_forward: dimension mismatch");
  cache.x = x;
  cache.h_prev = h_prev;
  cache.r = logistic(cell.Wxr * x + cell.Whr * h_prev + cell.br);
  cache.z = logistic(cell.Wxz * x + cell.Whz * h_prev + cell.bz);
  cache.a = cell.Whn * h_prev + cell.bhn;
  cache.n = (cell.Wxn * x + cell.bxn + cache.r.cwiseProduct(cache.a)).array().tanh().matrix();
  return (Vector::Ones(h_prev.size()) - cache.z).cwiseProduct(cache.n) +
         cache.z.cwiseProduct(h_prev);
}

void gru_backward(const GruCell& cell, const GruCache& cache, const Vector& d_h_new,
                  GruCell& grads, Vector& d_x, Vector& d_h_prev) {
  const Vector ones = Vector::Ones(cache.r.size());
  const Vector d_n = d_h_new.cwiseProduct(ones - cache.z);
  const Vector d_z = d_h_new.cwiseProduct(cache.h_prev - cache.n);
  d_h_prev += d_h_new.cwiseProduct(cache.z);

  const Vector d_pre_n = d_n.cwiseProduct(ones - cache.n.cwiseProduct(cache.n));
  grads.Wxn += d_pre_n * cache.x.transpose();
  grads.bxn += d_pre_n;
  const Vector d_r = d_pre_n.cwiseProduct(cache.a);
  const Vector d_a = d_pre_n.cwiseProduct(cache.r);
  grads.Whn += d_a * cache.h_prev.transpose();
  grads.bhn += d_a;
  d_h_prev += cell.Whn.transpose() * d_a;
  d_x += cell.Wxn.transpose() * d_pre_n;

  const Vector d_pre_r = d_r.cwiseProduct(cache.r.cwiseProduct(ones - cache.r));
  grads.Wxr += d_pre_r * cache.x.transpose();
  grads.Whr += d_pre_r * cache.h_prev.transpose();
  grads.br += d_pre_r;
  d_h_prev += cell.Whr.transpose() * d_pre_r;
  d_x += cell.Wxr.transpose() * d_pre_r;

  const Vector d_pre_z = d_z.cwiseProduct(cache.z.cwiseProduct(ones - cache.z));
  grads.Wxz += d_pre_z * cache.x.transpose();
  grads.Whz += d_pre_z * cache.h_prev.transpose();
  grads.bz += d_pre_z;
  d_h_prev += cell.Whz.transpose() * d_pre_z;
  d_x += cell.Wxz.transpose() * d_pre_z;
}

Method3Decoder Method3Decoder::zeros(int hidden_dim) {
  Method3Decoder d;
  d.cell = GruCell::zeros(2 * hidden_dim, hidden_dim);
  d.label_embeddings = Matrix::Zero(kNumLabels + 2, hidden_dim);
  d.output_weight = Matrix::Zero(2 * hidden_dim, kOutputClasses);
  d.output_bias = Vector::Zero(kOutputClasses);
  return d;
}

Method3Decoder Method3Decoder::random_init(int hidden_dim, std::uint64_t seed, double scale) {
  Method3Decoder d = zeros(hidden_dim);
  Rng rng(seed);
  d.visit([&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  });
  return d;
}

std::pair<Vector, Vector> m3_step_cached(int prev_symbol, const Vector& hidden,
                                         const EncoderOutput& enc, const Method3Decoder& dec,
                                         M3StepCache& cache) {
  if (prev_symbol < 0 || prev_symbol > kBeginSymbol)
    throw std::invalid_argument("m3_step: prev_symbol must be a label or the begin symbol");
  const int H = dec.hidden_dim();
  if (hidden.size() != H) throw std::invalid_argument("m3_step: hidden size mismatch");
  cache.prev_symbol = prev_symbol;
  cache.h_prev = hidden;
  cache.context = attention_forward(hidden, enc.tokens, enc.mask, cache.attn);
  Vector x(2 * H);
  x.head(H) = dec.label_embeddings.row(prev_symbol).transpose();
  x.tail(H) = cache.context;
  cache.h_new = gru_forward(dec.cell, x, hidden, cache.gru);
  Vector u(2 * H);
  u.head(H) = cache.h_new;
  u.tail(H) = cache.context;
  const Vector scores = dec.output_weight.transpose() * u + dec.output_bias;
  const Vector logp = log_softmax(scores);
  cache.probs = logp.array().exp().matrix();
  return {logp, cache.h_new};
}

std::pair<Vector, Vector> m3_step(int prev_symbol, const Vector& hidden, const EncoderOutput& enc,
                                  const Method3Decoder& dec) {
  M3StepCache cache;
  return m3_step_cached(prev_symbol, hidden, enc, dec, cache);
}

static std::vector<int> gold_symbol_stream(const std::vector<SenseLabel>& gold_labels) {
  if (gold_labels.empty())
    throw std::invalid_argument("teacher forcing requires a nonempty gold sequence");
  std::vector<int> symbols;
  for (SenseLabel l : gold_labels) symbols.push_back(static_cast<int>(l));
  symbols.push_back(kOutputEnd);
  return symbols;
}

std::vector<double> m3_teacher_forced_logprobs(const EncoderOutput& enc,
                                               const std::vector<SenseLabel>& gold_labels,
                                               const Method3Decoder& dec) {
  const std::vector<int> targets = gold_symbol_stream(gold_labels);
  std::vector<double> out;
  Vector hidden = enc.pooled;
  int prev = kBeginSymbol;
  for (int target : targets) {
    auto [logp, h_new] = m3_step(prev, hidden, enc, dec);
    out.push_back(logp(target));
    hidden = h_new;
    prev = target;  // gold prefix; the end symbol is never fed back
  }
  return out;
}

double m3_loss_and_grads(const EncoderOutput& enc, const std::vector<SenseLabel>& gold_labels,
                         const Method3Decoder& dec, Method3Decoder& grads, Vector& d_pooled,
                         Matrix& d_tokens) {
  const std::vector<int> targets = gold_symbol_stream(gold_labels);
  const int H = dec.hidden_dim();
  const int steps = static_cast<int>(targets.size());

  std::vector<M3StepCache> caches(static_cast<std::size_t>(steps));
  Vector hidden = enc.pooled;
  int prev = kBeginSymbol;
  double loss = 0.0;
  for (int t = 0; t < steps; ++t) {
    auto [logp, h_new] = m3_step_cached(prev, hidden, enc, dec, caches[t]);
    loss -= logp(targets[t]);
    hidden = h_new;
    prev = targets[t];
  }

  Vector d_h_carry = Vector::Zero(H);
  for (int t = steps - 1; t >= 0; --t) {
    const M3StepCache& c = caches[t];
    Vector d_scores = c.probs;
    d_scores(targets[t]) -= 1.0;

    Vector u(2 * H);
    u.head(H) = c.h_new;
    u.tail(H) = c.context;
    grads.output_weight += u * d_scores.transpose();
    grads.output_bias += d_scores;
    const Vector d_u = dec.output_weight * d_scores;

    Vector d_h_new = d_u.head(H) + d_h_carry;
    Vector d_context = d_u.tail(H);

    Vector d_x = Vector::Zero(2 * H);
    Vector d_h_prev = Vector::Zero(H);
    gru_backward(dec.cell, c.gru, d_h_new, grads.cell, d_x, d_h_prev);

    grads.label_embeddings.row(c.prev_symbol) += d_x.head(H).transpose();
    d_context += d_x.tail(H);

    attention_backward(c.h_prev, enc.tokens, enc.mask, c.attn, d_context, d_h_prev, d_tokens);
    d_h_carry = d_h_prev;
  }
  d_pooled += d_h_carry;
  return loss;
}

namespace {

struct BeamPath {
  std::vector<int> labels;
  Vector hidden;
  double score = 0.0;  // negated sum of log-probs so far
  std::uint16_t used = 0;
};

}  // namespace

BeamResult m3_beam_search(const EncoderOutput& enc, const Method3Decoder& dec, int beam_width,
                          int max_len) {
  if (beam_width < 1 || max_len < 1)
    throw std::invalid_argument("beam search needs beam_width >= 1 and max_len >= 1");

  std::vector<BeamPath> live;
  live.push_back({{}, enc.pooled, 0.0, 0});

  struct Done {
    std::vector<int> labels;
    double score;
  };
  std::vector<Done> done;
  int best_first_label = 0;

  for (int step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<BeamPath> candidates;
    for (const BeamPath& path : live) {
      const int prev = path.labels.empty() ? kBeginSymbol : path.labels.back();
      auto [logp, h_new] = m3_step(prev, path.hidden, enc, dec);
      if (step == 0) {
        for (int l = 1; l < kNumLabels; ++l)
          if (logp(l) > logp(best_first_label)) best_first_label = l;
      }
      // End continuation: retire the path; it never consumes a beam slot.
      done.push_back({path.labels, path.score - logp(kOutputEnd)});
      for (int l = 0; l < kNumLabels; ++l) {
        if (path.used & (1u << l)) continue;
        BeamPath next;
        next.labels = path.labels;
        next.labels.push_back(l);
        next.hidden = h_new;
        next.score = path.score - logp(l);
        next.used = static_cast<std::uint16_t>(path.used | (1u << l));
        candidates.push_back(std::move(next));
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const BeamPath& a, const BeamPath& b) { return a.score < b.score; });
    if (static_cast<int>(candidates.size()) > beam_width) candidates.resize(beam_width);
    live = std::move(candidates);
  }

  BeamResult result;
  if (!done.empty()) {
    const Done* best = &done.front();
    for (const Done& d : done)
      if (d.score < best->score) best = &d;
    result.score = best->score;
    result.ended = true;
    if (best->labels.empty()) {
      // Bare end at step 1: fall back to the most likely first label so the
      // prediction is never empty.
      result.labels.push_back(static_cast<SenseLabel>(best_first_label));
    } else {
      for (int l : best->labels) result.labels.push_back(static_cast<SenseLabel>(l));
    }
    return result;
  }
  const BeamPath* best = &live.front();
  for (const BeamPath& p : live)
    if (p.score < best->score) best = &p;
  for (int l : best->labels) result.labels.push_back(static_cast<SenseLabel>(l));
  result.score = best->score;
  result.ended = false;
  return result;
}

std::vector<SenseLabel> canonical_sequence(LabelSet labels,
                                           const std::array<long, kNumLabels>& train_freq) {
  std::vector<SenseLabel> out = labels.members();
  std::stable_sort(out.begin(), out.end(), [&](SenseLabel a, SenseLabel b) {
    const long fa = train_freq[static_cast<int>(a)];
    const long fb = train_freq[static_cast<int>(b)];
    if (fa != fb) return fa > fb;
    return static_cast<int>(a) < static_cast<int>(b);
  });
  return out;
}

}  // namespace idrr
