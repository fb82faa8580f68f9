#include "idrr/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace idrr {

namespace {

constexpr double kProbEps = 1e-12;

double clamp_prob(double p) { return std::min(std::max(p, kProbEps), 1.0 - kProbEps); }

void check_probs(const Vector& probs, const Vector& y) {
  if (probs.size() != kNumLabels || y.size() != kNumLabels)
    throw std::invalid_argument("loss: need 14 probabilities and 14 targets");
  if (!probs.allFinite() || !y.allFinite())
    throw std::invalid_argument("loss: non-finite input");
}

}  // namespace

LossValue bce_sigmoid(const Vector& probs, const Vector& y) {
  check_probs(probs, y);
  LossValue out;
  Vector per = Vector::Zero(kNumLabels);
  for (int i = 0; i < kNumLabels; ++i) {
    const double p = clamp_prob(probs(i));
    per(i) = -(y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p));
  }
  out.per_label = per;
  out.value = per.mean();
  return out;
}

Vector bce_sigmoid_grad_logits(const Vector& logits, const Vector& y) {
  if (!logits.allFinite()) throw std::invalid_argument("bce grad: non-finite logits");
  const Vector p = logistic(logits);
  return (p - y) / static_cast<double>(kNumLabels);
}

LossValue per_label_softmax_ce(const Matrix& logits, const Vector& y) {
  if (logits.rows() != kNumLabels || logits.cols() != 2)
    throw std::invalid_argument("per_label_softmax_ce: need 14x2 logits");
  if (!logits.allFinite()) throw std::invalid_argument("per_label_softmax_ce: non-finite input");
  LossValue out;
  Vector per = Vector::Zero(kNumLabels);
  for (int i = 0; i < kNumLabels; ++i) {
    const Vector lp = log_softmax(logits.row(i).transpose());
    per(i) = y(i) == 1.0 ? -lp(0) : -lp(1);
  }
  out.per_label = per;
  out.value = per.mean();
  return out;
}

Matrix per_label_softmax_ce_grad_logits(const Matrix& logits, const Vector& y) {
  Matrix grad(kNumLabels, 2);
  for (int i = 0; i < kNumLabels; ++i) {
    Vector p = softmax(logits.row(i).transpose());
    p(y(i) == 1.0 ? 0 : 1) -= 1.0;
    grad.row(i) = p.transpose() / static_cast<double>(kNumLabels);
  }
  return grad;
}

LossValue sequence_ce(const std::vector<double>& logprobs) {
  if (logprobs.empty()) throw std::invalid_argument("sequence_ce: empty sequence");
  double sum = 0.0;
  for (double lp : logprobs) {
    if (lp > 0.0) throw std::invalid_argument("sequence_ce: positive log-probability");
    sum += lp;
  }
  return {-sum, std::nullopt};
}

LossValue multiclass_ce(const Vector& simplex, SenseLabel gold) {
  if (simplex.size() != kNumLabels) throw std::invalid_argument("multiclass_ce: need 14 probs");
  const double p = clamp_prob(simplex(static_cast<int>(gold)));
  return {-std::log(p), std::nullopt};
}

Vector multiclass_ce_grad_logits(const Vector& logits, SenseLabel gold) {
  Vector grad = softmax(logits);
  grad(static_cast<int>(gold)) -= 1.0;
  return grad;
}

LossValue focal(const Vector& probs, const Vector& y, const FocalConfig& cfg) {
  check_probs(probs, y);
  if (cfg.gamma_pos < 0 || cfg.gamma_neg < 0)
    throw std::invalid_argument("focal: gammas must be >= 0");
  LossValue out;
  Vector per = Vector::Zero(kNumLabels);
  for (int i = 0; i < kNumLabels; ++i) {
    const double p = clamp_prob(probs(i));
    per(i) = y(i) == 1.0 ? -std::pow(1.0 - p, cfg.gamma_pos) * std::log(p)
                         : -std::pow(p, cfg.gamma_neg) * std::log(1.0 - p);
  }
  out.per_label = per;
  out.value = per.mean();
  return out;
}

Vector focal_grad_probs(const Vector& probs, const Vector& y, const FocalConfig& cfg) {
  check_probs(probs, y);
  Vector grad = Vector::Zero(kNumLabels);
  for (int i = 0; i < kNumLabels; ++i) {
    const double p = clamp_prob(probs(i));
    double g;
    if (y(i) == 1.0) {
      const double g_pos = cfg.gamma_pos;
      // d/dp [-(1-p)^g log p] = g (1-p)^{g-1} log p - (1-p)^g / p
      g = g_pos * std::pow(1.0 - p, g_pos - 1.0) * std::log(p) - std::pow(1.0 - p, g_pos) / p;
    } else {
      const double g_neg = cfg.gamma_neg;
      // d/dp [-p^g log(1-p)] = -g p^{g-1} log(1-p) + p^g / (1-p)
      g = -g_neg * std::pow(p, g_neg - 1.0) * std::log(1.0 - p) + std::pow(p, g_neg) / (1.0 - p);
    }
    grad(i) = g / static_cast<double>(kNumLabels);
  }
  return grad;
}

Vector focal_grad_logits_sigmoid(const Vector& logits, const Vector& y, const FocalConfig& cfg) {
  const Vector p = logistic(logits);
  const Vector dp = focal_grad_probs(p, y, cfg);
  return dp.cwiseProduct(p.cwiseProduct(Vector::Ones(kNumLabels) - p));
}

}  // namespace idrr
