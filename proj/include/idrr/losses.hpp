#pragma once

#include <optional>

#include "idrr/labels.hpp"
#include "idrr/types.hpp"

namespace idrr {

struct LossValue {
  double value = 0.0;
  std::optional<Vector> per_label;  // 14 components where meaningful
};

struct FocalConfig {
  double gamma_pos = 1.0;
  double gamma_neg = 4.0;
};

// Mean over the 14 labels of -[y log p + (1-y) log(1-p)].
LossValue bce_sigmoid(const Vector& probs, const Vector& y);
// Gradient of bce_sigmoid w.r.t. the pre-sigmoid logits.
Vector bce_sigmoid_grad_logits(const Vector& logits, const Vector& y);

// Per-label two-class cross-entropy over (positive, negative) logits,
// mean of the 14 losses. Column 0 is the positive class.
LossValue per_label_softmax_ce(const Matrix& logits, const Vector& y);
Matrix per_label_softmax_ce_grad_logits(const Matrix& logits, const Vector& y);

// Negated sum of teacher-forced log-probabilities.
LossValue sequence_ce(const std::vector<double>& logprobs);

// -log(simplex[gold]).
LossValue multiclass_ce(const Vector& simplex, SenseLabel gold);
// Gradient w.r.t. the pre-softmax logits: simplex - onehot(gold).
Vector multiclass_ce_grad_logits(const Vector& logits, SenseLabel gold);

// Focal loss on per-label probabilities (negated so minimization is
// meaningful): positives contribute -(1-p)^gpos log p, negatives
// -p^gneg log(1-p); mean over the 14 labels.
LossValue focal(const Vector& probs, const Vector& y, const FocalConfig& cfg);
// dL/dp per label, for chaining through whichever map produced p.
Vector focal_grad_probs(const Vector& probs, const Vector& y, const FocalConfig& cfg);
// Convenience: focal through the logistic map, gradient w.r.t. logits.
Vector focal_grad_logits_sigmoid(const Vector& logits, const Vector& y, const FocalConfig& cfg);

}  // namespace idrr
