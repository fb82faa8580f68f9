#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace idrr {

using Scalar = double;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using VectorI = Eigen::VectorXi;

// Elementwise logistic, numerically stable on both tails.
template <typename Derived>
Vector logistic(const Eigen::MatrixBase<Derived>& z) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const Scalar x = z(i);
    out(i) = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return out;
}

inline Scalar logistic(Scalar x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

template <typename Derived>
Vector softmax(const Eigen::MatrixBase<Derived>& z) {
  const Scalar m = z.maxCoeff();
  Vector e = (z.array() - m).exp().matrix();
  return e / e.sum();
}

template <typename Derived>
Vector log_softmax(const Eigen::MatrixBase<Derived>& z) {
  const Scalar m = z.maxCoeff();
  const Scalar lse = std::log((z.array() - m).exp().sum()) + m;
  return (z.array() - lse).matrix();
}

// Softmax restricted to positions where mask != 0; masked entries get weight 0.
template <typename Derived>
Vector masked_softmax(const Eigen::MatrixBase<Derived>& z, const VectorI& mask) {
  if (z.size() != mask.size()) throw std::invalid_argument("masked_softmax: size mismatch");
  Scalar m = -std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (mask(i) != 0) m = std::max(m, z(i));
  if (!std::isfinite(m)) throw std::invalid_argument("masked_softmax: all positions masked");
  Vector w = Vector::Zero(z.size());
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (mask(i) != 0) {
      w(i) = std::exp(z(i) - m);
      sum += w(i);
    }
  }
  w /= sum;
  return w;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace idrr
