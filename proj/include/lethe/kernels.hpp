#pragma once

// Scalar-generic dense kernels behind the association model. Embeddings are
// stored column-wise: column k of `embeddings` is the vector of concept k.

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace lethe::kernels {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Dot products of `query` with every column, divided by `temperature`; the
// excluded column is set to -inf so it drops out of any softmax.
template <typename DerivedE, typename DerivedQ>
Vector<typename DerivedE::Scalar> candidate_logits(
    const Eigen::MatrixBase<DerivedE>& embeddings,
    const Eigen::MatrixBase<DerivedQ>& query, Eigen::Index excluded,
    typename DerivedE::Scalar temperature) {
  using Scalar = typename DerivedE::Scalar;
  Vector<Scalar> logits = (embeddings.transpose() * query) / temperature;
  logits(excluded) = -std::numeric_limits<Scalar>::infinity();
  return logits;
}

// Softmax over finite entries; -inf entries get probability exactly 0.
template <typename Derived>
Vector<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar peak = logits.maxCoeff();
  // Vectorized exp clamps -inf to a tiny positive value, so mask it.
  Vector<Scalar> p = (logits.array() == -std::numeric_limits<Scalar>::infinity())
                         .select(Scalar(0), (logits.array() - peak).exp())
                         .matrix();
  return p / p.sum();
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& logits) {
  using std::exp;
  using std::log;
  const auto peak = logits.maxCoeff();
  using Scalar = typename Derived::Scalar;
  return peak + log((logits.array() == -std::numeric_limits<Scalar>::infinity())
                        .select(Scalar(0), (logits.array() - peak).exp())
                        .sum());
}

// d/d(query) of log softmax(logits)[target] where logits = E^T q / T:
// (e_target - sum_k p_k e_k) / T.
template <typename DerivedE, typename DerivedP>
Vector<typename DerivedE::Scalar> query_gradient(
    const Eigen::MatrixBase<DerivedE>& embeddings,
    const Eigen::MatrixBase<DerivedP>& probs, Eigen::Index target,
    typename DerivedE::Scalar temperature) {
  return (embeddings.col(target) - embeddings * probs) / temperature;
}

// d/d(e_k) of the same log-probability for a candidate column k:
// (1[k = target] - p_k) q / T.
template <typename DerivedQ>
Vector<typename DerivedQ::Scalar> candidate_gradient(
    const Eigen::MatrixBase<DerivedQ>& query, typename DerivedQ::Scalar prob,
    bool is_target, typename DerivedQ::Scalar temperature) {
  using Scalar = typename DerivedQ::Scalar;
  const Scalar weight = (is_target ? Scalar(1) : Scalar(0)) - prob;
  return query * (weight / temperature);
}

// normalize(e - alpha * grad). Returns false and leaves `out` untouched when
// the raw step is zero or non-finite.
template <typename DerivedE, typename DerivedG, typename Scalar>
bool corruption_step(const Eigen::MatrixBase<DerivedE>& embedding,
                     const Eigen::MatrixBase<DerivedG>& grad, Scalar alpha,
                     Vector<Scalar>& out) {
  const Vector<Scalar> raw = embedding - alpha * grad;
  const Scalar norm = raw.norm();
  if (norm == Scalar(0) || !std::isfinite(norm)) return false;
  out = raw / norm;
  return true;
}

// Normalizes every column to unit Euclidean length in place.
template <typename Derived>
void normalize_columns(Eigen::MatrixBase<Derived>& embeddings) {
  for (Eigen::Index k = 0; k < embeddings.cols(); ++k) {
    embeddings.col(k).normalize();
  }
}

}  // namespace lethe::kernels
