#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "omega/common.hpp"

namespace omega {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// A discrete distribution with its Shannon entropy cached at construction.
struct ProbDist {
  VectorXd probs;
  double entropy = 0.0;
};

// Shannon entropy with natural log; 0*ln(0) := 0.
template <typename Derived>
double entropy(const Eigen::MatrixBase<Derived>& p) {
  double h = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double v = p(k);
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

// Temperature softmax exp(l_k/tau) / sum_j exp(l_j/tau), computed with
// max-subtraction so large logit/temperature ratios cannot overflow.
template <typename Derived>
ProbDist softmax_tau(const Eigen::MatrixBase<Derived>& logits, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("softmax_tau: tau must be positive");
  if (!logits.allFinite()) throw InvalidArgument("softmax_tau: non-finite logits");
  VectorXd scaled = logits.template cast<double>() / tau;
  const double peak = scaled.maxCoeff();
  VectorXd weights = (scaled.array() - peak).exp();
  ProbDist out;
  out.probs = weights / weights.sum();
  out.entropy = entropy(out.probs);
  return out;
}

// Row-wise temperature softmax for batches (one sample per row).
inline MatrixXd softmax_tau_rows(const MatrixXd& logits, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("softmax_tau_rows: tau must be positive");
  if (!logits.allFinite()) throw InvalidArgument("softmax_tau_rows: non-finite logits");
  MatrixXd scaled = logits / tau;
  VectorXd peak = scaled.rowwise().maxCoeff();
  MatrixXd weights = (scaled.colwise() - peak).array().exp();
  return weights.array().colwise() / weights.rowwise().sum().array();
}

inline VectorXd row_entropies(const MatrixXd& probs) {
  VectorXd h(probs.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) h(i) = entropy(probs.row(i));
  return h;
}

// Symmetric KL divergence D(p||q) + D(q||p) with both arguments clamped at
// kProbFloor before the logs. Equals sum_k (p~_k - q~_k) * ln(p~_k / q~_k).
inline double sym_kl(const VectorXd& p, const VectorXd& q) {
  if (p.size() != q.size()) throw InvalidArgument("sym_kl: support size mismatch");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    const double pk = std::max(p(k), kProbFloor);
    const double qk = std::max(q(k), kProbFloor);
    acc += (pk - qk) * (std::log(pk) - std::log(qk));
  }
  return acc;
}

// d sym_kl(p, q) / d p, with zero slope in clamped coordinates.
inline VectorXd sym_kl_grad_first(const VectorXd& p, const VectorXd& q) {
  if (p.size() != q.size()) throw InvalidArgument("sym_kl_grad_first: support size mismatch");
  VectorXd g = VectorXd::Zero(p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) <= kProbFloor) continue;
    const double pk = p(k);
    const double qk = std::max(q(k), kProbFloor);
    g(k) = (std::log(pk) - std::log(qk)) + (pk - qk) / pk;
  }
  return g;
}

template <typename Derived>
VectorXd l2_normalize(const Eigen::MatrixBase<Derived>& v) {
  const double norm = v.norm();
  if (norm <= 1e-12) throw DegenerateInput("l2_normalize: near-zero vector");
  return v.template cast<double>() / norm;
}

inline MatrixXd l2_normalize_rows(const MatrixXd& x) {
  MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = l2_normalize(x.row(i)).transpose();
  return out;
}

// Central-difference gradient, the reference oracle for every analytic
// gradient in this project.
inline VectorXd finite_diff_grad(const std::function<double(const VectorXd&)>& f,
                                 VectorXd x, double h = 1e-5) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_grad: h must be positive");
  VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double original = x(k);
    x(k) = original + h;
    const double fp = f(x);
    x(k) = original - h;
    const double fm = f(x);
    x(k) = original;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw OracleFailure("finite_diff_grad: non-finite function evaluation");
    }
    g(k) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Vector-Jacobian product of a row-wise softmax: given probabilities P and an
// upstream gradient w.r.t. P, returns the gradient w.r.t. the (unscaled)
// softmax inputs. Temperature scaling is the caller's responsibility.
inline MatrixXd softmax_vjp_rows(const MatrixXd& probs, const MatrixXd& grad_probs) {
  if (probs.rows() != grad_probs.rows() || probs.cols() != grad_probs.cols()) {
    throw InvalidArgument("softmax_vjp_rows: shape mismatch");
  }
  VectorXd dot = (probs.array() * grad_probs.array()).rowwise().sum();
  return probs.array() * (grad_probs.colwise() - dot).array();
}

// |a - b| <= max(floor, rtol * max(|a|, |b|)).
inline bool close_rel(double a, double b, double rtol = 1e-4, double floor = 1e-7) {
  return std::abs(a - b) <= std::max(floor, rtol * std::max(std::abs(a), std::abs(b)));
}

}  // namespace omega
