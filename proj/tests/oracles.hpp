// Independent brute-force oracles used by the unit and acceptance suites.
// These deliberately re-derive every quantity with plain loops so they share
// no code path with the library implementations they check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double entropy_of(const VectorXd& p) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  return h;
}

inline double kl(const VectorXd& p, const VectorXd& q, double floor) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double pi = std::max(p(i), floor);
    const double qi = std::max(q(i), floor);
    acc += pi * std::log(pi / qi);
  }
  return acc;
}

// Direct summation of the neighborhood-clustering objective: for each batch
// row i, a softmax over F_j^T x_i / tau for every j except the sample's own
// bank column, then the entropy of that distribution, averaged over the
// batch. `lookup` holds the bank columns followed by the prototype columns.
inline double nc_direct(const MatrixXd& features, const std::vector<int>& bank_indices,
                        const MatrixXd& lookup, double tau) {
  const auto batch = features.rows();
  const auto total = lookup.cols();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    std::vector<double> weights;
    double z = 0.0;
    for (Eigen::Index j = 0; j < total; ++j) {
      if (j == bank_indices[static_cast<std::size_t>(i)]) continue;
      const double s = lookup.col(j).dot(features.row(i)) / tau;
      weights.push_back(s);
    }
    double peak = weights[0];
    for (const double w : weights) peak = std::max(peak, w);
    for (double& w : weights) {
      w = std::exp(w - peak);
      z += w;
    }
    double h = 0.0;
    for (const double w : weights) {
      const double p = w / z;
      if (p > 0.0) h -= p * std::log(p);
    }
    acc += h;
  }
  return acc / static_cast<double>(batch);
}

// Pairwise brute force of the unknown-aware clustering loss over ordered
// pairs (i, j != i).
inline double cl_direct(const MatrixXd& probs, const std::vector<int>& pseudo,
                        const VectorXd& conf, double floor) {
  const auto batch = probs.rows();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    for (Eigen::Index j = 0; j < batch; ++j) {
      if (i == j) continue;
      if (pseudo[static_cast<std::size_t>(i)] != pseudo[static_cast<std::size_t>(j)]) continue;
      const double w = std::min(conf(i), conf(j));
      const VectorXd pi = probs.row(i).transpose();
      const VectorXd pj = probs.row(j).transpose();
      acc += w * (kl(pi, pj, floor) + kl(pj, pi, floor));
    }
  }
  return acc / (static_cast<double>(batch) * static_cast<double>(batch));
}

// Exhaustive nearest-centroid scan.
inline int nearest_centroid(const VectorXd& x, const MatrixXd& centroids) {
  int best = 0;
  double best_d = (x - centroids.col(0)).norm();
  for (Eigen::Index z = 1; z < centroids.cols(); ++z) {
    const double d = (x - centroids.col(z)).norm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(z);
    }
  }
  return best;
}

}  // namespace oracle
