#pragma once

#include <Eigen/Dense>
#include <vector>

#include "omega/numerics.hpp"

namespace omega {

// Moving-threshold state: class-wise mean prediction entropies over the
// target set and the per-class thresholds derived from them. With ratio 0
// every threshold collapses to the fixed rho = ln(K)/2 rule.
struct ThresholdState {
  VectorXd class_entropy;          // E, length K
  VectorXd thresholds;             // q, length K
  std::vector<long> class_counts;  // |T_i|
  double ratio = 0.0;              // r in [0, 0.5]
  double rho = 0.0;                // ln(K)/2

  static ThresholdState initial(int num_classes, double ratio);
};

// Groups every target sample by its argmax class over the known classes
// (unknowns are not distinguished here) and averages the prediction
// entropies per class. Returns (E, counts); empty classes get E_i = 0 with
// count 0.
struct ClassEntropies {
  VectorXd mean_entropy;
  std::vector<long> counts;
};
ClassEntropies class_entropies(const MatrixXd& probs);

// q_i = (0.5 - r + 2*r*(E_i - min E)/(max E - min E)) * ln K, with min/max
// over classes that received at least one sample. Empty classes and the
// degenerate max E == min E case fall back to rho.
VectorXd update_thresholds(const VectorXd& mean_entropy, const std::vector<long>& counts,
                           double ratio, int num_classes);

// Open-set prediction: K+1 when H(p) exceeds the threshold of the argmax
// class (strict), otherwise the argmax class. Ties break to the lowest
// class index. Returns a 1-based label in {1..K+1}.
int predict_open(const VectorXd& probs, const VectorXd& thresholds);
std::vector<int> predict_open_batch(const MatrixXd& probs, const VectorXd& thresholds);

}  // namespace omega
