#include "omega/thresholding.hpp"

#include <cmath>
#include <limits>

namespace omega {

ThresholdState ThresholdState::initial(int num_classes, double ratio) {
  require(num_classes >= 1, "ThresholdState: need at least one class");
  require(ratio >= 0.0 && ratio <= 0.5, "ThresholdState: ratio outside [0, 0.5]");
  ThresholdState st;
  st.rho = 0.5 * std::log(static_cast<double>(num_classes));
  st.ratio = ratio;
  st.class_entropy = VectorXd::Zero(num_classes);
  st.thresholds = VectorXd::Constant(num_classes, st.rho);
  st.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  return st;
}

ClassEntropies class_entropies(const MatrixXd& probs) {
  if (probs.rows() == 0) throw InvalidArgument("class_entropies: empty target set");
  const auto num_classes = probs.cols();
  ClassEntropies out;
  out.mean_entropy = VectorXd::Zero(num_classes);
  out.counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    probs.row(i).maxCoeff(&best);  // first maximum wins a tie
    out.mean_entropy(best) += entropy(probs.row(i));
    ++out.counts[static_cast<std::size_t>(best)];
  }
  for (Eigen::Index k = 0; k < num_classes; ++k) {
    const long c = out.counts[static_cast<std::size_t>(k)];
    if (c > 0) out.mean_entropy(k) /= static_cast<double>(c);
  }
  return out;
}

VectorXd update_thresholds(const VectorXd& mean_entropy, const std::vector<long>& counts,
                           double ratio, int num_classes) {
  require(ratio >= 0.0 && ratio <= 0.5, "update_thresholds: ratio outside [0, 0.5]");
  require(mean_entropy.size() == num_classes &&
              static_cast<int>(counts.size()) == num_classes,
          "update_thresholds: entropy/count length mismatch");

  const double log_k = std::log(static_cast<double>(num_classes));
  const double rho = 0.5 * log_k;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  long populated = 0;
  for (int k = 0; k < num_classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) continue;
    ++populated;
    lo = std::min(lo, mean_entropy(k));
    hi = std::max(hi, mean_entropy(k));
  }
  if (populated == 0) throw InvalidArgument("update_thresholds: all class counts are zero");

  VectorXd q = VectorXd::Constant(num_classes, rho);
  if (ratio == 0.0 || hi == lo) return q;  // collapses to the fixed rule
  for (int k = 0; k < num_classes; ++k) {
    if (counts[static_cast<std::size_t>(k)] == 0) continue;  // keep rho
    const double normalized = (mean_entropy(k) - lo) / (hi - lo);
    q(k) = (0.5 - ratio + 2.0 * ratio * normalized) * log_k;
  }
  return q;
}

int predict_open(const VectorXd& probs, const VectorXd& thresholds) {
  require(probs.size() == thresholds.size(), "predict_open: threshold length mismatch");
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  if (entropy(probs) > thresholds(best)) {
    return static_cast<int>(probs.size()) + 1;
  }
  return static_cast<int>(best) + 1;
}

std::vector<int> predict_open_batch(const MatrixXd& probs, const VectorXd& thresholds) {
  std::vector<int> labels(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    labels[static_cast<std::size_t>(i)] = predict_open(probs.row(i).transpose(), thresholds);
  }
  return labels;
}

}  // namespace omega
