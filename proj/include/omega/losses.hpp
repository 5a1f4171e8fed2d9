#pragma once

#include <Eigen/Dense>
#include <vector>

#include "omega/clustering_fwd.hpp"
#include "omega/model.hpp"
#include "omega/numerics.hpp"

namespace omega {

// Per-step decomposition of the training objective
//   total = ce + eta1 * (nc + es) + eta2 * cl.
struct LossBreakdown {
  double ce = 0.0;
  double nc = 0.0;
  double es = 0.0;
  double cl = 0.0;
  double total = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
};

LossBreakdown total_loss(double ce, double nc, double es, double cl, double eta1, double eta2);

// Value plus analytic gradient with respect to the named input.
struct LossGrad {
  double value = 0.0;
  MatrixXd grad;  // same shape as the differentiated input
};

// Mean over the batch of -ln p_{i, y_i}; labels are 1-based class indices.
// The gradient is taken with respect to the probability rows.
LossGrad ce_loss(const MatrixXd& probs, const std::vector<int>& labels);

// Entropy separation: mean over the batch of -|H(p_i) - rho| where
// |H - rho| >= margin, zero inside the confidence band (boundary active).
LossGrad es_loss(const MatrixXd& probs, double rho, double margin);

// Pair weight for the clustering loss: min of the two confidences when the
// extended pseudo-labels agree, zero otherwise.
double pair_weight(int pseudo_i, int pseudo_j, double conf_i, double conf_j);

// Unknown-aware clustering loss: (1/B^2) sum over ordered pairs (i, j != i)
// of w_ij * sym_kl(p_i, p_j). Pseudo-labels and confidences are fixed inputs;
// the gradient flows only through the probability rows.
LossGrad cl_loss(const MatrixXd& probs, const std::vector<int>& pseudo_labels,
                 const VectorXd& confidences);

// Neighborhood clustering loss over the similarity structure
// F = [bank columns, prototype columns]: the mean entropy of each batch
// feature's softmax similarity to every other entry (its own bank column
// excluded). Bank entries and prototypes are constants here; the gradient
// flows to the batch features only.
LossGrad nc_loss(const MatrixXd& features, const std::vector<int>& bank_indices,
                 const MemoryBank& bank, const PrototypeClassifier& prototypes,
                 double tau);

}  // namespace omega
