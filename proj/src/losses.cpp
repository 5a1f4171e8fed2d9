#include "omega/losses.hpp"

#include <cmath>
#include <limits>

#include "omega/clustering.hpp"

namespace omega {

LossBreakdown total_loss(double ce, double nc, double es, double cl, double eta1, double eta2) {
  require(eta1 >= 0.0 && eta2 >= 0.0, "total_loss: trade-off weights must be nonnegative");
  LossBreakdown out;
  out.ce = ce;
  out.nc = nc;
  out.es = es;
  out.cl = cl;
  out.eta1 = eta1;
  out.eta2 = eta2;
  out.total = ce + eta1 * (nc + es) + eta2 * cl;
  return out;
}

LossGrad ce_loss(const MatrixXd& probs, const std::vector<int>& labels) {
  const auto batch = probs.rows();
  const auto num_classes = probs.cols();
  require(static_cast<Eigen::Index>(labels.size()) == batch,
          "ce_loss: labels/probs batch mismatch");
  LossGrad out;
  out.grad = MatrixXd::Zero(batch, num_classes);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 1 || y > num_classes) {
      throw InvalidArgument("ce_loss: label " + std::to_string(y) + " outside {1.." +
                            std::to_string(num_classes) + "}");
    }
    const double p = probs(i, y - 1);
    const double clamped = std::max(p, kProbFloor);
    acc -= std::log(clamped);
    if (p > kProbFloor) {
      out.grad(i, y - 1) = -1.0 / (static_cast<double>(batch) * p);
    }
  }
  out.value = acc / static_cast<double>(batch);
  return out;
}

LossGrad es_loss(const MatrixXd& probs, double rho, double margin) {
  require(margin >= 0.0, "es_loss: margin must be nonnegative");
  const auto batch = probs.rows();
  require(batch > 0, "es_loss: empty batch");
  LossGrad out;
  out.grad = MatrixXd::Zero(batch, probs.cols());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < batch; ++i) {
    const double h = entropy(probs.row(i));
    const double gap = h - rho;
    if (std::abs(gap) < margin) continue;  // inside the confidence band
    acc -= std::abs(gap);
    // d(-|H - rho|)/dp_k = -sign(gap) * dH/dp_k, dH/dp_k = -(ln p_k + 1).
    const double sign = gap >= 0.0 ? 1.0 : -1.0;
    for (Eigen::Index k = 0; k < probs.cols(); ++k) {
      const double p = probs(i, k);
      if (p > 0.0) {
        out.grad(i, k) = sign * (std::log(p) + 1.0) / static_cast<double>(batch);
      }
    }
  }
  out.value = acc / static_cast<double>(batch);
  return out;
}

double pair_weight(int pseudo_i, int pseudo_j, double conf_i, double conf_j) {
  if (conf_i < 0.0 || conf_i > 1.0 || conf_j < 0.0 || conf_j > 1.0) {
    throw InvalidArgument("pair_weight: confidence outside [0, 1]");
  }
  return pseudo_i == pseudo_j ? std::min(conf_i, conf_j) : 0.0;
}

LossGrad cl_loss(const MatrixXd& probs, const std::vector<int>& pseudo_labels,
                 const VectorXd& confidences) {
  const auto batch = probs.rows();
  require(batch >= 1, "cl_loss: empty batch");
  require(static_cast<Eigen::Index>(pseudo_labels.size()) == batch &&
              confidences.size() == batch,
          "cl_loss: pseudo-labels/confidences not aligned with batch");

  LossGrad out;
  out.grad = MatrixXd::Zero(batch, probs.cols());
  double acc = 0.0;
  const double scale = 1.0 / (static_cast<double>(batch) * static_cast<double>(batch));
  for (Eigen::Index i = 0; i < batch; ++i) {
    for (Eigen::Index j = i + 1; j < batch; ++j) {
      const double w = pair_weight(pseudo_labels[static_cast<std::size_t>(i)],
                                   pseudo_labels[static_cast<std::size_t>(j)],
                                   confidences(i), confidences(j));
      if (w == 0.0) continue;
      const VectorXd pi = probs.row(i).transpose();
      const VectorXd pj = probs.row(j).transpose();
      // Ordered pairs (i,j) and (j,i) contribute equally.
      acc += 2.0 * w * sym_kl(pi, pj);
      out.grad.row(i) += (2.0 * w * scale) * sym_kl_grad_first(pi, pj).transpose();
      out.grad.row(j) += (2.0 * w * scale) * sym_kl_grad_first(pj, pi).transpose();
    }
  }
  out.value = acc * scale;
  return out;
}

LossGrad nc_loss(const MatrixXd& features, const std::vector<int>& bank_indices,
                 const MemoryBank& bank, const PrototypeClassifier& prototypes,
                 double tau) {
  require(tau > 0.0, "nc_loss: tau must be positive");
  const auto batch = features.rows();
  require(batch > 0, "nc_loss: empty batch");
  require(static_cast<Eigen::Index>(bank_indices.size()) == batch,
          "nc_loss: bank indices not aligned with batch");
  const int bank_size = bank.size();
  for (const int idx : bank_indices) {
    if (idx < 0 || idx >= bank_size) {
      throw InvalidArgument("nc_loss: bank index " + std::to_string(idx) + " out of range");
    }
  }
  require(features.cols() == bank.feature_dim() &&
              features.cols() == prototypes.weight.rows(),
          "nc_loss: feature dim mismatch");

  const auto total = static_cast<Eigen::Index>(bank_size) + prototypes.weight.cols();
  // F = [bank | prototypes], d x (N_t + K).
  MatrixXd lookup(features.cols(), total);
  lookup.leftCols(bank_size) = bank.store();
  lookup.rightCols(prototypes.weight.cols()) = prototypes.weight;

  MatrixXd scores = features * lookup / tau;  // batch x total

  LossGrad out;
  double acc = 0.0;
  MatrixXd d_scores = MatrixXd::Zero(batch, total);
  for (Eigen::Index i = 0; i < batch; ++i) {
    VectorXd row = scores.row(i).transpose();
    const Eigen::Index self = bank_indices[static_cast<std::size_t>(i)];
    // Exclude the sample's own bank column from the softmax support.
    double peak = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < total; ++j) {
      if (j != self && row(j) > peak) peak = row(j);
    }
    VectorXd p = VectorXd::Zero(total);
    double z = 0.0;
    for (Eigen::Index j = 0; j < total; ++j) {
      if (j == self) continue;
      p(j) = std::exp(row(j) - peak);
      z += p(j);
    }
    p /= z;
    double h = 0.0;
    for (Eigen::Index j = 0; j < total; ++j) {
      if (p(j) > 0.0) h -= p(j) * std::log(p(j));
    }
    acc += h;
    // dH/ds_j = -p_j (ln p_j + H); the excluded column stays at zero.
    for (Eigen::Index j = 0; j < total; ++j) {
      if (p(j) > 0.0) d_scores(i, j) = -p(j) * (std::log(p(j)) + h);
    }
  }
  const double inv_batch = 1.0 / static_cast<double>(batch);
  out.value = acc * inv_batch;
  out.grad = (d_scores * lookup.transpose()) * (inv_batch / tau);
  return out;
}

}  // namespace omega
