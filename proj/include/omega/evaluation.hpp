#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "omega/data.hpp"
#include "omega/model.hpp"
#include "omega/numerics.hpp"

namespace omega {

// Open-set evaluation report. All rates live in [0, 1]; CSV writers multiply
// by 100. per_class_acc entries for known classes absent from the target are
// NaN and excluded from os_star.
struct MetricsReport {
  double os_star = 0.0;
  double unk = 0.0;
  double hos = 0.0;
  double openness = 0.0;
  VectorXd per_class_acc;             // length K
  std::vector<long> per_class_count;  // target ground-truth counts, length K+1
  Eigen::MatrixXi confusion;          // (K+1) x (K+1), rows = ground truth
  std::vector<int> absent_classes;    // known classes missing from the target

  std::string to_key_value() const;
};

// Harmonic mean of OS* and UNK; zero when both are zero.
double hos(double os_star, double unk);

// Fraction of target samples whose ground truth is the unknown class.
double openness(const DomainDataset& target);

// Scores a full set of open-set predictions (1-based labels, K+1 = unknown)
// against collapsed ground truth.
MetricsReport score_predictions(const std::vector<int>& predicted,
                                const std::vector<int>& ground_truth, int num_classes);

// Eval-mode forward pass over the target set followed by the open-set
// prediction rule under the given per-class thresholds.
MetricsReport evaluate(Model& model, const VectorXd& thresholds, const DomainDataset& target);

// Ablation comparison over per-epoch metric series.
struct AblationSeries {
  std::string name;
  std::vector<std::vector<MetricsReport>> seed_series;  // [seed][epoch]
};
struct AblationRow {
  std::string name;
  int num_seeds = 0;
  double final_hos_mean = 0.0;
  double final_hos_std = 0.0;
  double best_hos_mean = 0.0;
  double best_hos_std = 0.0;
};
std::vector<AblationRow> compare_ablations(const std::vector<AblationSeries>& variants);

std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace omega
