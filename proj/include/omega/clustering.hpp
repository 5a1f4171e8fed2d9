#pragma once

#include <Eigen/Dense>
#include <vector>

#include "omega/numerics.hpp"
#include "omega/rng.hpp"

namespace omega {

// Per-target-sample store of the most recent unit-norm features. Column i
// always belongs to target sample i; updates replace columns outright.
class MemoryBank {
 public:
  MemoryBank() = default;
  MemoryBank(int feature_dim, int num_samples)
      : store_(MatrixXd::Zero(feature_dim, num_samples)),
        initialized_(static_cast<std::size_t>(num_samples), false) {}

  int feature_dim() const { return static_cast<int>(store_.rows()); }
  int size() const { return static_cast<int>(store_.cols()); }

  // features holds one unit-norm row per batch sample, aligned with indices.
  void update(const std::vector<int>& indices, const MatrixXd& features);

  const MatrixXd& store() const { return store_; }
  VectorXd column(int i) const;
  bool is_initialized(int i) const { return initialized_.at(static_cast<std::size_t>(i)); }
  int initialized_count() const;

 private:
  MatrixXd store_;  // d x N_t
  std::vector<bool> initialized_;
};

struct ClusterModel {
  MatrixXd centroids;            // d x Z
  std::vector<int> assignment;   // bank column -> cluster index
  std::vector<double> objective; // per-Lloyd-iteration sum of squared distances

  int num_clusters() const { return static_cast<int>(centroids.cols()); }
};

// Lloyd's algorithm with k-means++ seeding over the bank columns. Euclidean
// distances; stops when assignments are stable or max_iters is reached; an
// emptied cluster is re-seeded to the worst-fit point.
ClusterModel kmeans(const MemoryBank& bank, int num_clusters, Rng& rng, int max_iters = 100);

// Nearest centroid by Euclidean distance, ties broken by lowest index.
int assign_cluster(const VectorXd& feature, const ClusterModel& clusters);

// Extended pseudo-labels for a target batch: known samples keep the open-set
// prediction k* with confidence max_k p_k; unknown samples are labeled
// K+1+z by nearest cluster with confidence H(p)/ln(K).
struct PseudoLabels {
  std::vector<int> labels;  // in {1..K} or {K+1 .. K+Z}
  VectorXd confidence;      // in [0, 1]
};
PseudoLabels extended_pseudo_labels(const MatrixXd& probs, const MatrixXd& features,
                                    const VectorXd& thresholds,
                                    const ClusterModel& clusters);

}  // namespace omega
