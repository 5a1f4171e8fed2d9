#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "omega/numerics.hpp"

namespace omega {

enum class Role { kSource, kTarget };

struct DomainDataset {
  MatrixXd inputs;          // n x d_in
  std::vector<int> labels;  // 1-based; target ground truth collapses every
                            // private class to K+1 and is read by evaluation only
  Role role = Role::kSource;
  int num_shared_classes = 0;

  Eigen::Index size() const { return inputs.rows(); }
};

// Long-tailed class counts: count_k = round(n_max * omega^(-(k-1)/(K-1))),
// so the largest/smallest ratio is omega. `reversed` flips the rank order,
// which is how the source and target imbalance directions are opposed.
std::vector<long> pareto_counts(int num_classes, long n_max, double omega, bool reversed);

struct SyntheticTaskSpec {
  int num_shared_classes = 5;
  int num_unknown_classes = 3;
  int input_dim = 10;
  double imbalance = 10.0;  // omega = N_max / N_min within each domain
  double openness = 0.5;    // requested fraction of private target samples
  long source_n_max = 928;
  long target_n_max = 464;

  // Covariate shift between the domains: shared class means are rotated in
  // consecutive coordinate planes, translated, and the target spread scaled.
  double rotation_radians = 0.5235987755982988;  // 30 degrees
  double translation = 0.5;        // added to every coordinate
  double covariance_scale = 0.8;   // target std / source std
  double base_std = 0.25;
  double min_separation_factor = 2.2;  // times the largest class std
  double mean_spread = 1.0;        // class spacing as a multiple of the
                                   // separation floor; 1 packs classes at the floor
  double unknown_hardness = 0.8;   // 1 puts the hard private mean at the
                                   // minimum allowed separation, 0 keeps it far
};

struct TaskPair {
  DomainDataset source;
  DomainDataset target;
};

// Pure function of (spec, seed): Gaussian shared classes under covariate +
// label shift, plus private target classes (one "hard" mean near a shared
// class, the rest far).
TaskPair make_synthetic_task(const SyntheticTaskSpec& spec, std::uint64_t seed);

// CSV schema: header dim_0,...,dim_{d-1},label; one sample per row; labels
// are 1-based, and K+1 is permitted only in target files (held-out ground
// truth for evaluation).
DomainDataset load_feature_csv(const std::string& path, Role role, int num_shared_classes);
void write_feature_csv(const std::string& path, const DomainDataset& dataset);

}  // namespace omega
