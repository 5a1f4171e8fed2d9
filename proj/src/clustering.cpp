#include "omega/clustering.hpp"

#include <cmath>
#include <limits>
#include <unordered_set>

#include "omega/thresholding.hpp"

namespace omega {

void MemoryBank::update(const std::vector<int>& indices, const MatrixXd& features) {
  require(static_cast<Eigen::Index>(indices.size()) == features.rows(),
          "bank_update: indices not aligned with feature rows");
  require(features.cols() == store_.rows(), "bank_update: feature dim mismatch");
  std::unordered_set<int> seen;
  for (const int idx : indices) {
    if (idx < 0 || idx >= size()) {
      throw InvalidArgument("bank_update: index " + std::to_string(idx) + " out of range");
    }
    if (!seen.insert(idx).second) {
      throw InvalidArgument("bank_update: duplicate index " + std::to_string(idx));
    }
  }
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const auto row = features.row(static_cast<Eigen::Index>(j));
    if (std::abs(row.norm() - 1.0) > 1e-6) {
      throw InvalidArgument("bank_update: feature rows must be unit-norm");
    }
    store_.col(indices[j]) = row.transpose();
    initialized_[static_cast<std::size_t>(indices[j])] = true;
  }
}

VectorXd MemoryBank::column(int i) const {
  require(i >= 0 && i < size(), "MemoryBank::column: index out of range");
  return store_.col(i);
}

int MemoryBank::initialized_count() const {
  int n = 0;
  for (const bool b : initialized_) n += b ? 1 : 0;
  return n;
}

namespace {

// Squared distance of every bank column to its assigned centroid.
double assignment_objective(const MatrixXd& points, const MatrixXd& centroids,
                            const std::vector<int>& assignment) {
  double obj = 0.0;
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    obj += (points.col(i) - centroids.col(assignment[static_cast<std::size_t>(i)]))
               .squaredNorm();
  }
  return obj;
}

std::vector<int> assign_all(const MatrixXd& points, const MatrixXd& centroids) {
  std::vector<int> assignment(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index i = 0; i < points.cols(); ++i) {
    int best = 0;
    double best_d = (points.col(i) - centroids.col(0)).squaredNorm();
    for (Eigen::Index z = 1; z < centroids.cols(); ++z) {
      const double d = (points.col(i) - centroids.col(z)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(z);
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
  }
  return assignment;
}

}  // namespace

ClusterModel kmeans(const MemoryBank& bank, int num_clusters, Rng& rng, int max_iters) {
  require(num_clusters >= 1, "kmeans: need at least one cluster");
  require(max_iters >= 1, "kmeans: max_iters must be positive");
  if (num_clusters > bank.initialized_count()) {
    throw InvalidArgument("kmeans: " + std::to_string(num_clusters) +
                          " clusters exceed the " + std::to_string(bank.initialized_count()) +
                          " initialized bank columns");
  }
  const MatrixXd& points = bank.store();
  const auto n = points.cols();

  // k-means++ seeding.
  MatrixXd centroids(points.rows(), num_clusters);
  centroids.col(0) = points.col(rng.below(n));
  VectorXd best_sq = VectorXd::Constant(n, std::numeric_limits<double>::infinity());
  for (int z = 1; z < num_clusters; ++z) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double d = (points.col(i) - centroids.col(z - 1)).squaredNorm();
      if (d < best_sq(i)) best_sq(i) = d;
    }
    const double total = best_sq.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double u = rng.uniform01() * total;
      double cum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += best_sq(i);
        if (u < cum) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = rng.below(n);  // all points coincide with chosen centroids
    }
    centroids.col(z) = points.col(pick);
  }

  ClusterModel model;
  model.centroids = centroids;
  model.assignment = assign_all(points, model.centroids);
  model.objective.push_back(assignment_objective(points, model.centroids, model.assignment));

  for (int iter = 0; iter < max_iters; ++iter) {
    // Update step: each centroid becomes the mean of its members.
    MatrixXd sums = MatrixXd::Zero(points.rows(), num_clusters);
    std::vector<long> sizes(static_cast<std::size_t>(num_clusters), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int z = model.assignment[static_cast<std::size_t>(i)];
      sums.col(z) += points.col(i);
      ++sizes[static_cast<std::size_t>(z)];
    }
    for (int z = 0; z < num_clusters; ++z) {
      if (sizes[static_cast<std::size_t>(z)] > 0) {
        model.centroids.col(z) = sums.col(z) / static_cast<double>(sizes[static_cast<std::size_t>(z)]);
      } else {
        // Re-seed an emptied cluster to the worst-fit point.
        Eigen::Index worst = 0;
        double worst_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double d =
              (points.col(i) -
               model.centroids.col(model.assignment[static_cast<std::size_t>(i)]))
                  .squaredNorm();
          if (d > worst_d) {
            worst_d = d;
            worst = i;
          }
        }
        model.centroids.col(z) = points.col(worst);
      }
    }

    std::vector<int> next = assign_all(points, model.centroids);
    model.objective.push_back(assignment_objective(points, model.centroids, next));
    const bool stable = next == model.assignment;
    model.assignment = std::move(next);
    if (stable) break;
  }
  return model;
}

int assign_cluster(const VectorXd& feature, const ClusterModel& clusters) {
  require(clusters.num_clusters() >= 1, "assign_cluster: empty cluster model");
  require(feature.size() == clusters.centroids.rows(), "assign_cluster: dim mismatch");
  int best = 0;
  double best_d = (feature - clusters.centroids.col(0)).squaredNorm();
  for (Eigen::Index z = 1; z < clusters.centroids.cols(); ++z) {
    const double d = (feature - clusters.centroids.col(z)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(z);
    }
  }
  return best;
}

PseudoLabels extended_pseudo_labels(const MatrixXd& probs, const MatrixXd& features,
                                    const VectorXd& thresholds,
                                    const ClusterModel& clusters) {
  require(probs.rows() == features.rows(), "extended_pseudo_labels: batch mismatch");
  const auto batch = probs.rows();
  const auto num_classes = static_cast<int>(probs.cols());
  const double log_k = std::log(static_cast<double>(num_classes));

  PseudoLabels out;
  out.labels.resize(static_cast<std::size_t>(batch));
  out.confidence = VectorXd::Zero(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const VectorXd p = probs.row(i).transpose();
    const int open = predict_open(p, thresholds);
    if (open <= num_classes) {
      out.labels[static_cast<std::size_t>(i)] = open;
      out.confidence(i) = p.maxCoeff();
    } else {
      const int z = assign_cluster(features.row(i).transpose(), clusters);
      out.labels[static_cast<std::size_t>(i)] = num_classes + 1 + z;
      out.confidence(i) = std::min(1.0, entropy(p) / log_k);
    }
  }
  return out;
}

}  // namespace omega
