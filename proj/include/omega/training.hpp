#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "omega/clustering.hpp"
#include "omega/data.hpp"
#include "omega/evaluation.hpp"
#include "omega/losses.hpp"
#include "omega/model.hpp"
#include "omega/rng.hpp"
#include "omega/thresholding.hpp"

namespace omega {

struct TrainConfig {
  double tau = 0.05;
  double eta1 = 0.05;
  double eta2 = 0.1;
  double margin = 0.5;       // confidence band half-width m
  double ratio = 0.15;       // moving-threshold ratio r
  double z_fraction = 0.5;   // clusters per shared class
  int batch_size = 32;
  double base_lr = 0.01;
  double momentum = 0.9;
  double lr_gamma = 10.0;    // decay factor gamma
  double lr_power = -0.75;   // decay exponent p
  int max_epochs = 30;
  std::uint64_t seed = 42;

  void validate() const;  // throws ConfigError
};

// base_lr * (1 + gamma * iter / 10000)^p.
double lr_at(long iteration, const TrainConfig& cfg);

struct OptimizerState {
  VectorXd velocity;
  long iteration = 0;
};

// Classical momentum: v <- momentum * v + g; theta <- theta - lr * v.
void sgd_step(Eigen::Ref<VectorXd> params, const VectorXd& grads, OptimizerState& state,
              double lr, double momentum);

// One mini-batch pair and everything the loss needs to know about it.
struct StepBatch {
  MatrixXd source_x;
  std::vector<int> source_y;
  MatrixXd target_x;
  std::vector<int> bank_indices;  // target samples' bank columns
};

struct StepResult {
  LossBreakdown losses;
  VectorXd grad;  // flat, aligned with Model::flatten_params()
  MatrixXd target_features;  // train-mode embeddings, feeds the bank update
  std::vector<int> pseudo_labels;
  VectorXd pseudo_confidence;
};

// Forward + loss assembly + (optionally) the full analytic gradient for one
// training step. Pseudo-labels are computed from the live predictions unless
// `fixed_pseudo` pins them (which the gradient checks rely on: the objective
// holds pseudo-labels, confidences and the bank constant).
StepResult training_step(Model& model, const StepBatch& batch, const MemoryBank& bank,
                         const ClusterModel& clusters, const VectorXd& thresholds,
                         const TrainConfig& cfg, const PseudoLabels* fixed_pseudo = nullptr,
                         bool want_grad = true);

struct TrainState {
  OptimizerState optimizer;
  Rng source_batches;
  Rng target_batches;
  SeedStream streams;
  int epoch = 0;

  explicit TrainState(const Model& model, const TrainConfig& cfg)
      : source_batches(SeedStream(cfg.seed).stream("batch/source")),
        target_batches(SeedStream(cfg.seed).stream("batch/target")),
        streams(cfg.seed) {
    optimizer.velocity = VectorXd::Zero(const_cast<Model&>(model).param_count());
  }
};

// One full pass: ceil(max(Ns, Nt)/batch_size) steps of sampled mini-batches,
// backprop, and per-iteration bank updates, then the cluster and threshold
// refreshes in that order. Returns the per-step mean loss breakdown.
LossBreakdown train_epoch(Model& model, const DomainDataset& source,
                          const DomainDataset& target, MemoryBank& bank,
                          ClusterModel& clusters, ThresholdState& thresholds,
                          const TrainConfig& cfg, TrainState& state);

struct EpochRecord {
  int epoch = 0;
  LossBreakdown losses;  // per-step means
  double lr = 0.0;       // at the first step of the epoch
  double wall_ms = 0.0;
  VectorXd thresholds;   // after the refresh
  std::optional<MetricsReport> metrics;
};

struct FitOptions {
  int eval_cadence = 1;  // epochs between evaluations; 0 disables
  std::string cluster_dump_dir;  // per-epoch assignment CSVs when non-empty
  std::function<void(const EpochRecord&)> on_epoch;
};

struct FitResult {
  std::vector<EpochRecord> history;
  ThresholdState thresholds;
  MemoryBank bank;
  ClusterModel clusters;
};

// Bank-initialization pass, post-init K-means, then max_epochs epochs.
FitResult fit(Model& model, const DomainDataset& source, const DomainDataset& target,
              const TrainConfig& cfg, const FitOptions& opts = {});

}  // namespace omega
