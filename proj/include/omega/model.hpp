#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

#include "omega/numerics.hpp"
#include "omega/rng.hpp"

namespace omega {

enum class Domain { kSource = 0, kTarget = 1 };
enum class Mode { kTrain, kEval };

struct DenseLayer {
  MatrixXd weight;  // out x in
  VectorXd bias;
};

// Batch normalization with domain-specific running statistics. The affine
// scale/shift is shared across domains; only the statistics are per-domain,
// and a batch from one domain never touches the other domain's statistics.
struct DomainBatchNorm {
  VectorXd gamma;
  VectorXd beta;
  std::array<VectorXd, 2> running_mean;
  std::array<VectorXd, 2> running_var;
  double momentum = 0.1;
  double epsilon = 1e-5;
};

// Everything backward() needs from the matching forward() call.
struct ForwardCache {
  bool valid = false;
  Mode mode = Mode::kEval;
  Domain domain = Domain::kSource;
  std::vector<MatrixXd> inputs;      // dense-layer inputs, one per layer
  std::vector<MatrixXd> normalized;  // batch-norm outputs before affine
  std::vector<VectorXd> inv_std;     // 1/sqrt(var + eps) used per layer
  std::vector<Eigen::ArrayXXd> relu_mask;  // hidden layers only
  MatrixXd pre_norm;  // embedding before row normalization
  VectorXd inv_norm;  // per-row reciprocal norms
  MatrixXd output;    // unit-norm embedding rows
};

// A named slice of the parameter (or statistics) storage, used by the
// optimizer, the finite-difference harness and the checkpoint writer.
struct ParamBlock {
  std::string name;
  double* data = nullptr;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

// Perceptron feature extractor: each dense layer is followed by
// domain-specific batch normalization; hidden layers use a rectifier; the
// final embedding is L2-normalized row-wise.
class FeatureExtractor {
 public:
  FeatureExtractor() = default;
  FeatureExtractor(int input_dim, const std::vector<int>& hidden_widths,
                   int embed_dim, Rng& init);

  // In train mode, normalizes by the batch statistics of `domain` and folds
  // them into that domain's running statistics; in eval mode uses the stored
  // running statistics. Output rows are unit-norm.
  MatrixXd forward(const MatrixXd& batch, Domain domain, Mode mode,
                   ForwardCache* cache = nullptr);

  // Parameter gradients for the recorded forward pass, flattened in this
  // extractor's block order. `grad_output` is dLoss/d(embedding rows).
  VectorXd backward(const ForwardCache& cache, const MatrixXd& grad_output) const;

  int input_dim() const { return input_dim_; }
  int embed_dim() const { return embed_dim_; }
  std::size_t layer_count() const { return layers_.size(); }

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DomainBatchNorm>& norms() { return norms_; }
  const std::vector<DomainBatchNorm>& norms() const { return norms_; }

  std::vector<ParamBlock> param_blocks();
  std::vector<ParamBlock> state_blocks();
  Eigen::Index param_count() const;

 private:
  int input_dim_ = 0;
  int embed_dim_ = 0;
  std::vector<DenseLayer> layers_;
  std::vector<DomainBatchNorm> norms_;
};

// Linear classifier whose weight columns act as class prototypes for
// unit-norm features; predictions are a temperature softmax over the
// prototype similarities.
struct PrototypeClassifier {
  MatrixXd weight;  // d x K, one column per shared class
  double tau = 0.05;

  int num_classes() const { return static_cast<int>(weight.cols()); }
  int feature_dim() const { return static_cast<int>(weight.rows()); }

  ProbDist classify(const VectorXd& feature) const;

  // Batch of unit-norm feature rows -> probability rows.
  MatrixXd classify_rows(const MatrixXd& features) const;

  struct Backprop {
    MatrixXd d_weight;    // d x K
    MatrixXd d_features;  // n x d
  };
  // grad_probs is dLoss/d(probability rows).
  Backprop backward(const MatrixXd& features, const MatrixXd& probs,
                    const MatrixXd& grad_probs) const;
};

struct Model {
  FeatureExtractor extractor;
  PrototypeClassifier classifier;

  Eigen::Index param_count() const;
  VectorXd flatten_params() const;
  void set_flat_params(const VectorXd& theta);
  std::vector<ParamBlock> param_blocks();
  std::vector<ParamBlock> state_blocks();
};

Model make_model(int input_dim, const std::vector<int>& hidden_widths,
                 int embed_dim, int num_classes, double tau, Rng& init);

}  // namespace omega
