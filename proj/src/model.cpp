#include "omega/model.hpp"

#include <cmath>

namespace omega {

namespace {

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], filled column-major so the
// draw order is pinned down.
void init_uniform(MatrixXd& m, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      m(r, c) = rng.uniform(-bound, bound);
    }
  }
}

}  // namespace

FeatureExtractor::FeatureExtractor(int input_dim, const std::vector<int>& hidden_widths,
                                   int embed_dim, Rng& init)
    : input_dim_(input_dim), embed_dim_(embed_dim) {
  require(input_dim > 0 && embed_dim > 0, "FeatureExtractor: dims must be positive");
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (const int w : hidden_widths) {
    require(w > 0, "FeatureExtractor: hidden width must be positive");
    dims.push_back(w);
  }
  dims.push_back(embed_dim);

  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    DenseLayer layer;
    layer.weight = MatrixXd(out, in);
    init_uniform(layer.weight, in, init);
    layer.bias = VectorXd(out);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index k = 0; k < layer.bias.size(); ++k) {
      layer.bias(k) = init.uniform(-bound, bound);
    }
    layers_.push_back(std::move(layer));

    DomainBatchNorm bn;
    bn.gamma = VectorXd::Ones(out);
    bn.beta = VectorXd::Zero(out);
    for (int d = 0; d < 2; ++d) {
      bn.running_mean[d] = VectorXd::Zero(out);
      bn.running_var[d] = VectorXd::Ones(out);
    }
    norms_.push_back(std::move(bn));
  }
}

MatrixXd FeatureExtractor::forward(const MatrixXd& batch, Domain domain, Mode mode,
                                   ForwardCache* cache) {
  if (batch.rows() == 0) throw InvalidArgument("extract: empty batch");
  if (batch.cols() != input_dim_) {
    throw InvalidArgument("extract: batch has " + std::to_string(batch.cols()) +
                          " columns, expected " + std::to_string(input_dim_));
  }
  if (mode == Mode::kTrain && batch.rows() < 2) {
    throw InvalidArgument("extract: train-mode batch must contain at least 2 samples");
  }

  const int dom = static_cast<int>(domain);
  const auto n = static_cast<double>(batch.rows());
  if (cache) {
    *cache = ForwardCache{};
    cache->mode = mode;
    cache->domain = domain;
  }

  MatrixXd x = batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    DomainBatchNorm& bn = norms_[l];
    if (cache) cache->inputs.push_back(x);

    MatrixXd z = (x * layer.weight.transpose()).rowwise() + layer.bias.transpose();

    VectorXd mean, inv_std;
    if (mode == Mode::kTrain) {
      mean = z.colwise().mean();
      MatrixXd centered = z.rowwise() - mean.transpose();
      VectorXd var = centered.array().square().colwise().sum() / n;
      inv_std = (var.array() + bn.epsilon).rsqrt();
      bn.running_mean[dom] = (1.0 - bn.momentum) * bn.running_mean[dom] + bn.momentum * mean;
      bn.running_var[dom] = (1.0 - bn.momentum) * bn.running_var[dom] + bn.momentum * var;
      z = centered;
    } else {
      mean = bn.running_mean[dom];
      inv_std = (bn.running_var[dom].array() + bn.epsilon).rsqrt();
      z = z.rowwise() - mean.transpose();
    }
    MatrixXd normalized = z.array().rowwise() * inv_std.transpose().array();
    if (cache) {
      cache->normalized.push_back(normalized);
      cache->inv_std.push_back(inv_std);
    }

    MatrixXd activated =
        (normalized.array().rowwise() * bn.gamma.transpose().array()).rowwise() +
        bn.beta.transpose().array();
    if (l + 1 < layers_.size()) {
      Eigen::ArrayXXd mask = (activated.array() > 0.0).cast<double>();
      if (cache) cache->relu_mask.push_back(mask);
      x = activated.array() * mask;
    } else {
      x = std::move(activated);
    }
  }

  VectorXd norms = x.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (norms(i) <= 1e-12) throw NumericError("extract: degenerate embedding row");
  }
  VectorXd inv_norm = norms.cwiseInverse();
  MatrixXd out = x.array().colwise() * inv_norm.array();

  if (cache) {
    cache->pre_norm = std::move(x);
    cache->inv_norm = std::move(inv_norm);
    cache->output = out;
    cache->valid = true;
  }
  return out;
}

VectorXd FeatureExtractor::backward(const ForwardCache& cache, const MatrixXd& grad_output) const {
  if (!cache.valid) throw StateError("backward called without a recorded forward pass");
  if (grad_output.rows() != cache.output.rows() || grad_output.cols() != cache.output.cols()) {
    throw InvalidArgument("backward: upstream gradient shape mismatch");
  }

  // Through the row normalization: dY = (dOut - (out . dOut) out) / ||y||.
  VectorXd dot = (cache.output.array() * grad_output.array()).rowwise().sum();
  MatrixXd grad = grad_output - (cache.output.array().colwise() * dot.array()).matrix();
  grad = grad.array().colwise() * cache.inv_norm.array();

  VectorXd flat(param_count());
  Eigen::Index offset = flat.size();
  const auto n = static_cast<double>(cache.output.rows());

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const DenseLayer& layer = layers_[li];
    const DomainBatchNorm& bn = norms_[li];

    if (li + 1 < layers_.size()) {
      grad = grad.array() * cache.relu_mask[li];
    }

    const MatrixXd& normalized = cache.normalized[li];
    VectorXd d_gamma = (grad.array() * normalized.array()).colwise().sum();
    VectorXd d_beta = grad.colwise().sum();
    MatrixXd d_normalized = grad.array().rowwise() * bn.gamma.transpose().array();

    MatrixXd dz;
    if (cache.mode == Mode::kTrain) {
      // Batch statistics depend on z, so the mean/variance terms re-enter.
      VectorXd col_sum = d_normalized.colwise().sum();
      VectorXd dot_norm = (d_normalized.array() * normalized.array()).colwise().sum();
      dz = n * d_normalized;
      dz.rowwise() -= col_sum.transpose();
      dz -= (normalized.array().rowwise() * dot_norm.transpose().array()).matrix();
      dz = dz.array().rowwise() * (cache.inv_std[li].transpose().array() / n);
    } else {
      dz = d_normalized.array().rowwise() * cache.inv_std[li].transpose().array();
    }

    MatrixXd d_weight = dz.transpose() * cache.inputs[li];
    VectorXd d_bias = dz.colwise().sum();
    grad = dz * layer.weight;

    // Fill in reverse block order: weight, bias, gamma, beta per layer.
    offset -= bn.beta.size();
    flat.segment(offset, bn.beta.size()) = d_beta;
    offset -= bn.gamma.size();
    flat.segment(offset, bn.gamma.size()) = d_gamma;
    offset -= layer.bias.size();
    flat.segment(offset, layer.bias.size()) = d_bias;
    offset -= d_weight.size();
    flat.segment(offset, d_weight.size()) =
        Eigen::Map<const VectorXd>(d_weight.data(), d_weight.size());
  }
  return flat;
}

std::vector<ParamBlock> FeatureExtractor::param_blocks() {
  std::vector<ParamBlock> blocks;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string tag = "fc" + std::to_string(l);
    blocks.push_back({tag + ".weight", layers_[l].weight.data(),
                      layers_[l].weight.rows(), layers_[l].weight.cols()});
    blocks.push_back({tag + ".bias", layers_[l].bias.data(), layers_[l].bias.size(), 1});
    const std::string bn = "bn" + std::to_string(l);
    blocks.push_back({bn + ".gamma", norms_[l].gamma.data(), norms_[l].gamma.size(), 1});
    blocks.push_back({bn + ".beta", norms_[l].beta.data(), norms_[l].beta.size(), 1});
  }
  return blocks;
}

std::vector<ParamBlock> FeatureExtractor::state_blocks() {
  std::vector<ParamBlock> blocks;
  const char* dom_tag[2] = {"source", "target"};
  for (std::size_t l = 0; l < norms_.size(); ++l) {
    const std::string bn = "bn" + std::to_string(l);
    for (int d = 0; d < 2; ++d) {
      blocks.push_back({bn + ".running_mean." + dom_tag[d], norms_[l].running_mean[d].data(),
                        norms_[l].running_mean[d].size(), 1});
      blocks.push_back({bn + ".running_var." + dom_tag[d], norms_[l].running_var[d].data(),
                        norms_[l].running_var[d].size(), 1});
    }
  }
  return blocks;
}

Eigen::Index FeatureExtractor::param_count() const {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    total += layers_[l].weight.size() + layers_[l].bias.size();
    total += norms_[l].gamma.size() + norms_[l].beta.size();
  }
  return total;
}

ProbDist PrototypeClassifier::classify(const VectorXd& feature) const {
  if (feature.size() != weight.rows()) {
    throw InvalidArgument("classify: feature dim " + std::to_string(feature.size()) +
                          " does not match prototype dim " + std::to_string(weight.rows()));
  }
  if (std::abs(feature.norm() - 1.0) > 1e-6) {
    throw InvalidArgument("classify: feature must be unit-norm");
  }
  return softmax_tau(weight.transpose() * feature, tau);
}

MatrixXd PrototypeClassifier::classify_rows(const MatrixXd& features) const {
  if (features.cols() != weight.rows()) {
    throw InvalidArgument("classify_rows: feature dim mismatch");
  }
  return softmax_tau_rows(features * weight, tau);
}

PrototypeClassifier::Backprop PrototypeClassifier::backward(
    const MatrixXd& features, const MatrixXd& probs, const MatrixXd& grad_probs) const {
  MatrixXd d_scores = softmax_vjp_rows(probs, grad_probs) / tau;
  Backprop out;
  out.d_weight = features.transpose() * d_scores;
  out.d_features = d_scores * weight.transpose();
  return out;
}

Eigen::Index Model::param_count() const {
  return extractor.param_count() + classifier.weight.size();
}

std::vector<ParamBlock> Model::param_blocks() {
  std::vector<ParamBlock> blocks = extractor.param_blocks();
  blocks.push_back({"classifier.weight", classifier.weight.data(),
                    classifier.weight.rows(), classifier.weight.cols()});
  return blocks;
}

std::vector<ParamBlock> Model::state_blocks() { return extractor.state_blocks(); }

VectorXd Model::flatten_params() const {
  auto& self = const_cast<Model&>(*this);
  VectorXd flat(param_count());
  Eigen::Index offset = 0;
  for (const ParamBlock& b : self.param_blocks()) {
    flat.segment(offset, b.size()) = Eigen::Map<const VectorXd>(b.data, b.size());
    offset += b.size();
  }
  return flat;
}

void Model::set_flat_params(const VectorXd& theta) {
  require(theta.size() == param_count(), "set_flat_params: size mismatch");
  Eigen::Index offset = 0;
  for (const ParamBlock& b : param_blocks()) {
    Eigen::Map<VectorXd>(b.data, b.size()) = theta.segment(offset, b.size());
    offset += b.size();
  }
}

Model make_model(int input_dim, const std::vector<int>& hidden_widths, int embed_dim,
                 int num_classes, double tau, Rng& init) {
  require(num_classes >= 1, "make_model: need at least one class");
  require(tau > 0.0, "make_model: tau must be positive");
  Model m;
  m.extractor = FeatureExtractor(input_dim, hidden_widths, embed_dim, init);
  m.classifier.tau = tau;
  m.classifier.weight = MatrixXd(embed_dim, num_classes);
  init_uniform(m.classifier.weight, embed_dim, init);
  // Prototypes start small so the initial predictions are near-uniform
  // (entropy ~ ln K). At this embedding width the unscaled init would make
  // every sample confident from the first step, and the entropy-separation
  // band would then freeze unknown samples on the confident side.
  m.classifier.weight *= 0.01;
  return m;
}

}  // namespace omega
