#include "omega/training.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace omega {

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("train config: " + msg);
  };
  check(tau > 0.0, "tau must be positive");
  check(eta1 >= 0.0 && eta2 >= 0.0, "eta1/eta2 must be nonnegative");
  check(margin >= 0.0, "margin must be nonnegative");
  check(ratio >= 0.0 && ratio <= 0.5, "ratio must lie in [0, 0.5]");
  check(z_fraction > 0.0, "z_fraction must be positive");
  check(batch_size >= 2, "batch_size must be at least 2 (batch statistics)");
  check(base_lr > 0.0, "base_lr must be positive");
  check(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  check(lr_gamma >= 0.0, "lr_gamma must be nonnegative");
  check(max_epochs >= 0, "max_epochs must be nonnegative");
}

double lr_at(long iteration, const TrainConfig& cfg) {
  require(iteration >= 0, "lr_at: negative iteration");
  return cfg.base_lr *
         std::pow(1.0 + cfg.lr_gamma * static_cast<double>(iteration) / 10000.0, cfg.lr_power);
}

void sgd_step(Eigen::Ref<VectorXd> params, const VectorXd& grads, OptimizerState& state,
              double lr, double momentum) {
  if (params.size() != grads.size() || state.velocity.size() != params.size()) {
    throw InvalidArgument("sgd_step: parameter/gradient/velocity shape mismatch");
  }
  state.velocity = momentum * state.velocity + grads;
  params -= lr * state.velocity;
  ++state.iteration;
}

StepResult training_step(Model& model, const StepBatch& batch, const MemoryBank& bank,
                         const ClusterModel& clusters, const VectorXd& thresholds,
                         const TrainConfig& cfg, const PseudoLabels* fixed_pseudo,
                         bool want_grad) {
  ForwardCache cache_source, cache_target;
  MatrixXd feat_s =
      model.extractor.forward(batch.source_x, Domain::kSource, Mode::kTrain, &cache_source);
  MatrixXd feat_t =
      model.extractor.forward(batch.target_x, Domain::kTarget, Mode::kTrain, &cache_target);
  MatrixXd probs_s = model.classifier.classify_rows(feat_s);
  MatrixXd probs_t = model.classifier.classify_rows(feat_t);

  const int num_classes = model.classifier.num_classes();
  const double rho = 0.5 * std::log(static_cast<double>(num_classes));

  LossGrad ce = ce_loss(probs_s, batch.source_y);
  LossGrad nc = nc_loss(feat_t, batch.bank_indices, bank, model.classifier, cfg.tau);
  LossGrad es = es_loss(probs_t, rho, cfg.margin);
  PseudoLabels pseudo = fixed_pseudo
                            ? *fixed_pseudo
                            : extended_pseudo_labels(probs_t, feat_t, thresholds, clusters);
  LossGrad cl = cl_loss(probs_t, pseudo.labels, pseudo.confidence);

  StepResult out;
  out.losses = total_loss(ce.value, nc.value, es.value, cl.value, cfg.eta1, cfg.eta2);
  out.target_features = feat_t;
  out.pseudo_labels = std::move(pseudo.labels);
  out.pseudo_confidence = std::move(pseudo.confidence);

  if (want_grad) {
    // dTotal/d(target probs); the nc term bypasses the classifier and lands
    // on the target features directly.
    MatrixXd d_probs_t = cfg.eta1 * es.grad + cfg.eta2 * cl.grad;
    PrototypeClassifier::Backprop bp_t =
        model.classifier.backward(feat_t, probs_t, d_probs_t);
    PrototypeClassifier::Backprop bp_s = model.classifier.backward(feat_s, probs_s, ce.grad);
    MatrixXd d_feat_t = bp_t.d_features + cfg.eta1 * nc.grad;

    VectorXd grad_extractor = model.extractor.backward(cache_source, bp_s.d_features);
    grad_extractor += model.extractor.backward(cache_target, d_feat_t);

    MatrixXd d_weight = bp_s.d_weight + bp_t.d_weight;
    out.grad = VectorXd(model.param_count());
    out.grad.head(grad_extractor.size()) = grad_extractor;
    out.grad.tail(d_weight.size()) =
        Eigen::Map<const VectorXd>(d_weight.data(), d_weight.size());
  }
  return out;
}

namespace {

std::string index_list(const std::vector<int>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ' ';
    out << v[i];
  }
  return out.str();
}

void gather_batch(const DomainDataset& ds, const std::vector<int>& idx, MatrixXd& x,
                  std::vector<int>* labels) {
  x.resize(static_cast<Eigen::Index>(idx.size()), ds.inputs.cols());
  if (labels) labels->resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = ds.inputs.row(idx[i]);
    if (labels) (*labels)[i] = ds.labels[static_cast<std::size_t>(idx[i])];
  }
}

}  // namespace

LossBreakdown train_epoch(Model& model, const DomainDataset& source,
                          const DomainDataset& target, MemoryBank& bank,
                          ClusterModel& clusters, ThresholdState& thresholds,
                          const TrainConfig& cfg, TrainState& state) {
  const auto n_source = source.size();
  const auto n_target = target.size();
  require(n_source > 0 && n_target > 0, "train_epoch: empty dataset");

  const long steps =
      (std::max(n_source, n_target) + cfg.batch_size - 1) / cfg.batch_size;
  const int num_classes = model.classifier.num_classes();

  LossBreakdown mean;
  VectorXd params = model.flatten_params();
  for (long step = 0; step < steps; ++step) {
    StepBatch batch;
    const std::vector<int> src_idx =
        state.source_batches.sample_with_replacement(static_cast<int>(n_source), cfg.batch_size);
    batch.bank_indices =
        state.target_batches.sample_with_replacement(static_cast<int>(n_target), cfg.batch_size);
    gather_batch(source, src_idx, batch.source_x, &batch.source_y);
    gather_batch(target, batch.bank_indices, batch.target_x, nullptr);

    const double lr = lr_at(state.optimizer.iteration, cfg);
    StepResult result =
        training_step(model, batch, bank, clusters, thresholds.thresholds, cfg);

    if (!std::isfinite(result.losses.total)) {
      throw NumericError("train_epoch: non-finite loss at epoch " +
                         std::to_string(state.epoch) + " step " + std::to_string(step) +
                         "; source batch [" + index_list(src_idx) + "] target batch [" +
                         index_list(batch.bank_indices) + "]");
    }

    sgd_step(params, result.grad, state.optimizer, lr, cfg.momentum);
    model.set_flat_params(params);

    // Refresh the touched bank columns with this step's target features
    // (first occurrence wins for indices drawn twice).
    std::unordered_set<int> seen;
    std::vector<int> unique_idx;
    std::vector<Eigen::Index> unique_rows;
    for (std::size_t j = 0; j < batch.bank_indices.size(); ++j) {
      if (seen.insert(batch.bank_indices[j]).second) {
        unique_idx.push_back(batch.bank_indices[j]);
        unique_rows.push_back(static_cast<Eigen::Index>(j));
      }
    }
    MatrixXd rows(static_cast<Eigen::Index>(unique_rows.size()), result.target_features.cols());
    for (std::size_t j = 0; j < unique_rows.size(); ++j) {
      rows.row(static_cast<Eigen::Index>(j)) = result.target_features.row(unique_rows[j]);
    }
    bank.update(unique_idx, rows);

    mean.ce += result.losses.ce;
    mean.nc += result.losses.nc;
    mean.es += result.losses.es;
    mean.cl += result.losses.cl;
  }

  const double inv = 1.0 / static_cast<double>(steps);
  mean = total_loss(mean.ce * inv, mean.nc * inv, mean.es * inv, mean.cl * inv, cfg.eta1,
                    cfg.eta2);

  // Epoch-end refreshes, clusters first, then thresholds.
  const int z = std::max(1L, std::lround(cfg.z_fraction * num_classes));
  Rng kmeans_rng = state.streams.stream("kmeans/" + std::to_string(state.epoch));
  clusters = kmeans(bank, z, kmeans_rng);

  MatrixXd eval_features = model.extractor.forward(target.inputs, Domain::kTarget, Mode::kEval);
  MatrixXd eval_probs = model.classifier.classify_rows(eval_features);
  ClassEntropies stats = class_entropies(eval_probs);
  thresholds.class_entropy = stats.mean_entropy;
  thresholds.class_counts = stats.counts;
  thresholds.thresholds =
      update_thresholds(stats.mean_entropy, stats.counts, cfg.ratio, num_classes);
  thresholds.ratio = cfg.ratio;

  return mean;
}

namespace {

void dump_cluster_assignment(const std::string& dir, int epoch, const ClusterModel& clusters) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/clusters_epoch_" + std::to_string(epoch) + ".csv";
  std::ofstream out(path);
  if (!out) throw DataError("cluster dump: cannot open " + path);
  out << "sample_index,cluster\n";
  for (std::size_t i = 0; i < clusters.assignment.size(); ++i) {
    out << i << ',' << clusters.assignment[i] << '\n';
  }
}

}  // namespace

FitResult fit(Model& model, const DomainDataset& source, const DomainDataset& target,
              const TrainConfig& cfg, const FitOptions& opts) {
  cfg.validate();
  require(source.size() > 0 && target.size() > 0, "fit: empty dataset");
  require(source.inputs.cols() == target.inputs.cols(), "fit: input dim mismatch");
  require(source.num_shared_classes == model.classifier.num_classes(),
          "fit: dataset classes do not match the classifier");

  const int num_classes = model.classifier.num_classes();

  FitResult result;
  result.bank = MemoryBank(model.extractor.embed_dim(), static_cast<int>(target.size()));
  {
    // Bank initialization: one eval-mode pass over the whole target set.
    MatrixXd features = model.extractor.forward(target.inputs, Domain::kTarget, Mode::kEval);
    std::vector<int> all(static_cast<std::size_t>(target.size()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    result.bank.update(all, features);
  }

  TrainState state(model, cfg);
  const int z = std::max(1L, std::lround(cfg.z_fraction * num_classes));
  Rng kmeans_rng = state.streams.stream("kmeans/init");
  result.clusters = kmeans(result.bank, z, kmeans_rng);
  result.thresholds = ThresholdState::initial(num_classes, cfg.ratio);

  const bool can_eval = opts.eval_cadence > 0 && !target.labels.empty();
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    state.epoch = epoch;
    const double lr = lr_at(state.optimizer.iteration, cfg);
    const auto start = std::chrono::steady_clock::now();
    LossBreakdown losses = train_epoch(model, source, target, result.bank, result.clusters,
                                       result.thresholds, cfg, state);
    const auto stop = std::chrono::steady_clock::now();

    EpochRecord record;
    record.epoch = epoch;
    record.losses = losses;
    record.lr = lr;
    record.wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(stop - start)
            .count();
    record.thresholds = result.thresholds.thresholds;
    if (can_eval && epoch % opts.eval_cadence == 0) {
      record.metrics = evaluate(model, result.thresholds.thresholds, target);
    }
    if (!opts.cluster_dump_dir.empty()) {
      dump_cluster_assignment(opts.cluster_dump_dir, epoch, result.clusters);
    }
    if (opts.on_epoch) opts.on_epoch(record);
    result.history.push_back(std::move(record));
  }
  return result;
}

}  // namespace omega
