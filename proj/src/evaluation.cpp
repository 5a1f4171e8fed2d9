#include "omega/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "omega/thresholding.hpp"

namespace omega {

double hos(double os_star, double unk) {
  if (os_star < 0.0 || os_star > 1.0 || unk < 0.0 || unk > 1.0) {
    throw InvalidArgument("hos: inputs must lie in [0, 1]");
  }
  const double denom = os_star + unk;
  if (denom == 0.0) return 0.0;
  return 2.0 * os_star * unk / denom;
}

double openness(const DomainDataset& target) {
  if (target.size() == 0) throw InvalidArgument("openness: empty target");
  const int unknown_label = target.num_shared_classes + 1;
  long unknown = 0;
  for (const int y : target.labels) {
    if (y == unknown_label) ++unknown;
  }
  return static_cast<double>(unknown) / static_cast<double>(target.size());
}

MetricsReport score_predictions(const std::vector<int>& predicted,
                                const std::vector<int>& ground_truth, int num_classes) {
  require(num_classes >= 1, "score_predictions: need at least one class");
  require(predicted.size() == ground_truth.size() && !predicted.empty(),
          "score_predictions: prediction/ground-truth size mismatch");
  const int unknown = num_classes + 1;

  MetricsReport report;
  report.confusion = Eigen::MatrixXi::Zero(unknown, unknown);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int t = ground_truth[i];
    const int p = predicted[i];
    require(t >= 1 && t <= unknown, "score_predictions: ground-truth label out of range");
    require(p >= 1 && p <= unknown, "score_predictions: predicted label out of range");
    ++report.confusion(t - 1, p - 1);
  }

  report.per_class_count.assign(static_cast<std::size_t>(unknown), 0);
  for (int c = 0; c < unknown; ++c) {
    report.per_class_count[static_cast<std::size_t>(c)] = report.confusion.row(c).sum();
  }

  const long unknown_count = report.per_class_count[static_cast<std::size_t>(num_classes)];
  long known_count = 0;
  for (int c = 0; c < num_classes; ++c) known_count += report.per_class_count[static_cast<std::size_t>(c)];
  if (known_count == 0) {
    throw MetricUndefined("evaluate: target contains no known-class samples");
  }
  if (unknown_count == 0) {
    throw MetricUndefined("evaluate: target contains no unknown samples");
  }

  report.per_class_acc = VectorXd::Constant(num_classes, std::numeric_limits<double>::quiet_NaN());
  double acc_sum = 0.0;
  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    const long n = report.per_class_count[static_cast<std::size_t>(c)];
    if (n == 0) {
      report.absent_classes.push_back(c + 1);
      continue;
    }
    const double acc = static_cast<double>(report.confusion(c, c)) / static_cast<double>(n);
    report.per_class_acc(c) = acc;
    acc_sum += acc;
    ++present;
  }
  report.os_star = acc_sum / static_cast<double>(present);
  report.unk = static_cast<double>(report.confusion(num_classes, num_classes)) /
               static_cast<double>(unknown_count);
  report.hos = hos(report.os_star, report.unk);
  report.openness = static_cast<double>(unknown_count) /
                    static_cast<double>(predicted.size());
  return report;
}

MetricsReport evaluate(Model& model, const VectorXd& thresholds, const DomainDataset& target) {
  require(!target.labels.empty(), "evaluate: target ground truth missing");
  require(target.num_shared_classes == model.classifier.num_classes(),
          "evaluate: class count mismatch between model and dataset");
  MatrixXd features = model.extractor.forward(target.inputs, Domain::kTarget, Mode::kEval);
  MatrixXd probs = model.classifier.classify_rows(features);
  const std::vector<int> predicted = predict_open_batch(probs, thresholds);
  return score_predictions(predicted, target.labels, target.num_shared_classes);
}

std::string MetricsReport::to_key_value() const {
  char buf[64];
  std::ostringstream out;
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    out << key << ' ' << buf << '\n';
  };
  put("os_star", os_star);
  put("unk", unk);
  put("hos", hos);
  put("openness", openness);
  for (Eigen::Index c = 0; c < per_class_acc.size(); ++c) {
    std::string key = "acc_class_" + std::to_string(c + 1);
    put(key.c_str(), per_class_acc(c));
  }
  out << "absent_classes";
  for (const int c : absent_classes) out << ' ' << c;
  out << '\n';
  return out.str();
}

std::vector<AblationRow> compare_ablations(const std::vector<AblationSeries>& variants) {
  std::vector<AblationRow> rows;
  std::size_t epochs = 0;
  bool epochs_known = false;
  for (const AblationSeries& variant : variants) {
    require(!variant.seed_series.empty(), "compare_ablations: variant with no runs");
    AblationRow row;
    row.name = variant.name;
    row.num_seeds = static_cast<int>(variant.seed_series.size());
    std::vector<double> finals;
    std::vector<double> bests;
    for (const auto& series : variant.seed_series) {
      require(!series.empty(), "compare_ablations: empty metric series");
      if (!epochs_known) {
        epochs = series.size();
        epochs_known = true;
      } else if (series.size() != epochs) {
        throw InvalidArgument("compare_ablations: epoch counts are not aligned");
      }
      double best = 0.0;
      for (const MetricsReport& r : series) best = std::max(best, r.hos);
      finals.push_back(series.back().hos);
      bests.push_back(best);
    }
    auto mean_std = [](const std::vector<double>& xs) {
      double mean = 0.0;
      for (const double x : xs) mean += x;
      mean /= static_cast<double>(xs.size());
      double var = 0.0;
      if (xs.size() > 1) {
        for (const double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(xs.size() - 1);
      }
      return std::pair<double, double>(mean, std::sqrt(var));
    };
    std::tie(row.final_hos_mean, row.final_hos_std) = mean_std(finals);
    std::tie(row.best_hos_mean, row.best_hos_std) = mean_std(bests);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  char buf[160];
  out << "variant,seeds,final_hos_mean,final_hos_std,best_hos_mean,best_hos_std\n";
  for (const AblationRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.4f,%.4f,%.4f,%.4f\n", r.name.c_str(),
                  r.num_seeds, 100.0 * r.final_hos_mean, 100.0 * r.final_hos_std,
                  100.0 * r.best_hos_mean, 100.0 * r.best_hos_std);
    out << buf;
  }
  return out.str();
}

}  // namespace omega
