#include "omega/commands.hpp"

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "omega/checkpoint.hpp"

namespace omega {

namespace fs = std::filesystem;

namespace {

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw DataError("write failed for " + path);
}

std::vector<long> class_histogram(const DomainDataset& ds, int upto) {
  std::vector<long> counts(static_cast<std::size_t>(upto), 0);
  for (const int y : ds.labels) {
    if (y >= 1 && y <= upto) ++counts[static_cast<std::size_t>(y - 1)];
  }
  return counts;
}

// One row per epoch; `with_wall` selects between the full history log and
// the deterministic metrics log.
std::string epoch_csv(const std::vector<EpochRecord>& history, int num_classes,
                      bool with_wall) {
  std::ostringstream out;
  out << "epoch,ce,nc,es,cl,total,lr";
  if (with_wall) out << ",wall_ms";
  for (int k = 1; k <= num_classes; ++k) out << ",q_" << k;
  out << ",os_star,unk,hos\n";
  for (const EpochRecord& rec : history) {
    out << rec.epoch << ',' << fmt("%.10g", rec.losses.ce) << ',' << fmt("%.10g", rec.losses.nc)
        << ',' << fmt("%.10g", rec.losses.es) << ',' << fmt("%.10g", rec.losses.cl) << ','
        << fmt("%.10g", rec.losses.total) << ',' << fmt("%.10g", rec.lr);
    if (with_wall) out << ',' << fmt("%.3f", rec.wall_ms);
    for (Eigen::Index k = 0; k < rec.thresholds.size(); ++k) {
      out << ',' << fmt("%.10g", rec.thresholds(k));
    }
    if (rec.metrics) {
      out << ',' << fmt("%.6f", 100.0 * rec.metrics->os_star) << ','
          << fmt("%.6f", 100.0 * rec.metrics->unk) << ','
          << fmt("%.6f", 100.0 * rec.metrics->hos);
    } else {
      out << ",,,";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

void cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir, bool force) {
  if (cfg.task.type != TaskConfig::Type::kSynthetic) {
    throw ConfigError("generate: config must describe a synthetic task");
  }
  const fs::path dir(out_dir);
  if (fs::exists(dir) && !fs::is_empty(dir) && !force) {
    throw DataError("generate: output directory " + out_dir +
                    " is not empty (pass --force to overwrite)");
  }
  fs::create_directories(dir);

  TaskPair task = make_synthetic_task(cfg.task.synthetic, cfg.train.seed);
  write_feature_csv((dir / "source.csv").string(), task.source);
  write_feature_csv((dir / "target.csv").string(), task.target);

  const SyntheticTaskSpec& s = cfg.task.synthetic;
  const std::vector<long> src_counts = class_histogram(task.source, s.num_shared_classes);
  const std::vector<long> tgt_counts = class_histogram(task.target, s.num_shared_classes + 1);

  nlohmann::json manifest;
  manifest["seed"] = cfg.train.seed;
  manifest["num_shared_classes"] = s.num_shared_classes;
  manifest["num_unknown_classes"] = s.num_unknown_classes;
  manifest["input_dim"] = s.input_dim;
  manifest["omega_requested"] = s.imbalance;
  long src_max = 0, src_min = std::numeric_limits<long>::max();
  for (const long c : src_counts) {
    src_max = std::max(src_max, c);
    src_min = std::min(src_min, c);
  }
  manifest["omega_realized_source"] =
      static_cast<double>(src_max) / static_cast<double>(std::max(src_min, 1L));
  manifest["openness_requested"] = s.openness;
  manifest["openness_realized"] = openness(task.target);
  manifest["source_class_counts"] = src_counts;
  manifest["target_class_counts"] = tgt_counts;
  write_text((dir / "manifest.json").string(), manifest.dump(2) + "\n");
}

TrainOutcome cmd_train(const ExperimentConfig& cfg, bool dump_clusters) {
  TaskPair task = resolve_task(cfg);

  SeedStream streams(cfg.train.seed);
  Rng init = streams.stream("init");
  Model model = make_model(static_cast<int>(task.source.inputs.cols()), cfg.model.widths,
                           cfg.model.embed_dim, task.source.num_shared_classes,
                           cfg.train.tau, init);

  const fs::path dir(cfg.eval.out_dir);
  fs::create_directories(dir);

  TrainOutcome outcome;
  outcome.run_dir = dir.string();
  write_text((dir / "config.json").string(), cfg.to_json_string());
  write_text((dir / "run_info.txt").string(),
             std::string("version ") + kVersion + "\nseed " +
                 std::to_string(cfg.train.seed) + "\n");

  FitOptions opts;
  opts.eval_cadence = cfg.eval.cadence;
  if (dump_clusters) opts.cluster_dump_dir = (dir / "clusters").string();
  outcome.fit = fit(model, task.source, task.target, cfg.train, opts);

  const int num_classes = task.source.num_shared_classes;
  outcome.history_csv = (dir / "history.csv").string();
  outcome.metrics_csv = (dir / "metrics.csv").string();
  write_text(outcome.history_csv, epoch_csv(outcome.fit.history, num_classes, true));
  write_text(outcome.metrics_csv, epoch_csv(outcome.fit.history, num_classes, false));

  outcome.checkpoint_path = (dir / "model.ckpt").string();
  save_checkpoint(outcome.checkpoint_path, model, cfg.train,
                  outcome.fit.thresholds.thresholds);

  if (!outcome.fit.history.empty() && outcome.fit.history.back().metrics) {
    outcome.final_metrics = outcome.fit.history.back().metrics;
    write_text((dir / "report.txt").string(), outcome.final_metrics->to_key_value());
  }
  return outcome;
}

MetricsReport cmd_eval(const ExperimentConfig& cfg) {
  if (cfg.eval.checkpoint.empty()) {
    throw ConfigError("eval: set eval.checkpoint to the model file");
  }
  Checkpoint ckpt = load_checkpoint(cfg.eval.checkpoint);
  TaskPair task = resolve_task(cfg);
  MetricsReport report = evaluate(ckpt.model, ckpt.thresholds, task.target);

  const fs::path dir(cfg.eval.out_dir);
  fs::create_directories(dir);
  write_text((dir / "eval_report.txt").string(), report.to_key_value());
  return report;
}

void cmd_ablate(const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> seeds = cfg.sweep.seeds;
  if (seeds.empty()) seeds.push_back(cfg.train.seed);

  struct Variant {
    const char* name;
    double ratio;
    double eta2;
  };
  const Variant variants[] = {
      {"baseline", 0.0, 0.0},
      {"no_cl", cfg.train.ratio, 0.0},
      {"no_me", 0.0, cfg.train.eta2},
      {"full", cfg.train.ratio, cfg.train.eta2},
  };

  const fs::path dir(cfg.eval.out_dir);
  fs::create_directories(dir);

  std::vector<AblationSeries> table;
  std::exception_ptr first_failure;
  for (const Variant& v : variants) {
    AblationSeries series;
    series.name = v.name;
    for (const std::uint64_t seed : seeds) {
      ExperimentConfig run_cfg = cfg;
      run_cfg.train.ratio = v.ratio;
      run_cfg.train.eta2 = v.eta2;
      run_cfg.train.seed = seed;
      run_cfg.eval.cadence = std::max(1, cfg.eval.cadence);
      run_cfg.eval.out_dir =
          (dir / v.name / ("seed_" + std::to_string(seed))).string();
      try {
        TrainOutcome outcome = cmd_train(run_cfg);
        std::vector<MetricsReport> epochs;
        for (const EpochRecord& rec : outcome.fit.history) {
          if (rec.metrics) epochs.push_back(*rec.metrics);
        }
        series.seed_series.push_back(std::move(epochs));
      } catch (...) {
        if (!first_failure) first_failure = std::current_exception();
        std::cerr << "ablate: run " << v.name << "/seed_" << seed << " failed\n";
      }
    }
    if (!series.seed_series.empty()) table.push_back(std::move(series));
  }

  const std::string rendered = format_ablation_table(compare_ablations(table));
  write_text((dir / "ablation.csv").string(), rendered);
  std::cout << rendered;

  // Optional sensitivity sweeps on the full variant.
  auto sweep_one = [&](const std::string& label, const std::vector<double>& values,
                       auto apply) {
    if (values.empty()) return;
    std::ostringstream out;
    out << label << ",seed,final_hos\n";
    for (const double value : values) {
      for (const std::uint64_t seed : seeds) {
        ExperimentConfig run_cfg = cfg;
        apply(run_cfg, value);
        run_cfg.train.seed = seed;
        run_cfg.eval.cadence = std::max(1, cfg.eval.cadence);
        run_cfg.eval.out_dir = (dir / ("sweep_" + label) /
                                (label + "_" + fmt("%.4g", value) + "_seed_" +
                                 std::to_string(seed)))
                                   .string();
        try {
          TrainOutcome outcome = cmd_train(run_cfg);
          double final_hos = 0.0;
          if (outcome.final_metrics) final_hos = outcome.final_metrics->hos;
          out << fmt("%.4g", value) << ',' << seed << ',' << fmt("%.6f", 100.0 * final_hos)
              << '\n';
        } catch (...) {
          if (!first_failure) first_failure = std::current_exception();
          std::cerr << "ablate: sweep " << label << "=" << value << " seed " << seed
                    << " failed\n";
        }
      }
    }
    write_text((dir / ("sensitivity_" + label + ".csv")).string(), out.str());
  };
  sweep_one("r", cfg.sweep.r,
            [](ExperimentConfig& c, double v) { c.train.ratio = v; });
  sweep_one("omega", cfg.sweep.omega,
            [](ExperimentConfig& c, double v) { c.task.synthetic.imbalance = v; });

  if (first_failure) std::rethrow_exception(first_failure);
}

}  // namespace omega
