#pragma once

#include <optional>
#include <string>

#include "omega/config.hpp"
#include "omega/evaluation.hpp"
#include "omega/training.hpp"

namespace omega {

// Library-level command implementations; the CLI binary is a thin wrapper so
// the same paths are exercised in-process by the test suites.

struct TrainOutcome {
  std::string run_dir;
  std::string checkpoint_path;
  std::string history_csv;
  std::string metrics_csv;
  FitResult fit;
  std::optional<MetricsReport> final_metrics;
};

// Writes source.csv, target.csv and manifest.json. Refuses a non-empty
// output directory unless `force`.
void cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir, bool force);

// Full training run into cfg.eval.out_dir: config copy, run info, per-epoch
// history.csv (includes wall_ms) and metrics.csv (deterministic), final
// checkpoint and report.
TrainOutcome cmd_train(const ExperimentConfig& cfg, bool dump_clusters = false);

// Evaluates cfg.eval.checkpoint against the config's target data.
MetricsReport cmd_eval(const ExperimentConfig& cfg);

// Runs {full, no_me (r=0), no_cl (eta2=0), baseline (both)} x sweep.seeds and
// writes the comparison table; optional sweep.r / sweep.omega sensitivity
// tables. Partial results are kept if a run fails.
void cmd_ablate(const ExperimentConfig& cfg);

}  // namespace omega
