#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omega/data.hpp"
#include "omega/training.hpp"

namespace omega {

inline constexpr const char* kVersion = "omega-0.1.0";

struct TaskConfig {
  enum class Type { kSynthetic, kCsv };
  Type type = Type::kSynthetic;
  SyntheticTaskSpec synthetic;
  std::string source_csv;
  std::string target_csv;
  int csv_num_shared = 0;
};

struct ModelConfig {
  std::vector<int> widths{64, 64};
  int embed_dim = 32;
};

struct EvalConfig {
  int cadence = 1;
  std::string out_dir = "runs/default";
  std::string checkpoint;  // input for the eval command
};

struct SweepConfig {
  std::vector<double> r;
  std::vector<double> omega;
  std::vector<std::uint64_t> seeds;
};

struct ExperimentConfig {
  TaskConfig task;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  SweepConfig sweep;

  // Serialized resolved configuration (valid config-file content).
  std::string to_json_string() const;
};

// Strict loader: unknown keys anywhere are an error, every TrainConfig
// invariant is enforced, and dotted --set overrides (train.r=0.2) are applied
// before extraction. When the batch size is overridden without an explicit
// learning rate, base_lr is rescaled by sqrt(batch/32).
ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides = {},
                             std::optional<std::uint64_t> seed_override = {});

// Same, starting from config text instead of a file.
ExperimentConfig parse_config(const std::string& text,
                              const std::vector<std::string>& overrides = {},
                              std::optional<std::uint64_t> seed_override = {});

// The generate/train/eval data resolution shared by the commands.
TaskPair resolve_task(const ExperimentConfig& cfg);

}  // namespace omega
