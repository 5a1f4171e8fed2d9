#pragma once

#include <string>

#include "omega/model.hpp"
#include "omega/training.hpp"

namespace omega {

inline constexpr const char* kCheckpointMagic = "IOSDA-CKPT-1";

// Textual key-value checkpoint: architecture + run metadata, the training
// hyperparameters, every parameter array, the batch-norm running statistics
// and the final per-class thresholds. Values are printed with 17 significant
// digits so a reload is bit-exact and repeated runs are byte-identical.
void save_checkpoint(const std::string& path, Model& model, const TrainConfig& cfg,
                     const VectorXd& thresholds);

struct Checkpoint {
  Model model;
  TrainConfig train;
  VectorXd thresholds;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace omega
