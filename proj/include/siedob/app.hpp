#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "siedob/metrics.hpp"
#include "siedob/style_bank.hpp"
#include "siedob/training.hpp"

namespace siedob {

/// Config-file level operations shared by the CLI and the Python module.

/// Writes `<dir>/train`, `<dir>/test` toy scenes and `<dir>/config.json`; returns the config path.
std::string make_toy_workspace(const std::string& dir, int train_count, int test_count, std::uint64_t seed);

/// Loads the config and its classes and fills the derived defaults.
std::pair<PipelineConfig, ClassInfo> load_finalized(const std::string& config_path);

/// Trains one stage from freshly initialized weights while keeping every other checkpointed
/// network. `steps` < 0 uses the configured count.
std::vector<LossReport> train_stage(const std::string& config_path, Stage stage, int steps = -1,
                                    const std::function<void(const LossReport&)>& on_log = {});

/// Encodes every training instance with the checkpointed E_s and writes `bank.sbnk` plus
/// thumbnails into the checkpoint directory. Throws StageError without a trained E_s.
StyleBank build_bank(const std::string& config_path);

/// Evaluates the checkpointed pipeline on the configured test set.
EvalReport evaluate_config(const std::string& config_path, std::uint64_t seed);

}  // namespace siedob
