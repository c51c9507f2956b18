#include "siedob/app.hpp"

#include <filesystem>

#include "siedob/errors.hpp"
#include "siedob/pipeline.hpp"

namespace siedob {

namespace fs = std::filesystem;

std::string make_toy_workspace(const std::string& dir, int train_count, int test_count, std::uint64_t seed) {
  const auto root = fs::absolute(dir);
  write_toy_dataset((root / "train").string(), train_count, 64, seed);
  write_toy_dataset((root / "test").string(), test_count, 64, seed + 100000);
  auto config = toy_config((root / "train").string(), root.string());
  config.test_dir = (root / "test").string();
  const auto path = (root / "config.json").string();
  save_config(path, config);
  return path;
}

std::pair<PipelineConfig, ClassInfo> load_finalized(const std::string& config_path) {
  auto config = load_config(config_path);
  auto classes = load_classes(config.classes_path);
  config.finalize(classes);
  return {std::move(config), std::move(classes)};
}

std::vector<LossReport> train_stage(const std::string& config_path, Stage stage, int steps,
                                    const std::function<void(const LossReport&)>& on_log) {
  auto [config, classes] = load_finalized(config_path);
  auto data = load_dataset(config.train_dir, classes);
  auto nets = Networks::create(config, classes);
  auto available = load_checkpoint(config.checkpoint_dir, nets, config, classes);
  reset_stage(nets, stage, config, classes);
  for (const auto& tag : stage_tags(stage)) available.erase(tag);
  Trainer trainer(config, classes, std::move(data), std::move(nets), available);
  return trainer.run(stage, steps, true, on_log);
}

StyleBank build_bank(const std::string& config_path) {
  auto [config, classes] = load_finalized(config_path);
  auto nets = Networks::create(config, classes);
  const auto available = load_checkpoint(config.checkpoint_dir, nets, config, classes);
  if (!available.count("E_s")) throw StageError("building the style bank needs a trained E_s checkpoint (train OBJECT_GEN)");
  const auto data = load_dataset(config.train_dir, classes);
  const auto path = (fs::path(config.checkpoint_dir) / kBankName).string();
  auto bank = build_style_bank(data, nets.e_s, config, path);
  save_style_bank(path, bank);
  return bank;
}

EvalReport evaluate_config(const std::string& config_path, std::uint64_t seed) {
  const auto pipeline = Pipeline::from_checkpoint(load_config(config_path));
  const auto test = load_dataset(pipeline.config().test_dir, pipeline.classes());
  auto pyramid = make_pyramid(pipeline.config());
  return evaluate(pipeline, test, pyramid, seed);
}

}  // namespace siedob
