#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "siedob/background.hpp"
#include "siedob/dataset.hpp"
#include "siedob/fusion.hpp"
#include "siedob/masks.hpp"
#include "siedob/object_gen.hpp"
#include "siedob/objectives.hpp"
#include "siedob/patches.hpp"

namespace siedob {

struct OptimizerConfig {
  double lr_generator = 1e-4;
  double lr_discriminator = 4e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  /// G_OI learning rate; 0 = lr_generator.
  double lr_inpaint = 0.0;

  double inpaint_lr() const { return lr_inpaint > 0 ? lr_inpaint : lr_generator; }
  void validate() const;
};

struct StageSteps {
  int background = 3000;
  int object_inpaint = 2000;
  int object_gen = 2000;
  int fusion = 500;
};

/// Everything a run needs. Relative paths are resolved against the directory of the config file.
struct PipelineConfig {
  int scene_size = 64;
  int crop_size = 32;
  std::uint64_t seed = 1;
  bool double_precision = false;

  std::string train_dir;
  std::string test_dir;
  std::string classes_path;  // defaults to <train_dir>/classes.json
  std::string checkpoint_dir = "checkpoints";
  std::string log_dir = "logs";

  LossWeights loss;
  OptimizerConfig optimizer;
  int batch_size = 4;
  /// OBJECT_INPAINT batch; 0 = batch_size.
  int inpaint_batch_size = 0;
  StageSteps steps;
  int checkpoint_every = 500;
  int log_every = 10;
  /// Relative frequencies of the training mask generators.
  std::vector<std::pair<MaskKind, double>> mask_mix = {
      {MaskKind::FreeForm, 0.5}, {MaskKind::Extension, 0.25}, {MaskKind::Outpainting, 0.25}};
  MaskParams mask_params;
  double visibility_threshold = 0.05;
  /// Largest per-channel colour offset added to edited regions and objects of FUSION training
  /// composites; 0 trains on the raw composites.
  double fusion_jitter = 0.15;
  /// Adversarial terms can be switched off for overfit runs; the critics are then not stepped.
  bool adversarial = true;
  /// Train E'_s jointly with the object generator instead of keeping it at its seeded init.
  bool train_style_verifier = false;

  BackgroundGeneratorConfig background;
  ObjectGenConfig object;
  FusionConfig fusion;
  int critic_width = 32;
  PatchSpec patches;
  bool patches_explicit = false;  // otherwise scaled from scene_size by finalize()

  int pairs_per_image = 5;
  std::uint64_t pyramid_seed = 0x5eed;
  std::string pyramid_weights;  // optional pretrained taps

  /// Fills scene-size dependent defaults (patch spec, generator sizes) and validates.
  void finalize(const ClassInfo& classes);
  void validate() const;
  torch::Dtype dtype() const { return double_precision ? torch::kFloat64 : torch::kFloat32; }

  /// Hex SHA-256 of the architecture-relevant fields plus the class list. Checkpoints from a
  /// config with a different hash cannot be loaded.
  std::string architecture_hash(const ClassInfo& classes) const;
};

nlohmann::json to_json(const PipelineConfig& config);
/// Unknown keys are rejected so typos do not silently fall back to defaults.
PipelineConfig config_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
PipelineConfig load_config(const std::string& path);
void save_config(const std::string& path, const PipelineConfig& config);

/// Toy-scale defaults for the synthetic street scenes.
PipelineConfig toy_config(const std::string& data_dir, const std::string& work_dir);

std::string sha256_hex(const void* data, size_t size);

}  // namespace siedob
