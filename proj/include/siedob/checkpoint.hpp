#pragma once

#include <torch/torch.h>

#include <memory>
#include <set>
#include <string>
#include <vector>

#include "siedob/background.hpp"
#include "siedob/config.hpp"
#include "siedob/fusion.hpp"
#include "siedob/object_gen.hpp"

namespace siedob {

enum class Stage { Background, ObjectInpaint, ObjectGen, Fusion };

Stage parse_stage(const std::string& name);
const char* to_string(Stage stage);

/// Checkpoint tags of the networks a stage trains.
std::vector<std::string> stage_tags(Stage stage);
/// Every network tag, in a fixed order.
const std::vector<std::string>& all_tags();

/// All sub-networks of the system. Each is initialized from its own seed derived from the run
/// seed and its tag, so creating or training one never perturbs another.
struct Networks {
  BackgroundGenerator g_b{nullptr};
  PatchCritic d_g{nullptr};    // global critic over image ⊕ segmentation
  PatchCritic d_bap{nullptr};  // boundary-anchored patch critic
  ObjectInpainter g_oi{nullptr};
  PatchCritic d_obj_inpaint{nullptr};
  ObjectGenerator g_og{nullptr};
  StyleEncoder e_s{nullptr};
  StyleEncoder e_s_prime{nullptr};
  PatchCritic d_obj_gen{nullptr};
  FusionNet f_net{nullptr};
  PatchCritic d_f{nullptr};

  static Networks create(const PipelineConfig& config, const ClassInfo& classes);
  std::shared_ptr<torch::nn::Module> module(const std::string& tag) const;
  void set_training(bool on);
};

/// Hex SHA-256 over every parameter and buffer (names, shapes and bytes).
std::string module_checksum(const torch::nn::Module& module);

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kBankName = "bank.sbnk";

/// Writes `<dir>/<tag>.bin` for each tag (raw little-endian tensor bytes back to back) and
/// merges the entries into `<dir>/manifest.json`, which records tensor names, shapes, dtypes and
/// byte offsets together with the architecture hash and the full config.
void save_checkpoint(const std::string& dir, const Networks& nets, const std::vector<std::string>& tags,
                     const PipelineConfig& config, const ClassInfo& classes);

/// Loads every network present in the manifest into `nets` and returns the loaded tags.
/// Throws ConfigError when the manifest's architecture hash differs from `config`'s and IoError
/// for missing or truncated files. A missing manifest yields an empty set.
std::set<std::string> load_checkpoint(const std::string& dir, Networks& nets, const PipelineConfig& config,
                                      const ClassInfo& classes);

/// Architecture hash stored in the manifest, or empty when there is none.
std::string checkpoint_hash(const std::string& dir);

}  // namespace siedob
