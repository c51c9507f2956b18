#pragma once

#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "siedob/checkpoint.hpp"
#include "siedob/config.hpp"
#include "siedob/dataset.hpp"
#include "siedob/objectives.hpp"

namespace siedob {

/// Result of one alternating critic/generator update.
struct LossReport {
  Stage stage = Stage::Background;
  int step = 0;
  std::map<std::string, double> parts;  // unweighted generator loss parts
  double total = 0.0;                   // weighted generator objective
  double critic = 0.0;                  // critic hinge loss, 0 when adversarial terms are off
};

/// Recomputes `report.total` from its parts with the objective of its stage.
double recompute_total(const LossReport& report, const LossWeights& weights);

FeaturePyramid make_pyramid(const PipelineConfig& config);

/// Replaces the networks of `stage` in `nets` with freshly initialized ones.
void reset_stage(Networks& nets, Stage stage, const PipelineConfig& config, const ClassInfo& classes);

/// Staged trainer. Each stage owns its generator/critic optimizers and random stream, so runs
/// are reproducible per stage and never touch other stages' weights.
class Trainer {
 public:
  /// `available` lists the tags holding trained weights; FUSION needs the background and object
  /// generators (and E_s) among them.
  Trainer(PipelineConfig config, ClassInfo classes, std::vector<Sample> train, Networks nets,
          std::set<std::string> available = {});
  ~Trainer();

  LossReport step(Stage stage);

  /// Runs `steps` updates (the config's count when negative). Rows go to `<log_dir>/<STAGE>.csv`
  /// every `log_every` steps and after the last one; the stage's networks are checkpointed every
  /// `checkpoint_every` steps and at the end when `checkpoint` is set. Returns the logged reports.
  std::vector<LossReport> run(Stage stage, int steps = -1, bool checkpoint = true,
                              const std::function<void(const LossReport&)>& on_log = {});

  Networks& networks() { return nets_; }
  FeaturePyramid& pyramid() { return pyramid_; }
  const PipelineConfig& config() const { return config_; }
  const ClassInfo& classes() const { return classes_; }
  std::set<std::string>& available() { return available_; }

 private:
  struct ObjectItem;
  struct StageState;

  StageState& state(Stage stage);
  const std::vector<ObjectItem>& objects();
  LossReport step_background(StageState& s);
  LossReport step_inpaint(StageState& s);
  LossReport step_object_gen(StageState& s);
  LossReport step_fusion(StageState& s);
  MaskKind draw_mask_kind(std::mt19937_64& rng) const;

  PipelineConfig config_;
  ClassInfo classes_;
  std::vector<Sample> train_;
  Networks nets_;
  std::set<std::string> available_;
  FeaturePyramid pyramid_{nullptr};
  std::map<Stage, std::unique_ptr<StageState>> stages_;
  std::unique_ptr<std::vector<ObjectItem>> objects_;
};

}  // namespace siedob
