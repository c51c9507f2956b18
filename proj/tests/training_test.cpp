#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "siedob/checkpoint.hpp"
#include "siedob/errors.hpp"
#include "siedob/objectives.hpp"
#include "siedob/training.hpp"
#include "toy_fixture.hpp"

using namespace siedob;
using siedob::testing::TempDir;
using siedob::testing::tiny_config;
namespace fs = std::filesystem;

namespace {

constexpr Stage kStages[] = {Stage::Background, Stage::ObjectInpaint, Stage::ObjectGen, Stage::Fusion};

std::set<std::string> every_tag() { return {all_tags().begin(), all_tags().end()}; }

Trainer make_trainer(const PipelineConfig& config, std::set<std::string> available = every_tag()) {
  auto classes = load_classes(config.classes_path);
  auto data = load_dataset(config.train_dir, classes);
  auto nets = Networks::create(config, classes);
  return Trainer(config, classes, std::move(data), std::move(nets), std::move(available));
}

std::map<std::string, std::string> checksums(const Networks& nets) {
  std::map<std::string, std::string> out;
  for (const auto& tag : all_tags()) out[tag] = module_checksum(*nets.module(tag));
  return out;
}

size_t csv_rows(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n == 0 ? 0 : n - 1;
}

}  // namespace

TEST_CASE("every stage produces finite losses whose total matches the objective") {
  TempDir dir("train_total");
  auto trainer = make_trainer(tiny_config(dir));
  const auto weights = trainer.config().loss;
  for (auto stage : kStages) {
    CAPTURE(to_string(stage));
    for (int i = 0; i < 2; ++i) {
      const auto r = trainer.step(stage);
      CHECK(std::isfinite(r.total));
      CHECK(std::isfinite(r.critic));
      for (const auto& [name, v] : r.parts) CHECK(std::isfinite(v));
      CHECK(recompute_total(r, weights) == doctest::Approx(r.total).epsilon(1e-6));
    }
  }
}

TEST_CASE("stage loss parts are the documented ones") {
  TempDir dir("train_parts");
  auto trainer = make_trainer(tiny_config(dir));
  auto keys = [](const LossReport& r) {
    std::set<std::string> k;
    for (const auto& [name, v] : r.parts) k.insert(name);
    return k;
  };
  CHECK(keys(trainer.step(Stage::Background)) == std::set<std::string>{"gan_global", "gan_local", "l1", "perceptual"});
  CHECK(keys(trainer.step(Stage::ObjectInpaint)) == std::set<std::string>{"gan", "l1", "perceptual"});
  CHECK(keys(trainer.step(Stage::ObjectGen)) == std::set<std::string>{"gan", "gan_style", "l1", "perceptual",
                                                                       "perceptual_style", "scc", "scc_style"});
  CHECK(keys(trainer.step(Stage::Fusion)) == std::set<std::string>{"gan", "perceptual"});
}

TEST_CASE("double-precision training is deterministic") {
  TempDir dir("train_det");
  const auto config = tiny_config(dir, 4, true);
  auto a = make_trainer(config);
  auto b = make_trainer(config);
  for (auto stage : kStages) {
    for (int i = 0; i < 2; ++i) {
      const auto ra = a.step(stage), rb = b.step(stage);
      CHECK(ra.total == rb.total);
      CHECK(ra.critic == rb.critic);
      CHECK(ra.parts == rb.parts);
    }
  }
  CHECK(checksums(a.networks()) == checksums(b.networks()));
}

TEST_CASE("training a stage leaves other stages' weights untouched") {
  TempDir dir("train_iso");
  auto config = tiny_config(dir);
  for (auto stage : kStages) {
    CAPTURE(to_string(stage));
    auto trainer = make_trainer(config);
    const auto before = checksums(trainer.networks());
    trainer.run(stage, 2, false);
    const auto after = checksums(trainer.networks());
    const auto own = stage_tags(stage);
    for (const auto& tag : all_tags()) {
      const bool mine = std::find(own.begin(), own.end(), tag) != own.end();
      CAPTURE(tag);
      // The frozen style verifier is the one network of its stage that must not move.
      if (mine && tag != "E_s_prime") CHECK(before.at(tag) != after.at(tag));
      else CHECK(before.at(tag) == after.at(tag));
    }
  }
}

TEST_CASE("zero steps checkpoints the initialization") {
  TempDir dir("train_zero");
  auto config = tiny_config(dir);
  auto trainer = make_trainer(config);
  const auto init = checksums(trainer.networks());
  CHECK(trainer.run(Stage::Background, 0).empty());
  const auto classes = load_classes(config.classes_path);
  auto other = config;
  other.seed = 1234;
  auto loaded = Networks::create(other, classes);
  const auto tags = load_checkpoint(config.checkpoint_dir, loaded, config, classes);
  CHECK(tags == std::set<std::string>{"G_B", "D_G", "D_BAP"});
  const auto now = checksums(loaded);
  for (const auto& tag : tags) CHECK(now.at(tag) == init.at(tag));
}

TEST_CASE("CSV holds one row per logged step") {
  TempDir dir("train_csv");
  auto config = tiny_config(dir);
  config.log_every = 2;
  config.checkpoint_every = 2;
  auto trainer = make_trainer(config);
  const auto logged = trainer.run(Stage::ObjectInpaint, 5);
  REQUIRE(logged.size() == 3);  // steps 2, 4 and the final 5
  CHECK(logged.back().step == 5);
  const auto csv = (fs::path(config.log_dir) / "OBJECT_INPAINT.csv").string();
  CHECK(csv_rows(csv) == logged.size());
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "step,total,critic,gan,l1,perceptual");
  CHECK(fs::exists(fs::path(config.checkpoint_dir) / "G_OI.bin"));
  CHECK(trainer.available().count("G_OI"));
}

TEST_CASE("fusion refuses to train without upstream checkpoints") {
  TempDir dir("train_fusion");
  auto trainer = make_trainer(tiny_config(dir), {"G_B", "G_OI"});
  CHECK_THROWS_AS(trainer.step(Stage::Fusion), StageError);
}

TEST_CASE("dataset and config problems surface before any step") {
  TempDir dir("train_bad");
  auto config = tiny_config(dir);
  auto classes = load_classes(config.classes_path);
  auto data = load_dataset(config.train_dir, classes);
  CHECK_THROWS_AS(Trainer(config, classes, {}, Networks::create(config, classes)), ConfigError);
  auto wrong = config;
  wrong.scene_size = 64;
  wrong.finalize(classes);
  CHECK_THROWS_AS(Trainer(wrong, classes, data, Networks::create(wrong, classes)), ConfigError);
}

TEST_CASE("non-adversarial runs report zero GAN terms") {
  TempDir dir("train_noadv");
  auto config = tiny_config(dir);
  config.adversarial = false;
  auto trainer = make_trainer(config);
  const auto r = trainer.step(Stage::Background);
  CHECK(r.parts.at("gan_global") == 0.0);
  CHECK(r.parts.at("gan_local") == 0.0);
  CHECK(r.critic == 0.0);
}

TEST_CASE("reset_stage reinitializes only that stage") {
  TempDir dir("train_reset");
  auto config = tiny_config(dir);
  auto trainer = make_trainer(config);
  const auto init = checksums(trainer.networks());
  trainer.run(Stage::Background, 1, false);
  trainer.run(Stage::ObjectInpaint, 1, false);
  auto nets = trainer.networks();
  reset_stage(nets, Stage::Background, config, load_classes(config.classes_path));
  const auto now = checksums(nets);
  CHECK(now.at("G_B") == init.at("G_B"));
  CHECK(now.at("G_OI") != init.at("G_OI"));
}
