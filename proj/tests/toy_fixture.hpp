#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "siedob/config.hpp"
#include "siedob/dataset.hpp"

namespace siedob::testing {

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("siedob_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string str(const std::string& child = "") const { return child.empty() ? path.string() : (path / child).string(); }
};

/// 32-pixel toy scenes with networks small enough for sub-second training steps.
inline PipelineConfig tiny_config(const TempDir& dir, int samples = 4, bool double_precision = false) {
  const auto data = dir.str("data");
  if (!std::filesystem::exists(data)) write_toy_dataset(data, samples, 32, 11);
  auto c = toy_config(data, dir.str());
  c.scene_size = 32;
  c.crop_size = 16;
  c.double_precision = double_precision;
  c.batch_size = 2;
  c.background = {8, 2, 1, 8, 32};
  c.object = {16, 2, 2, 8, 8};
  c.fusion = {8, 2};
  c.critic_width = 8;
  c.patches_explicit = false;
  c.log_every = 1;
  c.checkpoint_every = 1000;
  c.finalize(load_classes(c.classes_path));
  return c;
}

}  // namespace siedob::testing
