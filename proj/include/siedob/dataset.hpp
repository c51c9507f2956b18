#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "siedob/scene.hpp"

namespace siedob {

/// Contents of `classes.json`: {"names": [...], "num_classes": L, "foreground": [indices]}.
struct ClassInfo {
  std::vector<std::string> names;
  int num_classes = 0;
  std::vector<int> foreground;

  int index_of(const std::string& name) const;  // -1 when unknown
  void validate() const;
};

ClassInfo load_classes(const std::string& path);
void save_classes(const std::string& path, const ClassInfo& info);

struct Sample {
  std::string name;
  Image image;
  SegmentationMap seg;
  std::optional<LabelGrid> instances;
};

/// Every subdirectory of `dir` holding `image.png` and `seg.png` (plus optional `inst.png`),
/// sorted by name. Throws IoError when the directory is missing or holds no samples.
std::vector<Sample> load_dataset(const std::string& dir, const ClassInfo& classes);

void save_sample(const std::string& dir, const Sample& sample);

/// Class list of the synthetic street scenes: sky, building, road, car, person.
ClassInfo toy_classes();

/// Synthetic street scene with 1–3 cars and 0–2 people, each a separate instance.
Sample make_toy_sample(int size, std::uint64_t seed);

/// Writes `count` toy scenes plus `classes.json` under `dir`.
void write_toy_dataset(const std::string& dir, int count, int size, std::uint64_t seed);

}  // namespace siedob
