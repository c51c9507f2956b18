#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "siedob/errors.hpp"

namespace siedob {

inline constexpr int kStyleDim = 128;

struct StyleCode {
  std::array<float, kStyleDim> vector{};
  int class_id = 0;

  bool operator==(const StyleCode&) const = default;
};

/// Class-aware collection of style codes extracted from training instances.
struct StyleBank {
  std::map<int, std::vector<StyleCode>> by_class;
  std::string dataset_id;
  std::string encoder_hash;

  void add(const StyleCode& code) { by_class[code.class_id].push_back(code); }
  /// Throws NoStylesError when the class has no entries.
  const std::vector<StyleCode>& entries(int class_id) const;
  size_t count(int class_id) const;
  size_t size() const;
};

/// Binary bank file (little-endian): "SBNK", u32 version, u32 class count, then per class
/// u32 class_id, u32 entry count and 128 float32 per entry. A `<path>.json` sidecar mirrors
/// the counts and provenance.
void save_style_bank(const std::string& path, const StyleBank& bank);
StyleBank load_style_bank(const std::string& path);

inline constexpr std::uint32_t kStyleBankVersion = 1;

/// Uniform entry index within `class_id`'s entries.
size_t sample_style_index(const StyleBank& bank, int class_id, std::mt19937_64& rng);
StyleCode sample_style(const StyleBank& bank, int class_id, std::mt19937_64& rng);

/// Directory holding per-entry thumbnails `<class_id>_<index>.png` next to a bank file.
std::string style_thumbnail_dir(const std::string& bank_path);

}  // namespace siedob
