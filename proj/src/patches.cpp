#include "siedob/patches.hpp"

#include <algorithm>
#include <cmath>

namespace siedob {

namespace {
int round_even(double v) { return 2 * static_cast<int>(std::lround(v / 2.0)); }
}  // namespace

PatchSpec PatchSpec::scaled(int scene_size) {
  const double s = scene_size / 256.0;
  PatchSpec spec;
  spec.min_size = std::max(2, round_even(96 * s));
  spec.max_size = std::max(spec.min_size, round_even(160 * s));
  spec.critic_side = std::max(16, round_even(128 * s));
  return spec;
}

void PatchSpec::validate(int scene_size) const {
  if (count <= 0) throw ValidationError("patch spec: count must be positive");
  if (min_size <= 0 || min_size > max_size || max_size > scene_size) {
    throw ValidationError("patch spec: need 0 < min_size <= max_size <= scene_size");
  }
  if (critic_side < 16 || critic_side % 16 != 0) throw ValidationError("patch spec: critic side must be a multiple of 16");
}

std::vector<std::pair<int, int>> boundary_pixels(const Mask& mask) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(y, x) == 0) continue;
      const bool edge = (mask.contains(y - 1, x) && mask.at(y - 1, x) == 0) ||
                        (mask.contains(y + 1, x) && mask.at(y + 1, x) == 0) ||
                        (mask.contains(y, x - 1) && mask.at(y, x - 1) == 0) ||
                        (mask.contains(y, x + 1) && mask.at(y, x + 1) == 0);
      if (edge) out.emplace_back(y, x);
    }
  }
  return out;
}

std::vector<PatchWindow> sample_boundary_patches(const Mask& mask, const PatchSpec& spec, std::mt19937_64& rng) {
  spec.validate(std::min(mask.height, mask.width));
  const auto boundary = boundary_pixels(mask);
  std::vector<PatchWindow> out;
  if (boundary.empty()) return out;
  std::uniform_int_distribution<size_t> pick(0, boundary.size() - 1);
  std::uniform_int_distribution<int> size(spec.min_size, spec.max_size);
  for (int i = 0; i < spec.count; ++i) {
    const auto [cy, cx] = boundary[pick(rng)];
    PatchWindow w;
    w.center_y = cy;
    w.center_x = cx;
    w.side = size(rng);
    w.top = std::clamp(cy - w.side / 2, 0, mask.height - w.side);
    w.left = std::clamp(cx - w.side / 2, 0, mask.width - w.side);
    out.push_back(w);
  }
  return out;
}

}  // namespace siedob
