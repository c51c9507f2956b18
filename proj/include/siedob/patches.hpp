#pragma once

#include <random>
#include <utility>
#include <vector>

#include "siedob/grid.hpp"

namespace siedob {

/// Square patch sampling for the boundary-anchored critic. Sizes are in pixels at
/// the scene resolution the spec was built for.
struct PatchSpec {
  int count = 4;
  int min_size = 96;
  int max_size = 160;
  /// Side every patch is resized to before scoring.
  int critic_side = 128;

  /// Paper-default sizes (96–160 and a 128 critic at 256 px) scaled to `scene_size`, rounded to even.
  static PatchSpec scaled(int scene_size);
  void validate(int scene_size) const;
};

struct PatchWindow {
  int center_y = 0;  // before translation into the image
  int center_x = 0;
  int top = 0;
  int left = 0;
  int side = 0;

  bool operator==(const PatchWindow&) const = default;
};

/// Edited pixels with at least one 4-neighbour outside the edit mask.
std::vector<std::pair<int, int>> boundary_pixels(const Mask& mask);

/// `spec.count` windows centred on boundary pixels, shifted minimally to lie inside
/// the image. Empty when the mask has no boundary.
std::vector<PatchWindow> sample_boundary_patches(const Mask& mask, const PatchSpec& spec, std::mt19937_64& rng);

}  // namespace siedob
