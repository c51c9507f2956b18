#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "siedob/grid.hpp"

namespace siedob {

enum class MaskKind { FreeForm, Extension, Outpainting };

MaskKind parse_mask_kind(const std::string& name);
const char* to_string(MaskKind kind);

/// Shape parameters for the training mask generators. Brush widths are given at
/// 256 px and scale with the larger image side.
struct MaskParams {
  int min_strokes = 1;
  int max_strokes = 6;
  double min_brush = 12.0;
  double max_brush = 40.0;
  int min_vertices = 4;
  int max_vertices = 12;
  double min_segment = 10.0;
  double max_segment = 60.0;
  /// Masked fraction of the image for the band and border generators.
  double min_ratio = 0.25;
  double max_ratio = 0.50;

  void validate() const;
};

Mask generate_training_mask(MaskKind kind, int height, int width, std::uint64_t seed, const MaskParams& params = {});

/// Same as above but draws from a caller-owned generator.
Mask generate_training_mask(MaskKind kind, int height, int width, std::mt19937_64& rng, const MaskParams& params = {});

/// Sets every pixel within `radius` of the segment (y0,x0)-(y1,x1).
void draw_capsule(Mask& mask, double y0, double x0, double y1, double x1, double radius);

}  // namespace siedob
