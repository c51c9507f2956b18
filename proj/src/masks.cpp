#include "siedob/masks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace siedob {

MaskKind parse_mask_kind(const std::string& name) {
  if (name == "FREE_FORM" || name == "free_form") return MaskKind::FreeForm;
  if (name == "EXTENSION" || name == "extension") return MaskKind::Extension;
  if (name == "OUTPAINTING" || name == "outpainting") return MaskKind::Outpainting;
  throw ValidationError("unknown mask kind: " + name);
}

const char* to_string(MaskKind kind) {
  switch (kind) {
    case MaskKind::FreeForm: return "FREE_FORM";
    case MaskKind::Extension: return "EXTENSION";
    case MaskKind::Outpainting: return "OUTPAINTING";
  }
  return "?";
}

void MaskParams::validate() const {
  if (min_strokes < 1 || max_strokes < min_strokes) throw ValidationError("mask params: bad stroke count range");
  if (min_brush <= 0 || max_brush < min_brush) throw ValidationError("mask params: bad brush range");
  if (min_vertices < 1 || max_vertices < min_vertices) throw ValidationError("mask params: bad vertex range");
  if (min_segment <= 0 || max_segment < min_segment) throw ValidationError("mask params: bad segment range");
  // Below 25% the band/border masks degenerate towards an empty edit region.
  if (min_ratio < 0.25 || max_ratio < min_ratio || max_ratio >= 1.0) {
    throw ValidationError("mask params: masked ratio must lie in [0.25, 1)");
  }
}

void draw_capsule(Mask& mask, double y0, double x0, double y1, double x1, double radius) {
  const int ylo = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - radius)));
  const int yhi = std::min(mask.height - 1, static_cast<int>(std::ceil(std::max(y0, y1) + radius)));
  const int xlo = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - radius)));
  const int xhi = std::min(mask.width - 1, static_cast<int>(std::ceil(std::max(x0, x1) + radius)));
  const double dy = y1 - y0, dx = x1 - x0;
  const double len2 = dy * dy + dx * dx;
  const double r2 = radius * radius;
  for (int y = ylo; y <= yhi; ++y) {
    for (int x = xlo; x <= xhi; ++x) {
      double t = len2 > 0 ? ((y - y0) * dy + (x - x0) * dx) / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double py = y0 + t * dy - y, px = x0 + t * dx - x;
      if (py * py + px * px <= r2) mask.at(y, x) = 1;
    }
  }
}

namespace {

Mask free_form(int h, int w, std::mt19937_64& rng, const MaskParams& p) {
  Mask mask(h, w, 0);
  const double scale = std::max(h, w) / 256.0;
  std::uniform_int_distribution<int> strokes(p.min_strokes, p.max_strokes);
  std::uniform_int_distribution<int> vertices(p.min_vertices, p.max_vertices);
  std::uniform_real_distribution<double> brush(p.min_brush * scale, p.max_brush * scale);
  std::uniform_real_distribution<double> seg_len(p.min_segment * scale, p.max_segment * scale);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> uy(0.0, h - 1.0), ux(0.0, w - 1.0);
  const int n = strokes(rng);
  for (int s = 0; s < n; ++s) {
    double y = uy(rng), x = ux(rng);
    const double radius = brush(rng) / 2.0;
    const int nv = vertices(rng);
    for (int v = 0; v < nv; ++v) {
      const double a = angle(rng), len = seg_len(rng);
      const double ny = std::clamp(y + len * std::sin(a), 0.0, h - 1.0);
      const double nx = std::clamp(x + len * std::cos(a), 0.0, w - 1.0);
      draw_capsule(mask, y, x, ny, nx, radius);
      y = ny;
      x = nx;
    }
  }
  return mask;
}

Mask extension(int h, int w, std::mt19937_64& rng, const MaskParams& p) {
  Mask mask(h, w, 0);
  std::uniform_int_distribution<int> side(0, 3);
  std::uniform_real_distribution<double> ratio(p.min_ratio, p.max_ratio);
  const int s = side(rng);
  const double r = ratio(rng);
  const bool vertical = s < 2;  // band spans the full width
  const int extent = vertical ? h : w;
  const int band = std::clamp(static_cast<int>(std::lround(r * extent)), 1, extent);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      bool set = false;
      switch (s) {
        case 0: set = y < band; break;
        case 1: set = y >= h - band; break;
        case 2: set = x < band; break;
        default: set = x >= w - band; break;
      }
      mask.at(y, x) = set ? 1 : 0;
    }
  }
  return mask;
}

Mask outpainting(int h, int w, std::mt19937_64& rng, const MaskParams& p) {
  Mask mask(h, w, 1);
  std::uniform_real_distribution<double> ratio(p.min_ratio, p.max_ratio);
  const double keep = std::sqrt(1.0 - ratio(rng));
  const int kh = std::clamp(static_cast<int>(std::lround(keep * h)), 1, h - 1);
  const int kw = std::clamp(static_cast<int>(std::lround(keep * w)), 1, w - 1);
  const int top = (h - kh) / 2, left = (w - kw) / 2;
  for (int y = top; y < top + kh; ++y) {
    for (int x = left; x < left + kw; ++x) mask.at(y, x) = 0;
  }
  return mask;
}

}  // namespace

Mask generate_training_mask(MaskKind kind, int height, int width, std::mt19937_64& rng, const MaskParams& params) {
  if (height < 2 || width < 2) throw ValidationError("generate_training_mask: image too small");
  params.validate();
  switch (kind) {
    case MaskKind::FreeForm: return free_form(height, width, rng, params);
    case MaskKind::Extension: return extension(height, width, rng, params);
    case MaskKind::Outpainting: return outpainting(height, width, rng, params);
  }
  throw ValidationError("generate_training_mask: unknown kind");
}

Mask generate_training_mask(MaskKind kind, int height, int width, std::uint64_t seed, const MaskParams& params) {
  std::mt19937_64 rng(seed);
  return generate_training_mask(kind, height, width, rng, params);
}

}  // namespace siedob
