#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "siedob/errors.hpp"

namespace siedob {

/// Row-major H×W grid of scalars.
template <class T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int h, int w, T fill = T{}) : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw DimensionError("negative grid size");
  }

  T& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
  const T& at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
  bool contains(int y, int x) const { return y >= 0 && x >= 0 && y < height && x < width; }
  size_t size() const { return data.size(); }
  bool same_size(int h, int w) const { return height == h && width == w; }
  template <class U>
  bool same_size(const Grid<U>& o) const { return height == o.height && width == o.width; }

  bool operator==(const Grid&) const = default;
};

/// Binary mask; any nonzero value counts as set.
using Mask = Grid<std::uint8_t>;
using LabelGrid = Grid<std::int32_t>;

/// Interleaved H×W×C float image. Values live in [0,1] outside network boundaries.
struct Image {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c = 3, float fill = 0.0f)
      : height(h), width(w), channels(c), data(static_cast<size_t>(h) * w * c, fill) {
    if (h < 0 || w < 0 || c <= 0) throw DimensionError("bad image size");
  }

  float& at(int y, int x, int c) { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const { return data[(static_cast<size_t>(y) * width + x) * channels + c]; }
  template <class U>
  bool same_size(const Grid<U>& g) const { return height == g.height && width == g.width; }
  bool same_size(const Image& o) const { return height == o.height && width == o.width; }

  bool operator==(const Image&) const = default;
};

inline size_t count_set(const Mask& m) {
  return static_cast<size_t>(std::count_if(m.data.begin(), m.data.end(), [](auto v) { return v != 0; }));
}

inline bool is_empty(const Mask& m) { return count_set(m) == 0; }

}  // namespace siedob
