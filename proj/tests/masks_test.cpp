#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "siedob/masks.hpp"
#include "siedob/patches.hpp"

using namespace siedob;

TEST_CASE("training masks are deterministic under a seed") {
  for (auto kind : {MaskKind::FreeForm, MaskKind::Extension, MaskKind::Outpainting}) {
    CHECK(generate_training_mask(kind, 64, 64, 42) == generate_training_mask(kind, 64, 64, 42));
    CHECK_FALSE(is_empty(generate_training_mask(kind, 64, 64, 43)));
  }
}

TEST_CASE("band and border masks cover 25-50% of the image") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (auto kind : {MaskKind::Extension, MaskKind::Outpainting}) {
      const double cov = static_cast<double>(count_set(generate_training_mask(kind, 64, 64, seed))) / (64 * 64);
      CHECK(cov >= 0.23);
      CHECK(cov <= 0.52);
    }
  }
  Mask ext = generate_training_mask(MaskKind::Extension, 32, 48, 9);
  // A band spans a full row or a full column.
  bool full_row = false, full_col = false;
  for (int y = 0; y < 32; ++y) {
    int n = 0;
    for (int x = 0; x < 48; ++x) n += ext.at(y, x);
    full_row |= n == 48;
  }
  for (int x = 0; x < 48; ++x) {
    int n = 0;
    for (int y = 0; y < 32; ++y) n += ext.at(y, x);
    full_col |= n == 32;
  }
  CHECK((full_row || full_col));
}

TEST_CASE("masked ratio below 25% is rejected") {
  MaskParams p;
  p.min_ratio = 0.0;
  p.max_ratio = 0.0;
  CHECK_THROWS_AS(generate_training_mask(MaskKind::Outpainting, 64, 64, 1, p), ValidationError);
  p.min_ratio = 0.24;
  p.max_ratio = 0.5;
  CHECK_THROWS_AS(generate_training_mask(MaskKind::Extension, 64, 64, 1, p), ValidationError);
}

TEST_CASE("free-form coverage over 1000 samples at 256x256") {
  std::mt19937_64 rng(2024);
  double total = 0.0;
  for (int i = 0; i < 1000; ++i) {
    total += static_cast<double>(count_set(generate_training_mask(MaskKind::FreeForm, 256, 256, rng))) / (256.0 * 256.0);
  }
  const double mean = total / 1000.0;
  MESSAGE("mean free-form coverage " << mean);
  CHECK(mean >= 0.10);
  CHECK(mean <= 0.60);
}

TEST_CASE("boundary pixels") {
  CHECK(boundary_pixels(Mask(8, 8, 0)).empty());
  CHECK(boundary_pixels(Mask(8, 8, 1)).empty());
  Mask m(10, 10, 0);
  for (int y = 3; y < 7; ++y)
    for (int x = 3; x < 7; ++x) m.at(y, x) = 1;
  auto b = boundary_pixels(m);
  std::set<std::pair<int, int>> got(b.begin(), b.end());
  // Exhaustive neighbour check.
  std::set<std::pair<int, int>> want;
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) {
      if (!m.at(y, x)) continue;
      bool edge = false;
      for (auto [dy, dx] : {std::pair{-1, 0}, {1, 0}, {0, -1}, {0, 1}}) edge |= m.at(y + dy, x + dx) == 0;
      if (edge) want.emplace(y, x);
    }
  CHECK(got == want);
  CHECK(got.size() == 12);  // inner ring of a 4×4 square
}

TEST_CASE("patch spec scaling") {
  auto s256 = PatchSpec::scaled(256);
  CHECK(s256.min_size == 96);
  CHECK(s256.max_size == 160);
  CHECK(s256.critic_side == 128);
  CHECK(s256.count == 4);
  auto s64 = PatchSpec::scaled(64);
  CHECK(s64.min_size == 24);
  CHECK(s64.max_size == 40);
  CHECK(s64.critic_side == 32);
}

TEST_CASE("boundary patches: centres on the boundary, windows inside, sizes uniform") {
  Mask m = generate_training_mask(MaskKind::FreeForm, 256, 256, 77);
  const auto b = boundary_pixels(m);
  std::set<std::pair<int, int>> boundary(b.begin(), b.end());
  PatchSpec spec = PatchSpec::scaled(256);
  std::mt19937_64 rng(5);
  std::map<int, int> sizes;
  int n = 0;
  for (int draw = 0; draw < 1000; ++draw) {
    for (const auto& w : sample_boundary_patches(m, spec, rng)) {
      ++n;
      CHECK(boundary.count({w.center_y, w.center_x}) == 1);
      CHECK(w.side >= spec.min_size);
      CHECK(w.side <= spec.max_size);
      CHECK(w.top >= 0);
      CHECK(w.left >= 0);
      CHECK(w.top + w.side <= 256);
      CHECK(w.left + w.side <= 256);
      ++sizes[w.side];
    }
  }
  CHECK(n == 4000);
  // Size uniformity: 5 bins of 13 sizes. At 4000 sizes a ±5% band is only ~1.6σ per bin, so the
  // histogram is accumulated over 25000 draws (100000 sizes, ±5% ≈ 8σ).
  for (int draw = 1000; draw < 25000; ++draw) {
    for (const auto& w : sample_boundary_patches(m, spec, rng)) ++sizes[w.side];
  }
  int bins[5] = {};
  for (auto [side, count] : sizes) bins[(side - spec.min_size) / 13] += count;
  for (int k = 0; k < 5; ++k) {
    CHECK(bins[k] >= 19000);
    CHECK(bins[k] <= 21000);
  }
  std::mt19937_64 r2(1);
  CHECK(sample_boundary_patches(Mask(64, 64, 0), PatchSpec::scaled(64), r2).empty());
}
