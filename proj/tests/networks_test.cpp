#include <doctest.h>

#include "siedob/background.hpp"
#include "siedob/fusion.hpp"
#include "siedob/object_gen.hpp"
#include "siedob/objectives.hpp"

using namespace siedob;

namespace {

torch::Tensor onehot(int64_t n, int64_t l, int64_t h, int64_t w) {
  auto labels = torch::randint(0, l, {n, h, w}, torch::kLong);
  return torch::one_hot(labels, l).permute({0, 3, 1, 2}).to(torch::kFloat32).contiguous();
}

BackgroundGeneratorConfig small_bg() { return {8, 2, 2, 8, 32}; }
ObjectGenConfig small_obj() { return {32, 2, 3, 8, 8}; }

bool in_unit_range(const torch::Tensor& t) { return t.min().item<double>() >= -1.0 && t.max().item<double>() <= 1.0; }

}  // namespace

TEST_CASE("background generator output shape and range") {
  torch::manual_seed(3);
  BackgroundGenerator g(small_bg(), 5, std::vector<int>{3, 4});
  auto image = torch::rand({2, 3, 32, 32}) * 2 - 1;
  auto mask = (torch::rand({2, 1, 32, 32}) > 0.7).to(torch::kFloat32);
  auto out = g->forward(image * (1 - mask), onehot(2, 5, 32, 32), mask);
  CHECK(out.sizes() == torch::IntArrayRef({2, 3, 32, 32}));
  CHECK(in_unit_range(out));
  CHECK(g->background_flags.sizes() == torch::IntArrayRef({5}));
  CHECK(g->background_flags[3].item<bool>() == false);
  CHECK(g->background_flags[0].item<bool>() == true);
}

TEST_CASE("gradients reach every SASPM block") {
  torch::manual_seed(4);
  BackgroundGenerator g(small_bg(), 4, std::vector<int>{3});
  auto mask = torch::zeros({1, 1, 32, 32});
  mask.slice(2, 8, 20).slice(3, 8, 20).fill_(1);
  auto out = g->forward(torch::rand({1, 3, 32, 32}) * (1 - mask), onehot(1, 4, 32, 32), mask);
  out.pow(2).sum().backward();
  REQUIRE(g->saspm->size() == 2);
  for (const auto& block : *g->saspm) {
    double norm = 0.0;
    for (const auto& p : block->parameters()) {
      REQUIRE(p.grad().defined());
      norm += p.grad().abs().sum().item<double>();
    }
    CHECK(norm > 0.0);
  }
}

TEST_CASE("patch critic scores one cell per 16 input pixels") {
  PatchCritic d(6, 8);
  CHECK(d->forward(torch::rand({2, 6, 64, 64})).sizes() == torch::IntArrayRef({2, 1, 4, 4}));
  CHECK(d->forward(torch::rand({1, 6, 32, 32})).sizes() == torch::IntArrayRef({1, 1, 2, 2}));
}

TEST_CASE("patch critic is equivariant to patch order") {
  torch::manual_seed(6);
  PatchCritic d(3, 8);
  d->eval();
  auto x = torch::rand({5, 3, 32, 32});
  auto perm = torch::tensor({3, 0, 4, 1, 2}, torch::kLong);
  torch::NoGradGuard g;
  CHECK(torch::allclose(d->forward(x.index_select(0, perm)), d->forward(x).index_select(0, perm), 1e-6, 1e-6));
}

TEST_CASE("hinge critic loss falls while separating a texture from generated patches") {
  torch::manual_seed(7);
  // Real: oriented stripes with random phase. Fake: an untrained generator filling the masked half.
  auto coords = torch::arange(32, torch::kFloat32);
  auto stripes = [&](int64_t n) {
    auto phase = torch::rand({n, 1, 1, 1}) * 6.28;
    auto wave = torch::sin(coords.view({1, 1, 1, 32}) * 0.8 + coords.view({1, 1, 32, 1}) * 0.4 + phase);
    return wave.expand({n, 3, 32, 32}).contiguous() * 0.8;
  };
  BackgroundGenerator g(small_bg(), 2, std::vector<int>{0, 1});
  auto mask = torch::zeros({8, 1, 32, 32});
  mask.narrow(3, 16, 16).fill_(1.0);
  torch::Tensor fake;
  {
    torch::NoGradGuard ng;
    auto real = stripes(8);
    auto out = g->forward(real * (1 - mask), onehot(8, 2, 32, 32), mask);
    fake = real * (1 - mask) + out * mask;
  }
  PatchCritic d(3, 8);
  torch::optim::Adam opt(d->parameters(), torch::optim::AdamOptions(4e-4).betas({0.5, 0.999}));
  std::vector<double> losses;
  for (int step = 0; step < 200; ++step) {
    auto loss = hinge_d_loss(d->forward(stripes(8)), d->forward(fake));
    opt.zero_grad();
    loss.backward();
    opt.step();
    losses.push_back(loss.item<double>());
  }
  double first = 0, last = 0;
  for (int i = 0; i < 20; ++i) first += losses[i], last += losses[180 + i];
  CHECK(last < 0.5 * first);
}

TEST_CASE("spectral norm power iteration only advances in training mode") {
  torch::manual_seed(5);
  SNConv2d conv(3, 4, 3, 1);
  auto u0 = conv->u.clone();
  conv->eval();
  conv->forward(torch::rand({1, 3, 8, 8}));
  CHECK(torch::equal(conv->u, u0));
  conv->train();
  conv->forward(torch::rand({1, 3, 8, 8}));
  CHECK_FALSE(torch::equal(conv->u, u0));
  // Normalized weight has unit spectral norm once the iteration has converged.
  for (int i = 0; i < 50; ++i) conv->forward(torch::rand({1, 3, 8, 8}));
  auto w = conv->weight.view({4, -1});
  auto sigma = torch::linalg_svdvals(w).max().item<double>();
  auto v = torch::nn::functional::normalize(torch::mv(w.t(), conv->u), torch::nn::functional::NormalizeFuncOptions().dim(0));
  CHECK(torch::dot(conv->u, torch::mv(w, v)).item<double>() == doctest::Approx(sigma).epsilon(1e-3));
}

TEST_CASE("crop_patches resizes every window") {
  auto images = torch::arange(2 * 1 * 8 * 8, torch::kFloat32).view({2, 1, 8, 8});
  std::vector<std::vector<PatchWindow>> windows{{PatchWindow{.top = 0, .left = 0, .side = 4}, PatchWindow{.top = 2, .left = 2, .side = 2}}, {PatchWindow{.top = 4, .left = 4, .side = 4}}};
  auto patches = crop_patches(images, windows, 4);
  CHECK(patches.sizes() == torch::IntArrayRef({3, 1, 4, 4}));
  CHECK(torch::equal(patches[0], images[0].slice(1, 0, 4).slice(2, 0, 4)));
  CHECK(torch::equal(patches[2], images[1].slice(1, 4, 8).slice(2, 4, 8)));
}

TEST_CASE("object inpainter keeps known pixels and is identity on an empty mask") {
  torch::manual_seed(6);
  ObjectInpainter g(small_obj());
  auto crop = torch::rand({2, 3, 32, 32}) * 2 - 1;
  auto sem = onehot(2, 2, 32, 32);
  auto empty = torch::zeros({2, 1, 32, 32});
  CHECK(torch::equal(g->forward(crop, empty, sem), crop));

  auto mask = torch::zeros({2, 1, 32, 32});
  mask.slice(2, 10, 22).slice(3, 4, 30).fill_(1);
  auto out = g->forward(crop * (1 - mask), mask, sem);
  CHECK(out.sizes() == crop.sizes());
  CHECK(in_unit_range(out));
  auto known = (1 - mask).expand_as(crop).to(torch::kBool);
  CHECK(torch::equal(out.masked_select(known), crop.masked_select(known)));
}

TEST_CASE("style encoder and object generator shapes") {
  torch::manual_seed(7);
  StyleEncoder e(small_obj());
  ObjectGenerator g(small_obj());
  auto codes = e->forward(torch::rand({3, 3, 32, 32}) * 2 - 1);
  CHECK(codes.sizes() == torch::IntArrayRef({3, kStyleDim}));
  auto mask = torch::ones({3, 1, 32, 32});
  auto out = g->forward(onehot(3, 2, 32, 32), codes, mask);
  CHECK(out.sizes() == torch::IntArrayRef({3, 3, 32, 32}));
  CHECK(in_unit_range(out));
}

TEST_CASE("object generator output depends on the style code") {
  torch::manual_seed(8);
  ObjectGenerator g(small_obj());
  auto sem = onehot(1, 2, 32, 32);
  auto mask = torch::ones({1, 1, 32, 32});
  auto a = g->forward(sem, torch::randn({1, kStyleDim}), mask);
  auto b = g->forward(sem, torch::randn({1, kStyleDim}), mask);
  CHECK((a - b).abs().mean().item<double>() > 1e-4);
}

TEST_CASE("style code round trip through tensors") {
  StyleCode c;
  for (int i = 0; i < kStyleDim; ++i) c.vector[static_cast<size_t>(i)] = 0.5f * static_cast<float>(i);
  c.class_id = 3;
  auto t = style_codes_tensor({c, c});
  CHECK(t.sizes() == torch::IntArrayRef({2, kStyleDim}));
  CHECK(to_style_code(t[1], 3) == c);
}

TEST_CASE("zero-initialized fusion returns the composite bitwise") {
  torch::manual_seed(9);
  FusionNet f(FusionConfig{8, 2}, 5);
  auto composite = torch::rand({2, 3, 32, 32}) * 2 - 1;
  auto seg = onehot(2, 5, 32, 32);
  auto mask = (torch::rand({2, 1, 32, 32}) > 0.5).to(torch::kFloat32);
  CHECK(torch::equal(f->residual(composite, seg, mask), torch::zeros_like(composite)));
  CHECK(torch::equal(f->forward(composite, seg, mask), composite));
}

TEST_CASE("fusion residual head trains away from zero") {
  torch::manual_seed(10);
  FusionNet f(FusionConfig{8, 2}, 3);
  auto composite = torch::rand({1, 3, 16, 16}) * 2 - 1;
  auto seg = onehot(1, 3, 16, 16);
  auto mask = torch::ones({1, 1, 16, 16});
  torch::optim::SGD opt(f->parameters(), 0.1);
  auto loss = (f->forward(composite, seg, mask) - 0.5).pow(2).mean();
  loss.backward();
  opt.step();
  CHECK(f->residual(composite, seg, mask).abs().max().item<double>() > 0.0);
}
