#include <doctest.h>

#include <random>

#include "gradcheck.hpp"
#include "naive_ops.hpp"
#include "siedob/errors.hpp"
#include "siedob/modulation.hpp"
#include "siedob/tensor_convert.hpp"

using namespace siedob;

namespace {

torch::Tensor random_onehot(int64_t n, int64_t l, int64_t h, int64_t w, torch::Dtype dtype = torch::kFloat64) {
  auto labels = torch::randint(0, l, {n, h, w}, torch::kLong);
  return torch::one_hot(labels, l).permute({0, 3, 1, 2}).to(dtype).contiguous();
}

// Brute-force per-class masked mean.
torch::Tensor masked_mean_oracle(const torch::Tensor& f, const torch::Tensor& seg, const torch::Tensor& known,
                                 const std::vector<bool>& background) {
  const int64_t n = f.size(0), c = f.size(1), h = f.size(2), w = f.size(3), l = seg.size(1);
  auto out = torch::zeros({n, l, c}, torch::kDouble);
  for (int64_t b = 0; b < n; ++b)
    for (int64_t cls = 0; cls < l; ++cls) {
      if (!background[cls]) continue;
      std::vector<double> sum(c, 0.0);
      int count = 0;
      for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
          if (seg[b][cls][y][x].item<double>() < 0.5 || known[b][0][y][x].item<double>() < 0.5) continue;
          ++count;
          for (int64_t ch = 0; ch < c; ++ch) sum[ch] += f[b][ch][y][x].item<double>();
        }
      if (count == 0) continue;
      for (int64_t ch = 0; ch < c; ++ch) out[b][cls][ch] = sum[ch] / count;
    }
  return out;
}

void zero_head(ModulationHead& head) {
  torch::NoGradGuard g;
  head->gamma->weight.zero_();
  head->gamma->bias.fill_(-1.0);  // γ = 1 + conv = 0
  head->beta->weight.zero_();
  head->beta->bias.zero_();
}

}  // namespace

TEST_CASE("broadcast_codes matches per-pixel lookup") {
  torch::manual_seed(1);
  auto seg = random_onehot(2, 5, 8, 8);
  auto codes = torch::randn({2, 5, 6}, torch::kDouble);
  auto p = broadcast_codes(seg, codes);
  auto labels = seg.argmax(1);
  double worst = 0;
  for (int b = 0; b < 2; ++b)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) {
        auto cls = labels[b][y][x].item<int64_t>();
        worst = std::max(worst, (p.index({b, torch::indexing::Slice(), y, x}) - codes[b][cls]).abs().max().item<double>());
      }
  CHECK(worst < 1e-12);

  SUBCASE("single class and zero table") {
    auto one = torch::zeros({1, 3, 4, 4}, torch::kDouble);
    one.index_put_({0, 1}, 1.0);
    auto u = torch::randn({1, 3, 2}, torch::kDouble);
    auto q = broadcast_codes(one, u);
    CHECK(torch::equal(q[0][0], torch::full({4, 4}, u[0][1][0].item<double>(), torch::kDouble)));
    CHECK(broadcast_codes(one, torch::zeros_like(u)).abs().max().item<double>() == 0.0);
  }
}

TEST_CASE("extract_codes matches masked mean and zeroes foreground rows") {
  torch::manual_seed(2);
  auto f = torch::randn({2, 3, 4, 4}, torch::kDouble);
  auto seg = random_onehot(2, 4, 4, 4);
  auto known = torch::randint(0, 2, {2, 1, 4, 4}).to(torch::kDouble);
  std::vector<bool> bg = {true, true, false, true};
  auto bg_t = torch::tensor({1, 1, 0, 1}, torch::kBool);
  torch::Tensor valid;
  auto codes = extract_codes(f, seg, known, bg_t, &valid);
  CHECK((codes - masked_mean_oracle(f, seg, known, bg)).abs().max().item<double>() < 1e-12);
  CHECK(codes.index({torch::indexing::Slice(), 2}).abs().max().item<double>() == 0.0);
  CHECK_FALSE(valid.index({torch::indexing::Slice(), 2}).any().item<bool>());

  SUBCASE("empty known region gives an all-invalid table") {
    auto none = torch::zeros_like(known);
    torch::Tensor v;
    auto c = extract_codes(f, seg, none, bg_t, &v);
    CHECK(c.abs().max().item<double>() == 0.0);
    CHECK_FALSE(v.any().item<bool>());
  }
  SUBCASE("constant class value is reproduced exactly") {
    auto all = torch::zeros({1, 2, 3, 3}, torch::kDouble);
    all.index_put_({0, 0}, 1.0);
    auto fc = torch::full({1, 2, 3, 3}, 0.375, torch::kDouble);
    auto c = extract_codes(fc, all, torch::ones({1, 1, 3, 3}, torch::kDouble), torch::tensor({1, 1}, torch::kBool));
    CHECK(c[0][0][0].item<double>() == 0.375);
    CHECK(c[0][0][1].item<double>() == 0.375);
  }
  SUBCASE("extract then broadcast reproduces class-wise constant features") {
    auto cls_values = torch::randn({4, 3}, torch::kDouble);
    auto fconst = broadcast_codes(seg, cls_values.unsqueeze(0).expand({2, 4, 3}).contiguous());
    auto back = broadcast_codes(seg, extract_codes(fconst, seg, known, bg_t));
    auto sel = (known * seg.index({torch::indexing::Slice(), torch::indexing::Slice(0, 2)}).sum(1, true) +
                known * seg.index({torch::indexing::Slice(), torch::indexing::Slice(3, 4)})).gt(0.5);
    auto diff = ((back - fconst).abs() * sel.to(torch::kDouble)).max().item<double>();
    CHECK(diff < 1e-12);
  }
  CHECK_THROWS_AS(extract_codes(f, seg, known, torch::tensor({1, 0}, torch::kBool)), DimensionError);
  CHECK_THROWS_AS(extract_codes(f, seg.narrow(2, 0, 3), known, bg_t), DimensionError);
}

TEST_CASE("make_style_map matches pixel loop") {
  torch::manual_seed(3);
  auto code = torch::randn({1, 128}, torch::kDouble);
  auto mask = torch::randint(0, 2, {1, 1, 5, 6}).to(torch::kDouble);
  auto map = make_style_map(code, mask);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 6; ++x) {
      auto px = map.index({0, torch::indexing::Slice(), y, x});
      if (mask[0][0][y][x].item<double>() > 0.5) {
        CHECK(torch::equal(px, code[0]));
      } else {
        CHECK(px.abs().max().item<double>() == 0.0);
      }
    }
  CHECK(make_style_map(code, torch::zeros_like(mask)).abs().max().item<double>() == 0.0);
  auto e7 = torch::zeros({1, 128}, torch::kDouble);
  e7[0][7] = 1.0;
  auto full = make_style_map(e7, torch::ones_like(mask));
  CHECK(full[0][7].min().item<double>() == 1.0);
  CHECK(full.sum().item<double>() == 30.0);
}

TEST_CASE("instance_norm gives zero mean and unit variance") {
  torch::manual_seed(4);
  auto x = torch::randn({2, 3, 5, 5}, torch::kDouble) * 4 + 2;
  auto y = instance_norm(x);
  CHECK(y.mean({2, 3}).abs().max().item<double>() < 1e-4);
  CHECK((y.var({2, 3}, /*unbiased=*/false) - 1).abs().max().item<double>() < 1e-4);
  CHECK((y - naive::instance_norm(x)).abs().max().item<double>() < 1e-12);
}

TEST_CASE("SASPM modulation matches a hand-rolled recomputation") {
  torch::manual_seed(5);
  Saspm block(4, 4, 8);
  block->to(torch::kDouble);
  auto f = torch::randn({1, 4, 6, 6}, torch::kDouble);
  auto p = torch::randn({1, 4, 6, 6}, torch::kDouble);
  auto out = block->forward_with_codes(f, p);

  auto& m = block->modulate;
  auto normalized = naive::instance_norm(naive::conv2d(f, m->conv->weight, m->conv->bias, 1, 1));
  auto hidden = naive::map(naive::conv2d(p, m->head->shared->weight, m->head->shared->bias, 1, 1), naive::relu);
  auto gamma = 1.0 + naive::conv2d(hidden, m->head->gamma->weight, m->head->gamma->bias, 1, 1);
  auto beta = naive::conv2d(hidden, m->head->beta->weight, m->head->beta->bias, 1, 1);
  auto expected = naive::map(gamma * normalized + beta, naive::relu);
  CHECK((out - expected).abs().max().item<double>() < 1e-10);
  CHECK(out.min().item<double>() >= 0.0);

  SUBCASE("zeroed parameter heads give zero output") {
    zero_head(m->head);
    CHECK(block->forward_with_codes(f, p).abs().max().item<double>() == 0.0);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(block->forward_with_codes(f, p.narrow(2, 0, 4)), DimensionError);
    CHECK_THROWS_AS(block->forward_with_codes(f, p.narrow(1, 0, 3)), DimensionError);
  }
}

TEST_CASE("SSNM stacks semantic then style modulation") {
  torch::manual_seed(6);
  Ssnm block(4, 4, 2, 3, 8);
  block->to(torch::kDouble);
  auto f = torch::randn({1, 4, 4, 4}, torch::kDouble);
  auto sem = random_onehot(1, 2, 4, 4);
  auto style = torch::randn({1, 3, 4, 4}, torch::kDouble);
  auto out = block->forward(f, sem, style);
  auto expected = block->style->forward(block->semantic->forward(f, sem), style);
  CHECK(torch::equal(out, expected));
  CHECK(out.min().item<double>() >= 0.0);

  auto other = block->forward(f, sem, torch::randn({1, 3, 4, 4}, torch::kDouble));
  CHECK((other - out).abs().mean().item<double>() > 0.0);

  zero_head(block->semantic->head);
  zero_head(block->style->head);
  CHECK(block->forward(f, sem, style).abs().max().item<double>() == 0.0);
}

TEST_CASE("gated conv matches two-conv oracle and saturates") {
  torch::manual_seed(7);
  auto x = torch::randn({1, 3, 6, 6}, torch::kDouble);
  for (int stride : {1, 2}) {
    GatedConv g(3, 4, 3, stride, Activation::ELU);
    g->to(torch::kDouble);
    auto feat = naive::conv2d(x, g->feature->weight, g->feature->bias, stride, 1);
    auto gate = naive::conv2d(x, g->gate->weight, g->gate->bias, stride, 1);
    auto expected = naive::map(feat, naive::elu) * naive::map(gate, naive::sigmoid);
    CHECK((g->forward(x) - expected).abs().max().item<double>() < 1e-12);
  }
  GatedConv g(3, 4, 3, 1, Activation::ReLU);
  g->to(torch::kDouble);
  {
    torch::NoGradGuard guard;
    g->gate->weight.zero_();
    g->gate->bias.fill_(20.0);
  }
  auto act = torch::relu(g->feature->forward(x));
  CHECK((g->forward(x) - act).abs().max().item<double>() < 1e-6 * std::max(1.0, act.abs().max().item<double>()));
  {
    torch::NoGradGuard guard;
    g->gate->bias.fill_(-20.0);
  }
  CHECK(g->forward(x).abs().max().item<double>() < 1e-6 * std::max(1.0, act.abs().max().item<double>()));
  CHECK_THROWS_AS(GatedConv(3, 4, 3, 3), DimensionError);
}

TEST_CASE("downsampling keeps one-hot rows and thresholds the known mask") {
  torch::manual_seed(8);
  auto seg = random_onehot(1, 4, 16, 16, torch::kFloat32);
  auto down = downsample_onehot(seg, 4, 4);
  CHECK(torch::equal(down.sum(1), torch::ones({1, 4, 4})));
  auto known = torch::zeros({1, 1, 4, 4});
  known.index_put_({0, 0, torch::indexing::Slice(0, 2), torch::indexing::Slice(0, 1)}, 1.0);  // half of a 2×2 block
  known.index_put_({0, 0, 0, 2}, 1.0);                                                         // quarter of a block
  auto k = downsample_mask(known, 2, 2);
  CHECK(k[0][0][0][0].item<float>() == 1.0f);
  CHECK(k[0][0][0][1].item<float>() == 0.0f);
}

TEST_CASE("spectral norm conv divides by the top singular value") {
  torch::manual_seed(9);
  SNConv2d conv(3, 5, 3, 1);
  conv->to(torch::kDouble);
  conv->train();
  auto x = torch::randn({1, 3, 4, 4}, torch::kDouble);
  for (int i = 0; i < 60; ++i) conv->forward(x);
  auto w = conv->weight.detach().view({5, -1});
  auto sigma = std::get<1>(torch::linalg_svd(w, false)).max().item<double>();
  auto expected = naive::conv2d(x, conv->weight.detach() / sigma, conv->bias.detach(), 1, 1);
  conv->eval();
  auto u_before = conv->u.clone();
  auto out = conv->forward(x);
  CHECK(torch::equal(u_before, conv->u));
  CHECK((out - expected).abs().max().item<double>() < 1e-8);
}

TEST_CASE("finite-difference gradients in double precision") {
  torch::manual_seed(10);
  auto weights = [](int64_t c, int64_t h, int64_t w) { return torch::randn({1, c, h, w}, torch::kDouble); };

  SUBCASE("SASPM w.r.t. features and parameters") {
    Saspm block(4, 4, 4);
    block->to(torch::kDouble);
    auto f = torch::randn({1, 4, 3, 3}, torch::kDouble).requires_grad_(true);
    auto seg = random_onehot(1, 3, 3, 3);
    auto known = torch::ones({1, 1, 3, 3}, torch::kDouble);
    known[0][0][1][1] = 0;
    auto bg = torch::tensor({1, 1, 0}, torch::kBool);
    auto r = weights(4, 3, 3);
    auto fn = [&] { return (block->forward(f, seg, known, bg) * r).sum(); };
    auto res = gradcheck(fn, f);
    CHECK(res.pass_rate() >= 0.99);
    for (auto& p : block->parameters()) {
      auto rp = gradcheck(fn, p);
      CHECK(rp.pass_rate() >= 0.99);
    }
  }
  SUBCASE("SSNM w.r.t. features, style map and parameters") {
    Ssnm block(4, 4, 2, 4, 4);
    block->to(torch::kDouble);
    auto f = torch::randn({1, 4, 4, 4}, torch::kDouble).requires_grad_(true);
    auto sem = random_onehot(1, 2, 4, 4);
    auto style = torch::randn({1, 4, 4, 4}, torch::kDouble).requires_grad_(true);
    auto r = weights(4, 4, 4);
    auto fn = [&] { return (block->forward(f, sem, style) * r).sum(); };
    CHECK(gradcheck(fn, f).pass_rate() >= 0.99);
    CHECK(gradcheck(fn, style).pass_rate() >= 0.99);
    for (auto& p : block->parameters()) CHECK(gradcheck(fn, p).pass_rate() >= 0.99);
  }
  SUBCASE("gated conv") {
    for (int stride : {1, 2}) {
      GatedConv g(4, 4, 3, stride, Activation::ELU);
      g->to(torch::kDouble);
      auto x = torch::randn({1, 4, 4, 4}, torch::kDouble).requires_grad_(true);
      auto r = stride == 1 ? weights(4, 4, 4) : weights(4, 2, 2);
      auto fn = [&] { return (g->forward(x) * r).sum(); };
      CHECK(gradcheck(fn, x).pass_rate() >= 0.99);
      for (auto& p : g->parameters()) CHECK(gradcheck(fn, p).pass_rate() >= 0.99);
    }
  }
}
