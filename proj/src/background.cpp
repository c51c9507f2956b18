#include "siedob/background.hpp"

#include <algorithm>

#include "siedob/errors.hpp"
#include "siedob/tensor_convert.hpp"

namespace siedob {

namespace F = torch::nn::functional;

void BackgroundGeneratorConfig::validate() const {
  if (base_width <= 0 || param_hidden <= 0) throw ConfigError("background generator widths must be positive");
  if (num_down < 1) throw ConfigError("background generator needs num_down >= 1");
  if (num_saspm < 0 || num_saspm > num_down) throw ConfigError("num_saspm must lie in [0, num_down]");
  if (scene_size % (1 << num_down) != 0) throw ConfigError("scene_size must be divisible by 2^num_down");
}

BackgroundGeneratorImpl::BackgroundGeneratorImpl(const BackgroundGeneratorConfig& cfg, int classes,
                                                 std::vector<int> foreground)
    : config(cfg), num_classes(classes) {
  config.validate();
  background_flags = torch::ones({classes}, torch::kBool);
  for (int c : foreground) background_flags[c] = false;
  register_buffer("background_flags", background_flags);

  const int64_t w = config.base_width;
  stem = register_module("stem", GatedConv(3 + classes + 1, w, 5, 1, Activation::ELU));
  down = register_module("down", torch::nn::ModuleList());
  up = register_module("up", torch::nn::ModuleList());
  saspm = register_module("saspm", torch::nn::ModuleList());

  std::vector<int64_t> widths{w};
  for (int i = 0; i < config.num_down; ++i) {
    const int64_t in = widths.back(), out = std::min<int64_t>(in * 2, 8 * w);
    down->push_back(GatedConv(in, out, 3, 2, Activation::ELU));
    widths.push_back(out);
  }
  bottleneck = register_module("bottleneck", GatedConv(widths.back(), widths.back(), 3, 1, Activation::ELU, 2));
  for (int i = 0; i < config.num_down; ++i) {
    const int64_t in = widths[widths.size() - 1 - i], out = widths[widths.size() - 2 - i];
    up->push_back(GatedConv(in, out, 3, 1, Activation::ELU));
    if (i >= config.num_down - config.num_saspm) saspm->push_back(Saspm(out, out, config.param_hidden));
  }
  to_rgb = register_module("to_rgb", conv2d(w, 3, 3));
}

torch::Tensor BackgroundGeneratorImpl::forward(const torch::Tensor& image, const torch::Tensor& seg,
                                               const torch::Tensor& mask) {
  if (image.dim() != 4 || image.size(1) != 3 || seg.size(1) != num_classes || mask.size(1) != 1 ||
      image.size(2) != seg.size(2) || image.size(3) != seg.size(3) || mask.size(2) != image.size(2) ||
      mask.size(3) != image.size(3)) {
    throw DimensionError("background generator: expected image [N,3,H,W], seg [N,L,H,W], mask [N,1,H,W]");
  }
  const int64_t factor = int64_t{1} << config.num_down;
  if (image.size(2) % factor != 0 || image.size(3) % factor != 0) {
    throw DimensionError("background generator: spatial size must be divisible by 2^num_down");
  }
  auto x = stem->forward(torch::cat({image, seg, mask}, 1));
  for (auto& m : *down) x = m->as<GatedConvImpl>()->forward(x);
  x = bottleneck->forward(x);
  const auto known = 1.0 - mask;
  size_t saspm_index = 0;
  for (int i = 0; i < config.num_down; ++i) {
    x = F::interpolate(x, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
    x = up[static_cast<size_t>(i)]->as<GatedConvImpl>()->forward(x);
    if (i >= config.num_down - config.num_saspm) {
      const auto h = x.size(2), wd = x.size(3);
      x = saspm[saspm_index++]->as<SaspmImpl>()->forward(x, downsample_onehot(seg, h, wd),
                                                         downsample_mask(known, h, wd), background_flags);
    }
  }
  return torch::tanh(to_rgb->forward(x));
}

PatchCriticImpl::PatchCriticImpl(int64_t in_channels, int64_t width) {
  layers = register_module("layers", torch::nn::ModuleList());
  int64_t in = in_channels;
  for (int64_t out : {width, 2 * width, 4 * width, 4 * width}) {
    layers->push_back(SNConv2d(in, out, 5, 2));
    in = out;
  }
  score = register_module("score", SNConv2d(in, 1, 3, 1));
}

torch::Tensor PatchCriticImpl::forward(const torch::Tensor& x) {
  auto h = x;
  for (auto& layer : *layers) {
    h = F::leaky_relu(layer->as<SNConv2dImpl>()->forward(h), F::LeakyReLUFuncOptions().negative_slope(0.2));
  }
  return score->forward(h);
}

torch::Tensor crop_patches(const torch::Tensor& images, const std::vector<std::vector<PatchWindow>>& windows,
                           int64_t side) {
  if (static_cast<int64_t>(windows.size()) != images.size(0)) throw DimensionError("crop_patches: one window list per image");
  std::vector<torch::Tensor> patches;
  for (size_t i = 0; i < windows.size(); ++i) {
    for (const auto& w : windows[i]) {
      auto p = images[static_cast<int64_t>(i)]
                   .unsqueeze(0)
                   .narrow(2, w.top, w.side)
                   .narrow(3, w.left, w.side);
      if (w.side != side) {
        p = F::interpolate(p, F::InterpolateFuncOptions()
                                  .size(std::vector<int64_t>{side, side})
                                  .mode(torch::kBilinear)
                                  .align_corners(false));
      }
      patches.push_back(p);
    }
  }
  if (patches.empty()) return torch::empty({0, images.size(1), side, side}, images.options());
  return torch::cat(patches, 0);
}

}  // namespace siedob
