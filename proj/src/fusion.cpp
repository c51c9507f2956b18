#include "siedob/fusion.hpp"

#include <algorithm>

#include "siedob/errors.hpp"
#include "siedob/modulation.hpp"

namespace siedob {

namespace F = torch::nn::functional;

void FusionConfig::validate(int scene_size) const {
  if (base_width <= 0 || num_down < 1) throw ConfigError("fusion network sizes must be positive");
  if (scene_size % (1 << num_down) != 0) throw ConfigError("scene size must be divisible by 2^fusion.num_down");
}

FusionNetImpl::FusionNetImpl(const FusionConfig& cfg, int classes) : config(cfg), num_classes(classes) {
  const int64_t w = config.base_width;
  enc = register_module("enc", torch::nn::ModuleList());
  dec = register_module("dec", torch::nn::ModuleList());
  std::vector<int64_t> widths{w};
  enc->push_back(conv2d(3 + classes + 1, w, 3));
  for (int i = 0; i < config.num_down; ++i) {
    const int64_t out = std::min<int64_t>(widths.back() * 2, 4 * w);
    enc->push_back(conv2d(widths.back(), out, 3, 2));
    widths.push_back(out);
  }
  for (int i = 0; i < config.num_down; ++i) {
    const int64_t in = widths[widths.size() - 1 - i] + widths[widths.size() - 2 - i];
    dec->push_back(conv2d(in, widths[widths.size() - 2 - i], 3));
  }
  offset = register_module("offset", conv2d(w, 3, 3));
  torch::NoGradGuard guard;
  offset->weight.zero_();
  offset->bias.zero_();
}

torch::Tensor FusionNetImpl::residual(const torch::Tensor& composite, const torch::Tensor& seg,
                                      const torch::Tensor& mask) {
  if (composite.size(1) != 3 || seg.size(1) != num_classes || mask.size(1) != 1 || composite.size(2) != seg.size(2) ||
      composite.size(3) != seg.size(3) || mask.size(2) != composite.size(2)) {
    throw DimensionError("fusion: expected composite [N,3,H,W], seg [N,L,H,W], mask [N,1,H,W]");
  }
  std::vector<torch::Tensor> skips;
  auto x = torch::cat({composite, seg, mask}, 1);
  for (auto& m : *enc) {
    x = F::leaky_relu(m->as<torch::nn::Conv2dImpl>()->forward(x), F::LeakyReLUFuncOptions().negative_slope(0.2));
    skips.push_back(x);
  }
  for (size_t i = 0; i < dec->size(); ++i) {
    x = F::interpolate(x, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
    x = torch::cat({x, skips[skips.size() - 2 - i]}, 1);
    x = F::leaky_relu(dec[i]->as<torch::nn::Conv2dImpl>()->forward(x), F::LeakyReLUFuncOptions().negative_slope(0.2));
  }
  return offset->forward(x);
}

torch::Tensor FusionNetImpl::forward(const torch::Tensor& composite, const torch::Tensor& seg,
                                     const torch::Tensor& mask) {
  return torch::clamp(composite + residual(composite, seg, mask), -1.0, 1.0);
}

}  // namespace siedob
