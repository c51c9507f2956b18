#include "siedob/object_gen.hpp"

#include <algorithm>

#include "siedob/errors.hpp"
#include "siedob/tensor_convert.hpp"

namespace siedob {

namespace F = torch::nn::functional;

void ObjectGenConfig::validate() const {
  if (num_foreground <= 0) throw ConfigError("object networks need at least one foreground class");
  if (ssnm_blocks < 1 || base_width <= 0 || param_hidden <= 0 || inpaint_width < 0) throw ConfigError("object network sizes must be positive");
  if (crop_size % (1 << ssnm_blocks) != 0 || crop_size / (1 << ssnm_blocks) < 1) {
    throw ConfigError("crop_size must be divisible by 2^ssnm_blocks");
  }
  if (crop_size % 8 != 0) throw ConfigError("crop_size must be divisible by 8");
}

namespace {

torch::Tensor lrelu(const torch::Tensor& x) { return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2)); }

torch::Tensor upsample2(const torch::Tensor& x) {
  return F::interpolate(x, F::InterpolateFuncOptions().scale_factor(std::vector<double>{2.0, 2.0}).mode(torch::kNearest));
}

}  // namespace

ObjectInpainterImpl::ObjectInpainterImpl(const ObjectGenConfig& cfg) : config(cfg) {
  config.validate();
  const int64_t w = config.inpainter_width();
  enc = register_module("enc", torch::nn::ModuleList());
  dec = register_module("dec", torch::nn::ModuleList());
  // Encoder widths: w, 2w, 4w, 4w at full, 1/2, 1/4, 1/8 resolution.
  enc->push_back(conv2d(3 + 1 + config.num_foreground, w, 5));
  enc->push_back(conv2d(w, 2 * w, 3, 2));
  enc->push_back(conv2d(2 * w, 4 * w, 3, 2));
  enc->push_back(conv2d(4 * w, 4 * w, 3, 2));
  // Decoder: upsample, concatenate the matching encoder output, conv.
  dec->push_back(conv2d(4 * w + 4 * w, 4 * w, 3));
  dec->push_back(conv2d(4 * w + 2 * w, 2 * w, 3));
  dec->push_back(conv2d(2 * w + w, w, 3));
  head = register_module("head", conv2d(w, 3, 3));
}

torch::Tensor ObjectInpainterImpl::forward(const torch::Tensor& crop, const torch::Tensor& mask,
                                           const torch::Tensor& semantic) {
  if (crop.size(1) != 3 || mask.size(1) != 1 || semantic.size(1) != config.num_foreground ||
      crop.size(2) != mask.size(2) || crop.size(2) != semantic.size(2) || crop.size(2) % 8 != 0) {
    throw DimensionError("object inpainter: expected crop [N,3,S,S], mask [N,1,S,S], semantic [N,K,S,S]");
  }
  std::vector<torch::Tensor> skips;
  auto x = torch::cat({crop * (1.0 - mask), mask, semantic}, 1);
  for (auto& m : *enc) {
    x = lrelu(m->as<torch::nn::Conv2dImpl>()->forward(x));
    skips.push_back(x);
  }
  for (size_t i = 0; i < dec->size(); ++i) {
    x = upsample2(x);
    x = lrelu(dec[i]->as<torch::nn::Conv2dImpl>()->forward(torch::cat({x, skips[skips.size() - 2 - i]}, 1)));
  }
  auto predicted = torch::tanh(head->forward(x));
  return crop * (1.0 - mask) + predicted * mask;
}

StyleEncoderImpl::StyleEncoderImpl(const ObjectGenConfig& cfg) {
  cfg.validate();
  const int64_t w = cfg.base_width;
  convs = register_module("convs", torch::nn::ModuleList());
  int64_t in = 3;
  // Variance-preserving init with zero biases: under the default init the input signal shrinks
  // layer by layer and every code is dominated by the same bias terms.
  torch::NoGradGuard guard;
  for (int64_t out : {w, 2 * w, 4 * w, 4 * w}) {
    auto conv = conv2d(in, out, 3, 2);
    torch::nn::init::kaiming_normal_(conv->weight, 0.2, torch::kFanIn, torch::kLeakyReLU);
    conv->bias.zero_();
    convs->push_back(conv);
    in = out;
  }
  fc = register_module("fc", torch::nn::Linear(in, kStyleDim));
  torch::nn::init::xavier_normal_(fc->weight);
  fc->bias.zero_();
}

torch::Tensor StyleEncoderImpl::forward(const torch::Tensor& crop) {
  if (crop.dim() != 4 || crop.size(1) != 3) throw DimensionError("style encoder expects [N,3,S,S]");
  auto x = crop;
  // No activation on the last conv: pooled post-activation features share a large positive
  // component, which leaves every code pointing the same way.
  for (size_t i = 0; i < convs->size(); ++i) {
    x = convs[i]->as<torch::nn::Conv2dImpl>()->forward(x);
    if (i + 1 < convs->size()) x = lrelu(x);
  }
  return fc->forward(x.mean({2, 3}));
}

ObjectGeneratorImpl::ObjectGeneratorImpl(const ObjectGenConfig& cfg) : config(cfg) {
  config.validate();
  const int64_t w = config.base_width;
  const int64_t start = config.crop_size >> config.ssnm_blocks;
  int64_t channels = 4 * w;
  constant = register_parameter("constant", torch::randn({1, channels, start, start}));
  blocks = register_module("blocks", torch::nn::ModuleList());
  for (int i = 0; i < config.ssnm_blocks; ++i) {
    // Halve the width on every other stage, never below w.
    const int64_t out = (i % 2 == 1) ? std::max<int64_t>(w, channels / 2) : channels;
    blocks->push_back(Ssnm(channels, out, config.num_foreground, kStyleDim, config.param_hidden));
    channels = out;
  }
  to_rgb = register_module("to_rgb", conv2d(channels, 3, 3));
}

torch::Tensor ObjectGeneratorImpl::forward(const torch::Tensor& semantic, const torch::Tensor& style,
                                           const torch::Tensor& mask) {
  if (semantic.dim() != 4 || semantic.size(1) != config.num_foreground || semantic.size(2) != config.crop_size ||
      semantic.size(3) != config.crop_size || style.dim() != 2 || style.size(1) != kStyleDim ||
      style.size(0) != semantic.size(0) || mask.size(2) != config.crop_size) {
    throw DimensionError("object generator: expected semantic [N,K,S,S], style [N,128], mask [N,1,S,S]");
  }
  auto x = constant.expand({semantic.size(0), -1, -1, -1});
  for (auto& m : *blocks) {
    x = upsample2(x);
    const auto h = x.size(2), w = x.size(3);
    auto sem = downsample_onehot(semantic, h, w);
    auto style_map = make_style_map(style, downsample_onehot(mask, h, w));
    x = m->as<SsnmImpl>()->forward(x, sem, style_map);
  }
  return torch::tanh(to_rgb->forward(x));
}

StyleCode to_style_code(const torch::Tensor& row, int class_id) {
  auto r = row.detach().reshape({-1}).to(torch::kFloat32).contiguous();
  if (r.numel() != kStyleDim) throw DimensionError("style code must have 128 entries");
  StyleCode code;
  code.class_id = class_id;
  std::memcpy(code.vector.data(), r.data_ptr<float>(), kStyleDim * sizeof(float));
  return code;
}

torch::Tensor style_codes_tensor(const std::vector<StyleCode>& codes, torch::Dtype dtype) {
  auto out = torch::empty({static_cast<int64_t>(codes.size()), kStyleDim}, torch::kFloat32);
  for (size_t i = 0; i < codes.size(); ++i) {
    std::memcpy(out[static_cast<int64_t>(i)].data_ptr<float>(), codes[i].vector.data(), kStyleDim * sizeof(float));
  }
  return out.to(dtype);
}

}  // namespace siedob
