#include "siedob/modulation.hpp"

#include <cmath>

#include "siedob/errors.hpp"

namespace siedob {

namespace F = torch::nn::functional;

torch::Tensor instance_norm(const torch::Tensor& x, double eps) {
  if (x.dim() != 4) throw DimensionError("instance_norm expects [N,C,H,W]");
  auto mean = x.mean({2, 3}, /*keepdim=*/true);
  auto var = (x - mean).pow(2).mean({2, 3}, /*keepdim=*/true);
  return (x - mean) / torch::sqrt(var + eps);
}

torch::Tensor extract_codes(const torch::Tensor& features, const torch::Tensor& seg, const torch::Tensor& known,
                            const torch::Tensor& background, torch::Tensor* valid) {
  if (features.dim() != 4 || seg.dim() != 4 || known.dim() != 4) throw DimensionError("extract_codes expects 4-d tensors");
  if (features.size(0) != seg.size(0) || features.size(2) != seg.size(2) || features.size(3) != seg.size(3) ||
      known.size(2) != seg.size(2) || known.size(3) != seg.size(3) || known.size(1) != 1) {
    throw DimensionError("extract_codes: feature, segmentation and known-mask sizes differ");
  }
  if (background.numel() != seg.size(1)) throw DimensionError("extract_codes: background flags must have L entries");
  const auto l = seg.size(1);
  auto weights = (seg * known).flatten(2);                                    // [N,L,HW]
  auto sums = torch::bmm(weights, features.flatten(2).transpose(1, 2));      // [N,L,C]
  auto counts = weights.sum(2);                                               // [N,L]
  auto present = counts.gt(0).logical_and(background.to(torch::kBool).to(counts.device()).view({1, l}));
  auto codes = sums / counts.clamp_min(1.0).unsqueeze(2);
  codes = codes * present.unsqueeze(2).to(codes.scalar_type());
  if (valid) *valid = present;
  return codes;
}

torch::Tensor broadcast_codes(const torch::Tensor& seg, const torch::Tensor& codes) {
  if (seg.dim() != 4 || codes.dim() != 3 || codes.size(0) != seg.size(0) || codes.size(1) != seg.size(1)) {
    throw DimensionError("broadcast_codes: expected seg [N,L,H,W] and codes [N,L,C]");
  }
  auto map = torch::bmm(codes.transpose(1, 2), seg.flatten(2));  // [N,C,HW]
  return map.view({seg.size(0), codes.size(2), seg.size(2), seg.size(3)});
}

torch::Tensor make_style_map(const torch::Tensor& codes, const torch::Tensor& mask) {
  if (codes.dim() != 2 || mask.dim() != 4 || mask.size(1) != 1 || codes.size(0) != mask.size(0)) {
    throw DimensionError("make_style_map: expected codes [N,D] and mask [N,1,H,W]");
  }
  return codes.unsqueeze(2).unsqueeze(3) * mask;
}

torch::nn::Conv2d conv2d(int64_t in, int64_t out, int64_t kernel, int64_t stride, int64_t dilation) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(dilation * (kernel / 2)).dilation(dilation));
}

ModulationHeadImpl::ModulationHeadImpl(int64_t cond_channels, int64_t out_channels, int64_t hidden)
    : shared(register_module("shared", conv2d(cond_channels, hidden, 3))),
      gamma(register_module("gamma", conv2d(hidden, out_channels, 3))),
      beta(register_module("beta", conv2d(hidden, out_channels, 3))) {}

std::pair<torch::Tensor, torch::Tensor> ModulationHeadImpl::forward(const torch::Tensor& cond) {
  auto h = torch::relu(shared->forward(cond));
  return {1.0 + gamma->forward(h), beta->forward(h)};
}

ModulatedConvImpl::ModulatedConvImpl(int64_t in, int64_t out, int64_t cond_channels, int64_t hidden)
    : conv(register_module("conv", conv2d(in, out, 3))),
      head(register_module("head", ModulationHead(cond_channels, out, hidden))) {}

torch::Tensor ModulatedConvImpl::forward(const torch::Tensor& x, const torch::Tensor& cond) {
  if (cond.size(2) != x.size(2) || cond.size(3) != x.size(3) || cond.size(0) != x.size(0)) {
    throw DimensionError("modulation: condition and feature sizes differ");
  }
  auto normalized = instance_norm(conv->forward(x));
  auto [g, b] = head->forward(cond);
  return torch::relu(g * normalized + b);
}

SaspmImpl::SaspmImpl(int64_t channels, int64_t out_channels, int64_t hidden)
    : modulate(register_module("modulate", ModulatedConv(channels, out_channels, channels, hidden))) {}

torch::Tensor SaspmImpl::forward_with_codes(const torch::Tensor& features, const torch::Tensor& code_map) {
  if (code_map.size(1) != features.size(1)) throw DimensionError("SASPM: code map channels differ from features");
  return modulate->forward(features, code_map);
}

torch::Tensor SaspmImpl::forward(const torch::Tensor& features, const torch::Tensor& seg, const torch::Tensor& known,
                                 const torch::Tensor& background) {
  auto codes = extract_codes(features, seg, known, background);
  return forward_with_codes(features, broadcast_codes(seg, codes));
}

SsnmImpl::SsnmImpl(int64_t in, int64_t out, int64_t semantic_channels, int64_t style_channels, int64_t hidden)
    : semantic(register_module("semantic", ModulatedConv(in, out, semantic_channels, hidden))),
      style(register_module("style", ModulatedConv(out, out, style_channels, hidden))) {}

torch::Tensor SsnmImpl::forward(const torch::Tensor& features, const torch::Tensor& semantic_map,
                                const torch::Tensor& style_map) {
  return style->forward(semantic->forward(features, semantic_map), style_map);
}

torch::Tensor activate(const torch::Tensor& x, Activation act) {
  switch (act) {
    case Activation::None: return x;
    case Activation::ReLU: return torch::relu(x);
    case Activation::LeakyReLU: return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2));
    case Activation::ELU: return torch::elu(x);
  }
  return x;
}

GatedConvImpl::GatedConvImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride, Activation act, int64_t dilation)
    : feature(register_module("feature", conv2d(in, out, kernel, stride, dilation))),
      gate(register_module("gate", conv2d(in, out, kernel, stride, dilation))),
      activation(act) {
  if (stride != 1 && stride != 2) throw DimensionError("gated conv stride must be 1 or 2");
}

torch::Tensor GatedConvImpl::forward(const torch::Tensor& x) {
  return activate(feature->forward(x), activation) * torch::sigmoid(gate->forward(x));
}

SNConv2dImpl::SNConv2dImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride_)
    : stride(stride_), padding(kernel / 2) {
  weight = register_parameter("weight", torch::empty({out, in, kernel, kernel}));
  bias = register_parameter("bias", torch::zeros({out}));
  torch::nn::init::kaiming_uniform_(weight, std::sqrt(5.0));
  u = register_buffer("u", F::normalize(torch::randn({out}), F::NormalizeFuncOptions().dim(0)));
}

torch::Tensor SNConv2dImpl::forward(const torch::Tensor& x) {
  auto w = weight.view({weight.size(0), -1});
  torch::Tensor v, u_now;
  {
    torch::NoGradGuard guard;
    v = F::normalize(torch::mv(w.t(), u), F::NormalizeFuncOptions().dim(0).eps(1e-12));
    u_now = F::normalize(torch::mv(w, v), F::NormalizeFuncOptions().dim(0).eps(1e-12));
    if (is_training()) u.copy_(u_now);
  }
  auto sigma = torch::dot(u_now, torch::mv(w, v));
  return F::conv2d(x, weight / sigma, F::Conv2dFuncOptions().bias(bias).stride(stride).padding(padding));
}

}  // namespace siedob
