#pragma once

#include <torch/torch.h>

#include <utility>

namespace siedob {

/// Per-sample, per-channel normalization without affine parameters.
torch::Tensor instance_norm(const torch::Tensor& x, double eps = 1e-5);

/// Per-class masked means of `features` [N,C,H,W] over pixels where `known` [N,1,H,W] is set and
/// the one-hot `seg` [N,L,H,W] selects the class. Rows of classes that are not background
/// (`background` is an L-element bool tensor) or have no known pixels are zero. Returns codes
/// [N,L,C]; `valid` (optional) receives the [N,L] bool presence flags.
torch::Tensor extract_codes(const torch::Tensor& features, const torch::Tensor& seg, const torch::Tensor& known,
                            const torch::Tensor& background, torch::Tensor* valid = nullptr);

/// Code map P = S ⊗ U: each pixel receives the code row of its class. seg [N,L,H,W], codes [N,L,C].
torch::Tensor broadcast_codes(const torch::Tensor& seg, const torch::Tensor& codes);

/// Style map [N,D,H,W]: `codes` [N,D] at pixels where `mask` [N,1,H,W] is set, zero elsewhere.
torch::Tensor make_style_map(const torch::Tensor& codes, const torch::Tensor& mask);

/// Convolution padded to keep the spatial size at stride 1.
torch::nn::Conv2d conv2d(int64_t in, int64_t out, int64_t kernel, int64_t stride = 1, int64_t dilation = 1);

/// γ/β generator: shared 3×3 conv + ReLU, then two sibling 3×3 convs. γ carries a +1 offset so an
/// untrained head starts near the identity modulation.
struct ModulationHeadImpl : torch::nn::Module {
  ModulationHeadImpl(int64_t cond_channels, int64_t out_channels, int64_t hidden = 64);
  std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& cond);

  torch::nn::Conv2d shared{nullptr}, gamma{nullptr}, beta{nullptr};
};
TORCH_MODULE(ModulationHead);

/// ReLU(γ(cond) ⊙ IN(Conv(x)) + β(cond)).
struct ModulatedConvImpl : torch::nn::Module {
  ModulatedConvImpl(int64_t in, int64_t out, int64_t cond_channels, int64_t hidden = 64);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& cond);

  torch::nn::Conv2d conv{nullptr};
  ModulationHead head{nullptr};
};
TORCH_MODULE(ModulatedConv);

/// Semantic-aware self-propagation: per-class codes from the known region of the incoming
/// features are broadcast over each class region and drive the modulation.
struct SaspmImpl : torch::nn::Module {
  SaspmImpl(int64_t channels, int64_t out_channels, int64_t hidden = 64);

  /// Modulation given a precomputed code map P (same channel count as the input features).
  torch::Tensor forward_with_codes(const torch::Tensor& features, const torch::Tensor& code_map);
  /// Full block: seg [N,L,h,w] and known [N,1,h,w] at the feature resolution.
  torch::Tensor forward(const torch::Tensor& features, const torch::Tensor& seg, const torch::Tensor& known,
                        const torch::Tensor& background);

  ModulatedConv modulate{nullptr};
};
TORCH_MODULE(Saspm);

/// Semantic then style modulation, stacked.
struct SsnmImpl : torch::nn::Module {
  SsnmImpl(int64_t in, int64_t out, int64_t semantic_channels, int64_t style_channels, int64_t hidden = 64);
  torch::Tensor forward(const torch::Tensor& features, const torch::Tensor& semantic, const torch::Tensor& style_map);

  ModulatedConv semantic{nullptr}, style{nullptr};
};
TORCH_MODULE(Ssnm);

enum class Activation { None, ReLU, LeakyReLU, ELU };

torch::Tensor activate(const torch::Tensor& x, Activation act);

/// activation(feature conv) ⊙ sigmoid(gate conv).
struct GatedConvImpl : torch::nn::Module {
  GatedConvImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride = 1, Activation act = Activation::ELU,
                int64_t dilation = 1);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Conv2d feature{nullptr}, gate{nullptr};
  Activation activation;
};
TORCH_MODULE(GatedConv);

/// Convolution whose weight is divided by its spectral norm, estimated by one power iteration
/// per training-mode forward pass.
struct SNConv2dImpl : torch::nn::Module {
  SNConv2dImpl(int64_t in, int64_t out, int64_t kernel, int64_t stride);
  torch::Tensor forward(const torch::Tensor& x);

  torch::Tensor weight, bias, u;
  int64_t stride, padding;
};
TORCH_MODULE(SNConv2d);

}  // namespace siedob
