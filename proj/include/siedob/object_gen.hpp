#pragma once

#include <torch/torch.h>

#include "siedob/modulation.hpp"
#include "siedob/style_bank.hpp"

namespace siedob {

struct ObjectGenConfig {
  int crop_size = 128;
  int num_foreground = 2;  // K
  int ssnm_blocks = 4;
  int base_width = 32;
  int param_hidden = 64;
  int inpaint_width = 0;  // G_OI base width; 0 = base_width

  int inpainter_width() const { return inpaint_width > 0 ? inpaint_width : base_width; }
  void validate() const;
};

/// UNet-style completion network for partially visible objects. Input: erased crop (3),
/// edit mask (1) and the object's foreground one-hot map (K). Known pixels are copied from the
/// input, so an empty edit mask returns the input unchanged.
struct ObjectInpainterImpl : torch::nn::Module {
  explicit ObjectInpainterImpl(const ObjectGenConfig& config);
  torch::Tensor forward(const torch::Tensor& crop, const torch::Tensor& mask, const torch::Tensor& semantic);

  ObjectGenConfig config;
  torch::nn::ModuleList enc{nullptr}, dec{nullptr};
  torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(ObjectInpainter);

/// Strided conv stack, global average pool and a linear head to a 128-d code.
struct StyleEncoderImpl : torch::nn::Module {
  explicit StyleEncoderImpl(const ObjectGenConfig& config);
  torch::Tensor forward(const torch::Tensor& crop);

  torch::nn::ModuleList convs{nullptr};
  torch::nn::Linear fc{nullptr};
};
TORCH_MODULE(StyleEncoder);

/// Decoder from a learned constant at 1/2^blocks resolution through `ssnm_blocks` upsampling
/// SSNM stages driven by the semantic map and the broadcast style code. Output in [−1,1].
struct ObjectGeneratorImpl : torch::nn::Module {
  explicit ObjectGeneratorImpl(const ObjectGenConfig& config);
  /// semantic [N,K,S,S], style codes [N,128], object mask [N,1,S,S].
  torch::Tensor forward(const torch::Tensor& semantic, const torch::Tensor& style, const torch::Tensor& mask);

  ObjectGenConfig config;
  torch::Tensor constant;
  torch::nn::ModuleList blocks{nullptr};
  torch::nn::Conv2d to_rgb{nullptr};
};
TORCH_MODULE(ObjectGenerator);

StyleCode to_style_code(const torch::Tensor& row, int class_id);
torch::Tensor style_codes_tensor(const std::vector<StyleCode>& codes, torch::Dtype dtype = torch::kFloat32);

}  // namespace siedob
