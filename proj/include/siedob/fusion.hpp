#pragma once

#include <torch/torch.h>

namespace siedob {

struct FusionConfig {
  int base_width = 48;
  int num_down = 3;

  void validate(int scene_size) const;
};

/// Residual harmonizer: a small UNet predicts a per-pixel offset that is added to the
/// composite through a skip connection, then clamped to [−1,1]. The offset head starts at
/// zero, so an untrained network returns the composite unchanged.
struct FusionNetImpl : torch::nn::Module {
  FusionNetImpl(const FusionConfig& config, int num_classes);
  /// composite [N,3,H,W], seg [N,L,H,W], mask [N,1,H,W].
  torch::Tensor forward(const torch::Tensor& composite, const torch::Tensor& seg, const torch::Tensor& mask);
  torch::Tensor residual(const torch::Tensor& composite, const torch::Tensor& seg, const torch::Tensor& mask);

  FusionConfig config;
  int num_classes;
  torch::nn::ModuleList enc{nullptr}, dec{nullptr};
  torch::nn::Conv2d offset{nullptr};
};
TORCH_MODULE(FusionNet);

}  // namespace siedob
