#pragma once

#include <torch/torch.h>

#include <random>
#include <vector>

#include "siedob/modulation.hpp"
#include "siedob/patches.hpp"

namespace siedob {

struct BackgroundGeneratorConfig {
  int base_width = 64;
  int num_down = 4;
  int num_saspm = 3;
  int param_hidden = 64;
  int scene_size = 256;

  void validate() const;
};

/// Gated-conv encoder-decoder; the last `num_saspm` decoder stages end in a SASPM block.
/// Input channels: image (3) + one-hot segmentation (L) + edit mask (1). Output in [−1,1].
struct BackgroundGeneratorImpl : torch::nn::Module {
  BackgroundGeneratorImpl(const BackgroundGeneratorConfig& config, int num_classes, std::vector<int> foreground);

  /// image [N,3,H,W] (erased background input), seg [N,L,H,W], mask [N,1,H,W] (1 = edited).
  torch::Tensor forward(const torch::Tensor& image, const torch::Tensor& seg, const torch::Tensor& mask);

  BackgroundGeneratorConfig config;
  int num_classes;
  torch::Tensor background_flags;  // [L] bool, true for non-foreground classes
  GatedConv stem{nullptr}, bottleneck{nullptr};
  torch::nn::ModuleList down{nullptr}, up{nullptr}, saspm{nullptr};
  torch::nn::Conv2d to_rgb{nullptr};
};
TORCH_MODULE(BackgroundGenerator);

/// Fully-convolutional spectral-normalized critic: four stride-2 5×5 convs then a 3×3 score
/// conv, so the score map is input/16 per side.
struct PatchCriticImpl : torch::nn::Module {
  PatchCriticImpl(int64_t in_channels, int64_t width);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::ModuleList layers{nullptr};
  SNConv2d score{nullptr};
};
TORCH_MODULE(PatchCritic);

/// Crops `windows[i]` (one list per batch item) from images [N,C,H,W] and resizes every patch to
/// `side`². Returns [P,C,side,side] with patches in batch-then-window order.
torch::Tensor crop_patches(const torch::Tensor& images, const std::vector<std::vector<PatchWindow>>& windows,
                           int64_t side);

}  // namespace siedob
