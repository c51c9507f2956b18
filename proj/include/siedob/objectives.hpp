#pragma once

#include <torch/torch.h>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "siedob/errors.hpp"

namespace siedob {

struct LossWeights {
  double perceptual_background = 10.0;  // λ_PB
  double perceptual_inpaint = 10.0;     // λ_PI
  double perceptual_object = 10.0;      // λ_PO
  double perceptual_fusion = 10.0;      // λ_PF
  double gan_local = 0.2;               // λ_GAN^L

  void validate() const;
};

/// Frozen three-tap convolutional feature extractor (strides 2, 4, 8) used wherever a
/// perceptual feature space is needed. Weights come from a seeded generator, so every
/// instance built with the same seed and widths is identical; never trained.
struct FeaturePyramidImpl : torch::nn::Module {
  explicit FeaturePyramidImpl(std::uint64_t seed = 0x5eed, std::array<int64_t, 3> widths = {16, 32, 64});
  std::vector<torch::Tensor> forward(const torch::Tensor& image);
  /// Channel means of every tap, concatenated: [N, sum(widths)].
  torch::Tensor pooled(const torch::Tensor& image);
  /// Replaces the random weights with tensors stored by `save_weights`.
  void load_weights(const std::string& path);
  void save_weights(const std::string& path);

  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
};
TORCH_MODULE(FeaturePyramid);

torch::Tensor l1_loss(const torch::Tensor& a, const torch::Tensor& b);
/// Sum over the pyramid taps of the mean absolute feature difference.
torch::Tensor perceptual_loss(const torch::Tensor& a, const torch::Tensor& b, FeaturePyramid& pyramid);
/// mean(max(0, 1 − real)) + mean(max(0, 1 + fake)).
torch::Tensor hinge_d_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores);
/// −mean(fake).
torch::Tensor hinge_g_loss(const torch::Tensor& fake_scores);
/// 1 − cos(a, b) per row, averaged over the batch; norms are guarded by ε = 1e-8.
torch::Tensor scc_loss(const torch::Tensor& code_result, const torch::Tensor& code_style);

enum class Objective { Background, ObjectInpaint, ObjectGen, Fusion };

const char* to_string(Objective which);

/// Loss parts for one generator update. The *_style fields hold the sampled-style branch of
/// the object generator; the unsuffixed fields hold the ground-truth branch.
template <class T>
struct LossTerms {
  std::optional<T> l1, perceptual, gan, gan_global, gan_local, scc;
  std::optional<T> perceptual_style, gan_style, scc_style;
};

namespace detail {
template <class T>
const T& need(const std::optional<T>& part, const char* name, Objective which) {
  if (!part) throw ConfigError(std::string("objective ") + to_string(which) + " is missing part " + name);
  return *part;
}
}  // namespace detail

/// Weighted sum per objective:
///   Background:     L1 + λ_PB·L_P + L_GAN^G + λ_GAN^L·L_GAN^L
///   ObjectInpaint:  L1 + λ_PI·L_P + L_GAN
///   ObjectGen:      L1 + λ_PO·L_P + L_GAN + L_SCC  (L1 on R^gt only; the rest on R^gt and R^s, summed)
///   Fusion:         λ_PF·L_P + L_GAN
template <class T>
T compose_objective(Objective which, const LossTerms<T>& p, const LossWeights& w) {
  using detail::need;
  switch (which) {
    case Objective::Background:
      return need(p.l1, "l1", which) + w.perceptual_background * need(p.perceptual, "perceptual", which) +
             need(p.gan_global, "gan_global", which) + w.gan_local * need(p.gan_local, "gan_local", which);
    case Objective::ObjectInpaint:
      return need(p.l1, "l1", which) + w.perceptual_inpaint * need(p.perceptual, "perceptual", which) +
             need(p.gan, "gan", which);
    case Objective::ObjectGen:
      return need(p.l1, "l1", which) + w.perceptual_object * need(p.perceptual, "perceptual", which) +
             need(p.gan, "gan", which) + need(p.scc, "scc", which) +
             w.perceptual_object * need(p.perceptual_style, "perceptual_style", which) +
             need(p.gan_style, "gan_style", which) + need(p.scc_style, "scc_style", which);
    case Objective::Fusion:
      return w.perceptual_fusion * need(p.perceptual, "perceptual", which) + need(p.gan, "gan", which);
  }
  throw ConfigError("unknown objective");
}

}  // namespace siedob
