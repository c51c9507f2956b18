#include "siedob/objectives.hpp"

#include <cmath>
#include <random>

namespace siedob {

namespace F = torch::nn::functional;

void LossWeights::validate() const {
  for (double v : {perceptual_background, perceptual_inpaint, perceptual_object, perceptual_fusion, gan_local}) {
    if (!(v >= 0.0)) throw ConfigError("loss weights must be non-negative");
  }
}

const char* to_string(Objective which) {
  switch (which) {
    case Objective::Background: return "BACKGROUND";
    case Objective::ObjectInpaint: return "OBJECT_INPAINT";
    case Objective::ObjectGen: return "OBJECT_GEN";
    case Objective::Fusion: return "FUSION";
  }
  return "?";
}

namespace {

torch::nn::Conv2d frozen_conv(int64_t in, int64_t out, std::mt19937_64& rng) {
  auto conv = torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, 3).stride(2).padding(1));
  // He-normal weights drawn from our own generator so the pyramid does not depend on torch's RNG state.
  std::normal_distribution<float> normal(0.0f, static_cast<float>(std::sqrt(2.0 / (in * 9))));
  std::vector<float> w(static_cast<size_t>(out * in * 9));
  for (auto& v : w) v = normal(rng);
  torch::NoGradGuard guard;
  conv->weight.copy_(torch::from_blob(w.data(), conv->weight.sizes(), torch::kFloat32));
  conv->bias.zero_();
  return conv;
}

}  // namespace

FeaturePyramidImpl::FeaturePyramidImpl(std::uint64_t seed, std::array<int64_t, 3> widths) {
  std::mt19937_64 rng(seed);
  conv1 = register_module("conv1", frozen_conv(3, widths[0], rng));
  conv2 = register_module("conv2", frozen_conv(widths[0], widths[1], rng));
  conv3 = register_module("conv3", frozen_conv(widths[1], widths[2], rng));
  for (auto& p : parameters()) p.set_requires_grad(false);
  eval();
}

std::vector<torch::Tensor> FeaturePyramidImpl::forward(const torch::Tensor& image) {
  auto a = torch::relu(conv1->forward(image));
  auto b = torch::relu(conv2->forward(a));
  auto c = torch::relu(conv3->forward(b));
  return {a, b, c};
}

torch::Tensor FeaturePyramidImpl::pooled(const torch::Tensor& image) {
  std::vector<torch::Tensor> parts;
  for (auto& tap : forward(image)) parts.push_back(tap.mean({2, 3}));
  return torch::cat(parts, 1);
}

void FeaturePyramidImpl::save_weights(const std::string& path) {
  torch::serialize::OutputArchive archive;
  save(archive);
  archive.save_to(path);
}

void FeaturePyramidImpl::load_weights(const std::string& path) {
  torch::serialize::InputArchive archive;
  try {
    archive.load_from(path);
  } catch (const c10::Error& e) {
    throw IoError("cannot load feature pyramid weights from " + path);
  }
  load(archive);
  for (auto& p : parameters()) p.set_requires_grad(false);
}

torch::Tensor l1_loss(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw DimensionError("l1_loss: shapes differ");
  return (a - b).abs().mean();
}

torch::Tensor perceptual_loss(const torch::Tensor& a, const torch::Tensor& b, FeaturePyramid& pyramid) {
  if (a.sizes() != b.sizes()) throw DimensionError("perceptual_loss: shapes differ");
  auto fa = pyramid->forward(a);
  auto fb = pyramid->forward(b);
  auto total = torch::zeros({}, a.options());
  for (size_t i = 0; i < fa.size(); ++i) total = total + (fa[i] - fb[i]).abs().mean();
  return total;
}

torch::Tensor hinge_d_loss(const torch::Tensor& real_scores, const torch::Tensor& fake_scores) {
  return torch::relu(1.0 - real_scores).mean() + torch::relu(1.0 + fake_scores).mean();
}

torch::Tensor hinge_g_loss(const torch::Tensor& fake_scores) { return -fake_scores.mean(); }

torch::Tensor scc_loss(const torch::Tensor& code_result, const torch::Tensor& code_style) {
  if (code_result.sizes() != code_style.sizes()) throw DimensionError("scc_loss: shapes differ");
  auto a = code_result.dim() == 1 ? code_result.unsqueeze(0) : code_result;
  auto b = code_style.dim() == 1 ? code_style.unsqueeze(0) : code_style;
  auto na = a / a.norm(2, 1, true).clamp_min(1e-8);
  auto nb = b / b.norm(2, 1, true).clamp_min(1e-8);
  return (1.0 - (na * nb).sum(1)).mean();
}

}  // namespace siedob
