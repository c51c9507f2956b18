#include "siedob/tensor_convert.hpp"

#include "siedob/errors.hpp"

namespace siedob {

namespace F = torch::nn::functional;

torch::Tensor image_to_tensor(const Image& image, torch::Dtype dtype) {
  auto t = torch::from_blob(const_cast<float*>(image.data.data()), {image.height, image.width, image.channels},
                            torch::kFloat32)
               .permute({2, 0, 1})
               .unsqueeze(0)
               .to(dtype)
               .contiguous();
  return t * 2.0 - 1.0;
}

Image tensor_to_image(const torch::Tensor& t) {
  auto x = t.dim() == 4 ? t[0] : t;
  if (x.dim() != 3) throw DimensionError("tensor_to_image: expected [C,H,W]");
  x = ((x.detach().to(torch::kFloat64) + 1.0) / 2.0).clamp(0.0, 1.0).to(torch::kFloat32).permute({1, 2, 0}).contiguous();
  Image img(static_cast<int>(x.size(0)), static_cast<int>(x.size(1)), static_cast<int>(x.size(2)));
  std::memcpy(img.data.data(), x.data_ptr<float>(), img.data.size() * sizeof(float));
  return img;
}

torch::Tensor mask_to_tensor(const Mask& mask, torch::Dtype dtype) {
  auto t = torch::from_blob(const_cast<std::uint8_t*>(mask.data.data()), {1, 1, mask.height, mask.width}, torch::kUInt8);
  return (t != 0).to(dtype);
}

Mask tensor_to_mask(const torch::Tensor& t) {
  auto x = t.detach().reshape({t.size(-2), t.size(-1)}).gt(0.5).to(torch::kUInt8).contiguous();
  Mask m(static_cast<int>(x.size(0)), static_cast<int>(x.size(1)));
  std::memcpy(m.data.data(), x.data_ptr<std::uint8_t>(), m.data.size());
  return m;
}

torch::Tensor onehot(const LabelGrid& labels, int num_classes, torch::Dtype dtype) {
  auto idx = torch::from_blob(const_cast<std::int32_t*>(labels.data.data()), {labels.height, labels.width}, torch::kInt32)
                 .to(torch::kLong);
  return F::one_hot(idx, num_classes).permute({2, 0, 1}).unsqueeze(0).to(dtype).contiguous();
}

torch::Tensor foreground_onehot(const LabelGrid& labels, const std::vector<int>& foreground, const Mask& region,
                                torch::Dtype dtype) {
  const int k = static_cast<int>(foreground.size());
  std::vector<float> buf(static_cast<size_t>(k) * labels.size(), 0.0f);
  for (int y = 0; y < labels.height; ++y) {
    for (int x = 0; x < labels.width; ++x) {
      if (region.size() && !region.at(y, x)) continue;
      for (int c = 0; c < k; ++c) {
        if (labels.at(y, x) == foreground[static_cast<size_t>(c)]) {
          buf[(static_cast<size_t>(c) * labels.height + y) * labels.width + x] = 1.0f;
        }
      }
    }
  }
  return torch::from_blob(buf.data(), {1, k, labels.height, labels.width}, torch::kFloat32).to(dtype).clone();
}

torch::Tensor downsample_onehot(const torch::Tensor& onehot, int64_t h, int64_t w) {
  if (onehot.size(2) == h && onehot.size(3) == w) return onehot;
  return F::interpolate(onehot, F::InterpolateFuncOptions().size(std::vector<int64_t>{h, w}).mode(torch::kNearest));
}

torch::Tensor downsample_mask(const torch::Tensor& mask, int64_t h, int64_t w) {
  if (mask.size(2) == h && mask.size(3) == w) return mask;
  auto avg = F::adaptive_avg_pool2d(mask, F::AdaptiveAvgPool2dFuncOptions({h, w}));
  return avg.ge(0.5).to(mask.scalar_type());
}

torch::Tensor masked_image_tensor(const Image& image, const Mask& keep, torch::Dtype dtype) {
  if (!image.same_size(keep)) throw DimensionError("masked_image_tensor: image and mask sizes differ");
  return image_to_tensor(image, dtype) * mask_to_tensor(keep, dtype);
}

torch::Tensor object_semantic(const Mask& mask, int fg_index, int num_foreground, torch::Dtype dtype) {
  if (fg_index < 0 || fg_index >= num_foreground) throw ValidationError("object_semantic: foreground index out of range");
  auto out = torch::zeros({1, num_foreground, mask.height, mask.width}, dtype);
  out.narrow(1, fg_index, 1).copy_(mask_to_tensor(mask, dtype));
  return out;
}

}  // namespace siedob
