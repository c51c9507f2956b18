#pragma once

#include <torch/torch.h>

#include "siedob/grid.hpp"
#include "siedob/scene.hpp"

namespace siedob {

/// [0,1] H×W×3 image to a [1,3,H,W] tensor in [−1,1].
torch::Tensor image_to_tensor(const Image& image, torch::Dtype dtype = torch::kFloat32);
/// [1,3,H,W] or [3,H,W] tensor in [−1,1] back to a [0,1] image (values clamped).
Image tensor_to_image(const torch::Tensor& t);

/// [1,1,H,W] tensor of 0/1.
torch::Tensor mask_to_tensor(const Mask& mask, torch::Dtype dtype = torch::kFloat32);
Mask tensor_to_mask(const torch::Tensor& t);

/// [1,L,H,W] one-hot expansion of a label grid.
torch::Tensor onehot(const LabelGrid& labels, int num_classes, torch::Dtype dtype = torch::kFloat32);

/// One-hot over the foreground classes only: channel k is set where the label is foreground[k]
/// and `region` (when non-empty) is set. Shape [1,K,H,W].
torch::Tensor foreground_onehot(const LabelGrid& labels, const std::vector<int>& foreground, const Mask& region,
                                torch::Dtype dtype = torch::kFloat32);

/// Nearest-neighbour downsample of one-hot maps [N,L,H,W] to size h×w (keeps exact one-hot rows).
torch::Tensor downsample_onehot(const torch::Tensor& onehot, int64_t h, int64_t w);

/// Area-average then threshold at 0.5 for binary masks [N,1,H,W].
torch::Tensor downsample_mask(const torch::Tensor& mask, int64_t h, int64_t w);

/// image_to_tensor(image) with pixels outside `keep` set to 0 in network space.
torch::Tensor masked_image_tensor(const Image& image, const Mask& keep, torch::Dtype dtype = torch::kFloat32);

/// [1,K,S,S] semantic map of one object: channel `fg_index` carries `mask`, the rest are zero.
torch::Tensor object_semantic(const Mask& mask, int fg_index, int num_foreground, torch::Dtype dtype = torch::kFloat32);

}  // namespace siedob
