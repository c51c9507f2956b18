#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "siedob/objectives.hpp"
#include "siedob/pipeline.hpp"

namespace siedob {

/// Perceptual distance between two [0,1] images in the shared pyramid's feature space.
double perceptual_distance(const Image& a, const Image& b, FeaturePyramid& pyramid);

/// Mean absolute difference in [0,1] image space.
double image_l1(const Image& a, const Image& b);

/// Mean perceptual distance over corresponding pairs. Throws ValidationError on a count mismatch.
double paired_distance(const std::vector<Image>& results, const std::vector<Image>& truths, FeaturePyramid& pyramid);

/// Rows are the pooled pyramid features of each image.
Eigen::MatrixXd pooled_features(const std::vector<Image>& images, FeaturePyramid& pyramid);

/// Fréchet distance between Gaussian fits of pooled pyramid features (a proxy for FID).
double proxy_frechet(const std::vector<Image>& real, const std::vector<Image>& fake, FeaturePyramid& pyramid);

/// `draw(image_index, k)` returns the k-th sampled result for an image. For each image,
/// 2·pairs_per_image results are drawn and split into consecutive pairs; the score is the
/// mean pair distance per image, averaged over images (a proxy for the LPIPS diversity score).
double diversity_score(const std::function<Image(size_t, int)>& draw, size_t image_count, int pairs_per_image,
                       FeaturePyramid& pyramid);

struct MetricValue {
  double value = 0.0;
  size_t count = 0;
};

struct EvalReport {
  std::map<std::string, MetricValue> metrics;
  std::string config_hash;
  nlohmann::json to_json() const;
};

/// The fixed evaluation mask of test image `index`: drawn from the config's mask mix with a
/// generator seeded from (seed, index).
Mask evaluation_mask(const PipelineConfig& config, int height, int width, std::uint64_t seed, size_t index);

/// Edits every test sample under its evaluation mask and reports full-frame L1, paired
/// perceptual distance, proxy Fréchet distance and diversity.
EvalReport evaluate(const Pipeline& pipeline, const std::vector<Sample>& test, FeaturePyramid& pyramid,
                    std::uint64_t seed);

}  // namespace siedob
