#include "siedob/metrics.hpp"

#include <cmath>
#include <random>

#include "siedob/errors.hpp"
#include "siedob/frechet.hpp"
#include "siedob/masks.hpp"
#include "siedob/tensor_convert.hpp"

namespace siedob {

namespace {

torch::Dtype pyramid_dtype(FeaturePyramid& pyramid) { return pyramid->conv1->weight.scalar_type(); }

}  // namespace

double perceptual_distance(const Image& a, const Image& b, FeaturePyramid& pyramid) {
  if (!a.same_size(b) || a.channels != b.channels) throw DimensionError("perceptual_distance: image sizes differ");
  torch::InferenceMode guard;
  const auto dtype = pyramid_dtype(pyramid);
  return perceptual_loss(image_to_tensor(a, dtype), image_to_tensor(b, dtype), pyramid).item<double>();
}

double image_l1(const Image& a, const Image& b) {
  if (!a.same_size(b) || a.channels != b.channels) throw DimensionError("image_l1: image sizes differ");
  double sum = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) sum += std::abs(static_cast<double>(a.data[i]) - b.data[i]);
  return a.data.empty() ? 0.0 : sum / static_cast<double>(a.data.size());
}

double paired_distance(const std::vector<Image>& results, const std::vector<Image>& truths, FeaturePyramid& pyramid) {
  if (results.size() != truths.size()) throw ValidationError("paired_distance: result and ground-truth counts differ");
  if (results.empty()) throw ValidationError("paired_distance: no samples");
  double sum = 0.0;
  for (size_t i = 0; i < results.size(); ++i) sum += perceptual_distance(results[i], truths[i], pyramid);
  return sum / static_cast<double>(results.size());
}

Eigen::MatrixXd pooled_features(const std::vector<Image>& images, FeaturePyramid& pyramid) {
  torch::InferenceMode guard;
  const auto dtype = pyramid_dtype(pyramid);
  Eigen::MatrixXd out;
  for (size_t i = 0; i < images.size(); ++i) {
    auto f = pyramid->pooled(image_to_tensor(images[i], dtype))[0].to(torch::kFloat64).contiguous();
    if (i == 0) out.resize(static_cast<Eigen::Index>(images.size()), f.numel());
    for (int64_t j = 0; j < f.numel(); ++j) out(static_cast<Eigen::Index>(i), j) = f.data_ptr<double>()[j];
  }
  return out;
}

double proxy_frechet(const std::vector<Image>& real, const std::vector<Image>& fake, FeaturePyramid& pyramid) {
  if (real.size() < 2 || fake.size() < 2) throw ValidationError("proxy_frechet needs at least two samples per set");
  return frechet_distance(pooled_features(real, pyramid), pooled_features(fake, pyramid));
}

double diversity_score(const std::function<Image(size_t, int)>& draw, size_t image_count, int pairs_per_image,
                       FeaturePyramid& pyramid) {
  if (pairs_per_image < 1) throw ValidationError("diversity_score: pairs_per_image must be at least 1");
  if (image_count == 0) throw ValidationError("diversity_score: no images");
  double total = 0.0;
  for (size_t i = 0; i < image_count; ++i) {
    double per_image = 0.0;
    for (int p = 0; p < pairs_per_image; ++p) {
      per_image += perceptual_distance(draw(i, 2 * p), draw(i, 2 * p + 1), pyramid);
    }
    total += per_image / pairs_per_image;
  }
  return total / static_cast<double>(image_count);
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["config_hash"] = config_hash;
  j["metrics"] = nlohmann::json::object();
  for (const auto& [name, m] : metrics) j["metrics"][name] = {{"value", m.value}, {"count", m.count}};
  j["note"] = "perceptual, Frechet and diversity values use a fixed random feature pyramid; they are proxies, "
              "not comparable with VGG/Inception/LPIPS numbers";
  return j;
}

Mask evaluation_mask(const PipelineConfig& config, int height, int width, std::uint64_t seed, size_t index) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + index);
  std::vector<double> w;
  for (const auto& [kind, weight] : config.mask_mix) w.push_back(weight);
  std::discrete_distribution<size_t> pick(w.begin(), w.end());
  return generate_training_mask(config.mask_mix[pick(rng)].first, height, width, rng, config.mask_params);
}

EvalReport evaluate(const Pipeline& pipeline, const std::vector<Sample>& test, FeaturePyramid& pyramid,
                    std::uint64_t seed) {
  if (test.empty()) throw ValidationError("evaluate: empty test set");
  std::vector<Image> results, truths;
  std::vector<Mask> masks;
  double l1 = 0.0;
  for (size_t i = 0; i < test.size(); ++i) {
    const auto& s = test[i];
    masks.push_back(evaluation_mask(pipeline.config(), s.image.height, s.image.width, seed, i));
    EditOptions opts;
    opts.seed = seed + i;
    results.push_back(pipeline.edit(s.image, s.seg, masks.back(), s.instances, opts).image);
    truths.push_back(s.image);
    l1 += image_l1(results.back(), s.image);
  }
  EvalReport report;
  report.config_hash = pipeline.checkpoint_hash();
  report.metrics["l1"] = {l1 / static_cast<double>(test.size()), test.size()};
  report.metrics["paired_distance"] = {paired_distance(results, truths, pyramid), test.size()};
  if (test.size() >= 2) report.metrics["proxy_frechet"] = {proxy_frechet(truths, results, pyramid), test.size()};
  const int pairs = pipeline.config().pairs_per_image;
  auto draw = [&](size_t i, int k) {
    EditOptions opts;
    opts.seed = seed * 7919 + i * 1000 + static_cast<std::uint64_t>(k) + 1;
    return pipeline.edit(test[i].image, test[i].seg, masks[i], test[i].instances, opts).image;
  };
  report.metrics["diversity"] = {diversity_score(draw, test.size(), pairs, pyramid), test.size()};
  return report;
}

}  // namespace siedob
