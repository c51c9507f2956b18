#include <filesystem>

#include "siedob/checkpoint.hpp"
#include "siedob/errors.hpp"
#include "siedob/image_io.hpp"
#include "siedob/pipeline.hpp"
#include "siedob/tensor_convert.hpp"

namespace siedob {

namespace fs = std::filesystem;

StyleCode encode_style(StyleEncoder& encoder, const Image& crop, const Mask& crop_mask, int class_id,
                       torch::Dtype dtype) {
  torch::InferenceMode guard;
  return to_style_code(encoder->forward(masked_image_tensor(crop, crop_mask, dtype))[0], class_id);
}

StyleBank build_style_bank(const std::vector<Sample>& dataset, StyleEncoder& encoder, const PipelineConfig& config,
                           const std::string& thumbnail_base) {
  if (dataset.empty()) throw IoError("build_style_bank: empty dataset");
  encoder->eval();
  StyleBank bank;
  std::string names;
  for (const auto& s : dataset) names += s.name + ";";
  bank.dataset_id = sha256_hex(names.data(), names.size()).substr(0, 16);
  bank.encoder_hash = module_checksum(*encoder);

  std::string thumbs;
  if (!thumbnail_base.empty()) {
    thumbs = style_thumbnail_dir(thumbnail_base);
    fs::create_directories(thumbs);
  }
  for (const auto& sample : dataset) {
    for (const auto& rec : extract_instances(sample.seg, sample.instances)) {
      const auto crop = crop_object(sample.image, rec, config.crop_size);
      const auto code = encode_style(encoder, crop.image, crop.mask, rec.class_id, config.dtype());
      if (!thumbs.empty()) {
        const auto index = bank.count(rec.class_id);
        write_image((fs::path(thumbs) / (std::to_string(rec.class_id) + "_" + std::to_string(index) + ".png")).string(),
                    crop.image);
      }
      bank.add(code);
    }
  }
  return bank;
}

}  // namespace siedob
