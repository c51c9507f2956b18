#include "siedob/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <random>

#include "siedob/errors.hpp"
#include "siedob/tensor_convert.hpp"

namespace siedob {

namespace fs = std::filesystem;

Pipeline::Pipeline(PipelineConfig config, ClassInfo classes, Networks nets, std::set<std::string> available,
                   std::optional<StyleBank> bank)
    : state_(std::make_shared<State>(State{std::move(config), std::move(classes), std::move(nets), std::move(available),
                                           std::move(bank)})) {
  state_->nets.set_training(false);
}

Pipeline Pipeline::from_checkpoint(PipelineConfig config) {
  if (config.classes_path.empty()) throw ConfigError("config names no classes file");
  auto classes = load_classes(config.classes_path);
  config.finalize(classes);
  auto nets = Networks::create(config, classes);
  auto loaded = load_checkpoint(config.checkpoint_dir, nets, config, classes);
  std::optional<StyleBank> bank;
  const auto bank_path = fs::path(config.checkpoint_dir) / kBankName;
  if (fs::exists(bank_path)) {
    bank = load_style_bank(bank_path.string());
    loaded.insert("bank");
  }
  return Pipeline(std::move(config), std::move(classes), std::move(nets), std::move(loaded), std::move(bank));
}

void Pipeline::require(const std::string& tag, const char* what) const {
  if (!state_->available.count(tag)) {
    throw StageError(std::string(what) + " is not available: no trained " + tag + " checkpoint in " +
                     state_->config.checkpoint_dir);
  }
}

EditResult Pipeline::edit(const Image& image, const SegmentationMap& seg, const Mask& mask,
                          const std::optional<LabelGrid>& instances, const EditOptions& options) const {
  if (!image.same_size(mask) || !seg.labels.same_size(mask) || image.channels != 3) {
    throw DimensionError("edit: image, segmentation and mask sizes differ");
  }
  if (instances && !instances->same_size(mask)) throw DimensionError("edit: instance map size differs");
  seg.validate();
  if (seg.num_classes != state_->classes.num_classes) throw ValidationError("edit: segmentation class count differs from the model");

  EditResult result;
  const auto& cfg = state_->config;
  auto& nets = state_->nets;
  const auto dtype = cfg.dtype();
  const int k = static_cast<int>(seg.foreground.size());

  const auto dec = disassemble(erase_input(image, mask), seg, mask, instances,
                               DisassembleOptions{cfg.crop_size, cfg.visibility_threshold});
  for (size_t i = 0; i < dec.objects.size(); ++i) {
    const auto& rec = dec.objects[i].record;
    result.instances.push_back({static_cast<int>(i), rec.class_id, rec.instance_id, rec.mode, rec.bbox,
                                rec.visible_fraction, std::nullopt});
  }
  if (is_empty(mask)) {
    result.image = result.composite = result.background = image;
    return result;
  }

  torch::InferenceMode guard;
  const auto seg_t = onehot(seg.labels, seg.num_classes, dtype);
  const auto mask_t = mask_to_tensor(mask, dtype);

  require("G_B", "background generation");
  Mask keep(mask.height, mask.width);
  for (size_t i = 0; i < keep.data.size(); ++i) keep.data[i] = dec.background_mask.data[i] && !mask.data[i];
  const auto bg_out = nets.g_b->forward(masked_image_tensor(image, keep, dtype), seg_t, mask_t);
  result.background = blend_known(image, tensor_to_image(bg_out), mask);

  std::mt19937_64 rng(options.seed);
  std::vector<GeneratedObject> generated;
  for (size_t i = 0; i < dec.objects.size(); ++i) {
    const auto& obj = dec.objects[i];
    const int fg = seg.foreground_index(obj.record.class_id);
    const auto semantic = object_semantic(obj.mask, fg, k, dtype);
    torch::Tensor out;
    if (obj.record.mode == ObjectMode::Inpaint) {
      require("G_OI", "object inpainting");
      const auto edit_crop = crop_mask(mask, obj.placement);
      out = nets.g_oi->forward(image_to_tensor(obj.image, dtype), mask_to_tensor(edit_crop, dtype), semantic);
    } else {
      require("G_OG", "object generation");
      const int index = static_cast<int>(i);
      StyleCode code;
      if (auto it = options.instance_codes.find(index); it != options.instance_codes.end()) {
        code = it->second;
      } else {
        if (!state_->bank) throw StageError("object generation needs a style bank; run build-bank first");
        const auto& entries = state_->bank->entries(obj.record.class_id);
        size_t pick;
        if (auto a = options.instance_styles.find(index); a != options.instance_styles.end()) {
          pick = a->second;
        } else if (auto b = options.class_styles.find(obj.record.class_id); b != options.class_styles.end()) {
          pick = b->second;
        } else {
          pick = sample_style_index(*state_->bank, obj.record.class_id, rng);
        }
        if (pick >= entries.size()) {
          throw ValidationError("style index " + std::to_string(pick) + " out of range for class " +
                                std::to_string(obj.record.class_id) + " (" + std::to_string(entries.size()) + " entries)");
        }
        code = entries[pick];
        result.instances[i].style_index = pick;
      }
      if (code.class_id != obj.record.class_id) throw ValidationError("style code class differs from the object class");
      out = nets.g_og->forward(semantic, style_codes_tensor({code}, dtype), mask_to_tensor(obj.mask, dtype));
    }
    generated.push_back({tensor_to_image(out), obj.record, obj.placement});
  }
  result.composite = compose(result.background, generated);

  if (!options.fusion) {
    result.image = blend_known(image, result.composite, mask);
    return result;
  }
  require("F_net", "fusion");
  // The residual is applied in [0,1] space so a zero residual leaves the composite bit-identical
  // (a round trip through [−1,1] would not).
  const auto residual = nets.f_net->residual(image_to_tensor(result.composite, dtype), seg_t, mask_t);
  const auto r = (residual[0].permute({1, 2, 0}).to(torch::kFloat64) * 0.5).contiguous();
  const auto* rp = r.data_ptr<double>();
  Image fused = result.composite;
  for (size_t i = 0; i < fused.data.size(); ++i) {
    fused.data[i] = static_cast<float>(std::clamp(static_cast<double>(fused.data[i]) + rp[i], 0.0, 1.0));
  }
  result.image = blend_known(image, fused, mask);
  return result;
}

}  // namespace siedob
