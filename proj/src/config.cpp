#include "siedob/config.hpp"

#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "siedob/errors.hpp"

namespace siedob {

namespace fs = std::filesystem;
using nlohmann::json;

void OptimizerConfig::validate() const {
  if (!(lr_generator > 0) || !(lr_discriminator > 0)) throw ConfigError("learning rates must be positive");
  if (!(lr_inpaint >= 0)) throw ConfigError("lr_inpaint must be non-negative");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) throw ConfigError("Adam betas must lie in [0,1)");
}

void PipelineConfig::finalize(const ClassInfo& classes) {
  background.scene_size = scene_size;
  object.crop_size = crop_size;
  object.num_foreground = static_cast<int>(classes.foreground.size());
  if (!patches_explicit) patches = PatchSpec::scaled(scene_size);
  validate();
}

void PipelineConfig::validate() const {
  if (scene_size <= 0 || crop_size <= 0) throw ConfigError("scene_size and crop_size must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (inpaint_batch_size < 0) throw ConfigError("inpaint_batch_size must be non-negative");
  if (!(fusion_jitter >= 0 && fusion_jitter <= 1)) throw ConfigError("fusion_jitter must lie in [0,1]");
  if (checkpoint_every <= 0 || log_every <= 0) throw ConfigError("checkpoint_every and log_every must be positive");
  if (steps.background < 0 || steps.object_inpaint < 0 || steps.object_gen < 0 || steps.fusion < 0) {
    throw ConfigError("step counts must be non-negative");
  }
  if (!(visibility_threshold >= 0.0 && visibility_threshold <= 1.0)) throw ConfigError("visibility_threshold must lie in [0,1]");
  if (critic_width <= 0) throw ConfigError("critic_width must be positive");
  if (pairs_per_image < 1) throw ConfigError("pairs_per_image must be at least 1");
  double total = 0;
  for (const auto& [kind, weight] : mask_mix) {
    if (!(weight >= 0)) throw ConfigError("mask_mix weights must be non-negative");
    total += weight;
  }
  if (!(total > 0)) throw ConfigError("mask_mix needs a positive weight");
  loss.validate();
  optimizer.validate();
  try {
    mask_params.validate();
    patches.validate(scene_size);
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  background.validate();
  object.validate();
  fusion.validate(scene_size);
}

std::string sha256_hex(const void* data, size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

namespace {

json architecture_json(const PipelineConfig& c, const ClassInfo& classes) {
  json j = to_json(c);
  json arch;
  for (const char* key : {"scene_size", "crop_size", "dtype", "background", "object", "fusion", "critic_width", "patches", "pyramid"}) {
    arch[key] = j[key];
  }
  arch["classes"] = {{"names", classes.names}, {"foreground", classes.foreground}};
  return arch;
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError("unknown config key " + where + "." + key);
  }
}

std::string resolve(const std::string& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

std::string PipelineConfig::architecture_hash(const ClassInfo& classes) const {
  const auto text = architecture_json(*this, classes).dump();
  return sha256_hex(text.data(), text.size());
}

json to_json(const PipelineConfig& c) {
  json mix = json::object();
  for (const auto& [kind, weight] : c.mask_mix) {
    std::string name = to_string(kind);
    for (auto& ch : name) ch = static_cast<char>(std::tolower(ch));
    mix[name] = weight;
  }
  return {
      {"scene_size", c.scene_size},
      {"crop_size", c.crop_size},
      {"seed", c.seed},
      {"dtype", c.double_precision ? "float64" : "float32"},
      {"dataset", {{"train", c.train_dir}, {"test", c.test_dir}, {"classes", c.classes_path}}},
      {"checkpoint_dir", c.checkpoint_dir},
      {"log_dir", c.log_dir},
      {"loss_weights",
       {{"perceptual_background", c.loss.perceptual_background},
        {"perceptual_inpaint", c.loss.perceptual_inpaint},
        {"perceptual_object", c.loss.perceptual_object},
        {"perceptual_fusion", c.loss.perceptual_fusion},
        {"gan_local", c.loss.gan_local}}},
      {"optimizer",
       {{"lr_generator", c.optimizer.lr_generator},
        {"lr_discriminator", c.optimizer.lr_discriminator},
        {"beta1", c.optimizer.beta1},
        {"beta2", c.optimizer.beta2},
        {"lr_inpaint", c.optimizer.lr_inpaint}}},
      {"batch_size", c.batch_size},
      {"inpaint_batch_size", c.inpaint_batch_size},
      {"steps",
       {{"background", c.steps.background},
        {"object_inpaint", c.steps.object_inpaint},
        {"object_gen", c.steps.object_gen},
        {"fusion", c.steps.fusion}}},
      {"checkpoint_every", c.checkpoint_every},
      {"log_every", c.log_every},
      {"mask_mix", mix},
      {"mask_params",
       {{"min_strokes", c.mask_params.min_strokes},
        {"max_strokes", c.mask_params.max_strokes},
        {"min_brush", c.mask_params.min_brush},
        {"max_brush", c.mask_params.max_brush},
        {"min_vertices", c.mask_params.min_vertices},
        {"max_vertices", c.mask_params.max_vertices},
        {"min_segment", c.mask_params.min_segment},
        {"max_segment", c.mask_params.max_segment},
        {"min_ratio", c.mask_params.min_ratio},
        {"max_ratio", c.mask_params.max_ratio}}},
      {"visibility_threshold", c.visibility_threshold},
      {"fusion_jitter", c.fusion_jitter},
      {"adversarial", c.adversarial},
      {"train_style_verifier", c.train_style_verifier},
      {"background",
       {{"base_width", c.background.base_width},
        {"num_down", c.background.num_down},
        {"num_saspm", c.background.num_saspm},
        {"param_hidden", c.background.param_hidden}}},
      {"object",
       {{"base_width", c.object.base_width},
        {"ssnm_blocks", c.object.ssnm_blocks},
        {"param_hidden", c.object.param_hidden},
        {"inpaint_width", c.object.inpaint_width}}},
      {"fusion", {{"base_width", c.fusion.base_width}, {"num_down", c.fusion.num_down}}},
      {"critic_width", c.critic_width},
      {"patches",
       {{"count", c.patches.count},
        {"min_size", c.patches.min_size},
        {"max_size", c.patches.max_size},
        {"critic_side", c.patches.critic_side}}},
      {"metrics", {{"pairs_per_image", c.pairs_per_image}}},
      {"pyramid", {{"seed", c.pyramid_seed}, {"weights", c.pyramid_weights}}},
  };
}

PipelineConfig config_from_json(const json& j, const std::string& base_dir) {
  PipelineConfig c;
  try {
    check_keys(j,
               {"scene_size", "crop_size", "seed", "dtype", "dataset", "checkpoint_dir", "log_dir", "loss_weights",
                "optimizer", "batch_size", "inpaint_batch_size", "steps", "checkpoint_every", "log_every", "mask_mix", "mask_params",
                "visibility_threshold", "fusion_jitter", "adversarial", "train_style_verifier", "background", "object", "fusion",
                "critic_width", "patches", "metrics", "pyramid"},
               "config");
    take(j, "scene_size", c.scene_size);
    take(j, "crop_size", c.crop_size);
    take(j, "seed", c.seed);
    if (j.contains("dtype")) {
      const auto d = j.at("dtype").get<std::string>();
      if (d != "float32" && d != "float64") throw ConfigError("dtype must be float32 or float64");
      c.double_precision = d == "float64";
    }
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      check_keys(d, {"train", "test", "classes"}, "dataset");
      take(d, "train", c.train_dir);
      take(d, "test", c.test_dir);
      take(d, "classes", c.classes_path);
    }
    take(j, "checkpoint_dir", c.checkpoint_dir);
    take(j, "log_dir", c.log_dir);
    if (j.contains("loss_weights")) {
      const auto& w = j.at("loss_weights");
      check_keys(w, {"perceptual_background", "perceptual_inpaint", "perceptual_object", "perceptual_fusion", "gan_local"},
                 "loss_weights");
      take(w, "perceptual_background", c.loss.perceptual_background);
      take(w, "perceptual_inpaint", c.loss.perceptual_inpaint);
      take(w, "perceptual_object", c.loss.perceptual_object);
      take(w, "perceptual_fusion", c.loss.perceptual_fusion);
      take(w, "gan_local", c.loss.gan_local);
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      check_keys(o, {"lr_generator", "lr_discriminator", "beta1", "beta2", "lr_inpaint"}, "optimizer");
      take(o, "lr_generator", c.optimizer.lr_generator);
      take(o, "lr_discriminator", c.optimizer.lr_discriminator);
      take(o, "beta1", c.optimizer.beta1);
      take(o, "beta2", c.optimizer.beta2);
      take(o, "lr_inpaint", c.optimizer.lr_inpaint);
    }
    take(j, "batch_size", c.batch_size);
    take(j, "inpaint_batch_size", c.inpaint_batch_size);
    if (j.contains("steps")) {
      const auto& s = j.at("steps");
      check_keys(s, {"background", "object_inpaint", "object_gen", "fusion"}, "steps");
      take(s, "background", c.steps.background);
      take(s, "object_inpaint", c.steps.object_inpaint);
      take(s, "object_gen", c.steps.object_gen);
      take(s, "fusion", c.steps.fusion);
    }
    take(j, "checkpoint_every", c.checkpoint_every);
    take(j, "log_every", c.log_every);
    if (j.contains("mask_mix")) {
      c.mask_mix.clear();
      for (const auto& [name, weight] : j.at("mask_mix").items()) {
        c.mask_mix.emplace_back(parse_mask_kind(name), weight.get<double>());
      }
    }
    if (j.contains("mask_params")) {
      const auto& m = j.at("mask_params");
      check_keys(m, {"min_strokes", "max_strokes", "min_brush", "max_brush", "min_vertices", "max_vertices", "min_segment",
                     "max_segment", "min_ratio", "max_ratio"},
                 "mask_params");
      take(m, "min_strokes", c.mask_params.min_strokes);
      take(m, "max_strokes", c.mask_params.max_strokes);
      take(m, "min_brush", c.mask_params.min_brush);
      take(m, "max_brush", c.mask_params.max_brush);
      take(m, "min_vertices", c.mask_params.min_vertices);
      take(m, "max_vertices", c.mask_params.max_vertices);
      take(m, "min_segment", c.mask_params.min_segment);
      take(m, "max_segment", c.mask_params.max_segment);
      take(m, "min_ratio", c.mask_params.min_ratio);
      take(m, "max_ratio", c.mask_params.max_ratio);
    }
    take(j, "visibility_threshold", c.visibility_threshold);
    take(j, "fusion_jitter", c.fusion_jitter);
    take(j, "adversarial", c.adversarial);
    take(j, "train_style_verifier", c.train_style_verifier);
    if (j.contains("background")) {
      const auto& b = j.at("background");
      check_keys(b, {"base_width", "num_down", "num_saspm", "param_hidden"}, "background");
      take(b, "base_width", c.background.base_width);
      take(b, "num_down", c.background.num_down);
      take(b, "num_saspm", c.background.num_saspm);
      take(b, "param_hidden", c.background.param_hidden);
    }
    if (j.contains("object")) {
      const auto& o = j.at("object");
      check_keys(o, {"base_width", "ssnm_blocks", "param_hidden", "inpaint_width"}, "object");
      take(o, "base_width", c.object.base_width);
      take(o, "ssnm_blocks", c.object.ssnm_blocks);
      take(o, "param_hidden", c.object.param_hidden);
      take(o, "inpaint_width", c.object.inpaint_width);
    }
    if (j.contains("fusion")) {
      const auto& f = j.at("fusion");
      check_keys(f, {"base_width", "num_down"}, "fusion");
      take(f, "base_width", c.fusion.base_width);
      take(f, "num_down", c.fusion.num_down);
    }
    take(j, "critic_width", c.critic_width);
    if (j.contains("patches")) {
      const auto& p = j.at("patches");
      check_keys(p, {"count", "min_size", "max_size", "critic_side"}, "patches");
      c.patches = PatchSpec::scaled(c.scene_size);
      take(p, "count", c.patches.count);
      take(p, "min_size", c.patches.min_size);
      take(p, "max_size", c.patches.max_size);
      take(p, "critic_side", c.patches.critic_side);
      c.patches_explicit = true;
    }
    if (j.contains("metrics")) {
      check_keys(j.at("metrics"), {"pairs_per_image"}, "metrics");
      take(j.at("metrics"), "pairs_per_image", c.pairs_per_image);
    }
    if (j.contains("pyramid")) {
      check_keys(j.at("pyramid"), {"seed", "weights"}, "pyramid");
      take(j.at("pyramid"), "seed", c.pyramid_seed);
      take(j.at("pyramid"), "weights", c.pyramid_weights);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  c.train_dir = resolve(base_dir, c.train_dir);
  c.test_dir = resolve(base_dir, c.test_dir);
  c.classes_path = resolve(base_dir, c.classes_path);
  if (c.classes_path.empty() && !c.train_dir.empty()) c.classes_path = (fs::path(c.train_dir) / "classes.json").string();
  c.checkpoint_dir = resolve(base_dir, c.checkpoint_dir);
  c.log_dir = resolve(base_dir, c.log_dir);
  c.pyramid_weights = resolve(base_dir, c.pyramid_weights);
  if (!c.patches_explicit) c.patches = PatchSpec::scaled(c.scene_size);
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, fs::absolute(path).parent_path().string());
}

void save_config(const std::string& path, const PipelineConfig& config) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path);
  out << to_json(config).dump(2) << "\n";
}

PipelineConfig toy_config(const std::string& data_dir, const std::string& work_dir) {
  PipelineConfig c;
  c.scene_size = 64;
  c.crop_size = 32;
  c.train_dir = data_dir;
  c.test_dir = data_dir;
  c.classes_path = (fs::path(data_dir) / "classes.json").string();
  c.checkpoint_dir = (fs::path(work_dir) / "checkpoints").string();
  c.log_dir = (fs::path(work_dir) / "logs").string();
  c.batch_size = 4;
  // G_OI converges slowest on the toy set; it gets its own batch and step size.
  c.inpaint_batch_size = 16;
  c.optimizer.lr_inpaint = 3e-4;
  c.background = {16, 3, 2, 32, 64};
  c.object = {32, 2, 3, 16, 32, 32};
  c.fusion = {16, 2};
  c.critic_width = 16;
  c.patches = PatchSpec::scaled(64);
  return c;
}

}  // namespace siedob
