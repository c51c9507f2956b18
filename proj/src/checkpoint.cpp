#include "siedob/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include "siedob/errors.hpp"

namespace siedob {

namespace fs = std::filesystem;
using nlohmann::json;

Stage parse_stage(const std::string& name) {
  if (name == "BACKGROUND") return Stage::Background;
  if (name == "OBJECT_INPAINT") return Stage::ObjectInpaint;
  if (name == "OBJECT_GEN") return Stage::ObjectGen;
  if (name == "FUSION") return Stage::Fusion;
  throw ConfigError("unknown stage " + name + " (expected BACKGROUND, OBJECT_INPAINT, OBJECT_GEN or FUSION)");
}

const char* to_string(Stage stage) {
  switch (stage) {
    case Stage::Background: return "BACKGROUND";
    case Stage::ObjectInpaint: return "OBJECT_INPAINT";
    case Stage::ObjectGen: return "OBJECT_GEN";
    case Stage::Fusion: return "FUSION";
  }
  return "?";
}

std::vector<std::string> stage_tags(Stage stage) {
  switch (stage) {
    case Stage::Background: return {"G_B", "D_G", "D_BAP"};
    case Stage::ObjectInpaint: return {"G_OI", "D_obj.inpaint"};
    case Stage::ObjectGen: return {"G_OG", "E_s", "E_s_prime", "D_obj.gen"};
    case Stage::Fusion: return {"F_net", "D_F"};
  }
  return {};
}

const std::vector<std::string>& all_tags() {
  static const std::vector<std::string> tags = {"G_B", "D_G",       "D_BAP",     "G_OI",  "D_obj.inpaint", "G_OG",
                                                "E_s", "E_s_prime", "D_obj.gen", "F_net", "D_F"};
  return tags;
}

namespace {

template <class Make>
auto seeded(std::uint64_t seed, const std::string& tag, Make make) {
  // FNV-1a over the tag keeps per-network seeds stable across builds.
  std::uint64_t h = 1469598103934665603ull;
  for (char c : tag) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
  torch::manual_seed(seed ^ h);
  return make();
}

struct TensorEntry {
  std::string name;
  torch::Tensor tensor;
};

std::vector<TensorEntry> state_of(const torch::nn::Module& m) {
  std::vector<TensorEntry> out;
  for (const auto& p : m.named_parameters(true)) out.push_back({"param:" + p.key(), p.value()});
  for (const auto& b : m.named_buffers(true)) out.push_back({"buffer:" + b.key(), b.value()});
  return out;
}

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "float32";
    case torch::kFloat64: return "float64";
    case torch::kBool: return "bool";
    case torch::kInt64: return "int64";
    default: throw ConfigError("unsupported tensor dtype in checkpoint");
  }
}

torch::ScalarType dtype_from(const std::string& s) {
  if (s == "float32") return torch::kFloat32;
  if (s == "float64") return torch::kFloat64;
  if (s == "bool") return torch::kBool;
  if (s == "int64") return torch::kInt64;
  throw IoError("checkpoint: unknown dtype " + s);
}

json read_manifest(const std::string& dir) {
  const auto path = fs::path(dir) / kManifestName;
  if (!fs::exists(path)) return json();
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("checkpoint manifest " + path.string() + " is corrupt: " + e.what());
  }
}

}  // namespace

Networks Networks::create(const PipelineConfig& config, const ClassInfo& classes) {
  const auto seed = config.seed;
  const int l = classes.num_classes;
  const int k = static_cast<int>(classes.foreground.size());
  const int cw = config.critic_width;
  Networks n;
  n.g_b = seeded(seed, "G_B", [&] { return BackgroundGenerator(config.background, l, classes.foreground); });
  n.d_g = seeded(seed, "D_G", [&] { return PatchCritic(3 + l, cw); });
  n.d_bap = seeded(seed, "D_BAP", [&] { return PatchCritic(3, cw); });
  n.g_oi = seeded(seed, "G_OI", [&] { return ObjectInpainter(config.object); });
  n.d_obj_inpaint = seeded(seed, "D_obj.inpaint", [&] { return PatchCritic(3 + k, cw); });
  n.g_og = seeded(seed, "G_OG", [&] { return ObjectGenerator(config.object); });
  n.e_s = seeded(seed, "E_s", [&] { return StyleEncoder(config.object); });
  n.e_s_prime = seeded(seed, "E_s_prime", [&] { return StyleEncoder(config.object); });
  n.d_obj_gen = seeded(seed, "D_obj.gen", [&] { return PatchCritic(3 + k, cw); });
  n.f_net = seeded(seed, "F_net", [&] { return FusionNet(config.fusion, l); });
  n.d_f = seeded(seed, "D_F", [&] { return PatchCritic(3 + l, cw); });
  for (const auto& tag : all_tags()) n.module(tag)->to(config.dtype());
  n.set_training(false);
  return n;
}

std::shared_ptr<torch::nn::Module> Networks::module(const std::string& tag) const {
  if (tag == "G_B") return g_b.ptr();
  if (tag == "D_G") return d_g.ptr();
  if (tag == "D_BAP") return d_bap.ptr();
  if (tag == "G_OI") return g_oi.ptr();
  if (tag == "D_obj.inpaint") return d_obj_inpaint.ptr();
  if (tag == "G_OG") return g_og.ptr();
  if (tag == "E_s") return e_s.ptr();
  if (tag == "E_s_prime") return e_s_prime.ptr();
  if (tag == "D_obj.gen") return d_obj_gen.ptr();
  if (tag == "F_net") return f_net.ptr();
  if (tag == "D_F") return d_f.ptr();
  throw ConfigError("unknown network tag " + tag);
}

void Networks::set_training(bool on) {
  for (const auto& tag : all_tags()) module(tag)->train(on);
}

std::string module_checksum(const torch::nn::Module& module) {
  std::string blob;
  for (const auto& e : state_of(module)) {
    auto t = e.tensor.detach().contiguous();
    blob += e.name;
    for (auto s : t.sizes()) blob += std::to_string(s) + ",";
    blob.append(static_cast<const char*>(t.data_ptr()), t.nbytes());
  }
  return sha256_hex(blob.data(), blob.size());
}

void save_checkpoint(const std::string& dir, const Networks& nets, const std::vector<std::string>& tags,
                     const PipelineConfig& config, const ClassInfo& classes) {
  fs::create_directories(dir);
  const auto hash = config.architecture_hash(classes);
  json manifest = read_manifest(dir);
  if (!manifest.is_object() || manifest.value("config_hash", "") != hash) {
    manifest = json{{"format", "siedob-checkpoint"}, {"version", 1}, {"networks", json::object()}};
  }
  manifest["config_hash"] = hash;
  manifest["config"] = to_json(config);
  manifest["classes"] = {{"names", classes.names}, {"num_classes", classes.num_classes}, {"foreground", classes.foreground}};

  for (const auto& tag : tags) {
    const auto module = nets.module(tag);
    const auto file = tag + ".bin";
    const auto tmp = fs::path(dir) / (file + ".tmp");
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp.string());
    json tensors = json::array();
    std::uint64_t offset = 0;
    for (const auto& e : state_of(*module)) {
      auto t = e.tensor.detach().contiguous().cpu();
      out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
      tensors.push_back({{"name", e.name}, {"shape", t.sizes().vec()}, {"dtype", dtype_name(t.scalar_type())},
                         {"offset", offset}, {"bytes", t.nbytes()}});
      offset += t.nbytes();
    }
    out.close();
    if (!out) throw IoError("failed writing " + tmp.string());
    fs::rename(tmp, fs::path(dir) / file);
    manifest["networks"][tag] = {{"file", file}, {"bytes", offset}, {"checksum", module_checksum(*module)},
                                 {"tensors", tensors}};
  }
  const auto tmp = fs::path(dir) / (std::string(kManifestName) + ".tmp");
  {
    std::ofstream out(tmp);
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("cannot write checkpoint manifest in " + dir);
  }
  fs::rename(tmp, fs::path(dir) / kManifestName);
}

std::set<std::string> load_checkpoint(const std::string& dir, Networks& nets, const PipelineConfig& config,
                                      const ClassInfo& classes) {
  std::set<std::string> loaded;
  const json manifest = read_manifest(dir);
  if (manifest.is_null()) return loaded;
  const auto hash = config.architecture_hash(classes);
  if (manifest.value("config_hash", "") != hash) {
    throw ConfigError("checkpoint in " + dir + " was written for a different architecture (hash " +
                      manifest.value("config_hash", "?").substr(0, 12) + " vs " + hash.substr(0, 12) + ")");
  }
  for (const auto& [tag, entry] : manifest.at("networks").items()) {
    const auto module = nets.module(tag);
    const auto path = fs::path(dir) / entry.at("file").get<std::string>();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing checkpoint file " + path.string());
    std::map<std::string, json> by_name;
    for (const auto& t : entry.at("tensors")) by_name[t.at("name").get<std::string>()] = t;
    torch::NoGradGuard guard;
    for (auto& e : state_of(*module)) {
      auto it = by_name.find(e.name);
      if (it == by_name.end()) throw IoError("checkpoint " + tag + " lacks tensor " + e.name);
      const auto& t = it->second;
      const auto shape = t.at("shape").get<std::vector<int64_t>>();
      if (shape != e.tensor.sizes().vec()) throw IoError("checkpoint " + tag + ": shape mismatch for " + e.name);
      auto buf = torch::empty(shape, torch::TensorOptions().dtype(dtype_from(t.at("dtype").get<std::string>())));
      in.seekg(static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
      in.read(static_cast<char*>(buf.data_ptr()), static_cast<std::streamsize>(buf.nbytes()));
      if (!in) throw IoError("checkpoint file " + path.string() + " is truncated");
      e.tensor.copy_(buf.to(e.tensor.scalar_type()));
    }
    loaded.insert(tag);
  }
  return loaded;
}

std::string checkpoint_hash(const std::string& dir) {
  const json manifest = read_manifest(dir);
  return manifest.is_object() ? manifest.value("config_hash", "") : "";
}

}  // namespace siedob
