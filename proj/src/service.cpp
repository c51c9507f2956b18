#include "siedob/service.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>

#include "httplib.h"
#include "siedob/errors.hpp"
#include "siedob/image_io.hpp"

namespace siedob {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

HttpResponse error(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

EditService::EditService(std::shared_ptr<const Pipeline> pipeline, std::string bank_path)
    : pipeline_(std::move(pipeline)), bank_path_(std::move(bank_path)) {}

HttpResponse EditService::health() const {
  if (!pipeline_) return {503, json{{"status", "unavailable"}}.dump()};
  const auto& c = pipeline_->classes();
  json stages = json::array();
  for (const auto& tag : pipeline_->available()) stages.push_back(tag);
  return {200, json{{"status", "ok"},
                    {"checkpoint_hash", pipeline_->checkpoint_hash()},
                    {"classes", c.names},
                    {"foreground", c.foreground},
                    {"loaded", stages}}
                   .dump()};
}

HttpResponse EditService::styles(const std::string& class_name, size_t offset, size_t limit) const {
  if (!pipeline_) return error(503, "checkpoints not loaded");
  const int cls = pipeline_->classes().index_of(class_name);
  const auto* bank = pipeline_->bank();
  if (cls < 0 || !bank || bank->count(cls) == 0) return error(404, "no styles for class '" + class_name + "'");
  const size_t n = bank->count(cls);
  json items = json::array();
  const auto thumbs = style_thumbnail_dir(bank_path_);
  for (size_t i = offset; i < n && i < offset + limit; ++i) {
    const auto path = (fs::path(thumbs) / (std::to_string(cls) + "_" + std::to_string(i) + ".png")).string();
    json item{{"style_index", i}};
    item["thumbnail"] = fs::exists(path) ? json(base64_encode(read_file(path))) : json(nullptr);
    items.push_back(item);
  }
  return {200, json{{"class", class_name}, {"total", n}, {"offset", offset}, {"styles", items}}.dump()};
}

HttpResponse EditService::edit(const std::string& body) const {
  if (!pipeline_) return error(503, "checkpoints not loaded");
  const auto start = std::chrono::steady_clock::now();
  json req;
  try {
    req = json::parse(body);
  } catch (const json::exception&) {
    return error(400, "request body is not valid JSON");
  }
  Image image;
  SegmentationMap seg;
  Mask mask;
  std::optional<LabelGrid> instances;
  EditOptions opts;
  std::vector<std::pair<int, size_t>> styles;
  try {
    if (!req.is_object()) throw ValidationError("request must be a JSON object");
    for (const char* key : {"image", "seg", "mask"}) {
      if (!req.contains(key) || !req.at(key).is_string()) throw ValidationError(std::string("missing field ") + key);
    }
    image = decode_png_image(base64_decode(req.at("image").get<std::string>()));
    seg.labels = decode_png_labels(base64_decode(req.at("seg").get<std::string>()));
    mask = decode_png_mask(base64_decode(req.at("mask").get<std::string>()));
    if (req.contains("instances") && !req.at("instances").is_null()) {
      instances = decode_png_labels(base64_decode(req.at("instances").get<std::string>()));
      if (!instances->same_size(mask)) throw ValidationError("instance map size differs from the mask");
    }
    if (!image.same_size(mask) || !seg.labels.same_size(mask)) throw ValidationError("image, seg and mask sizes differ");
    if (req.contains("seed")) opts.seed = req.at("seed").get<std::uint64_t>();
    if (req.contains("styles")) {
      for (const auto& s : req.at("styles")) {
        styles.emplace_back(s.at("instance_index").get<int>(), s.at("style_index").get<size_t>());
      }
    }
  } catch (const json::exception& e) {
    return error(400, std::string("malformed request: ") + e.what());
  } catch (const ValidationError& e) {
    return error(400, e.what());
  }
  const auto& classes = pipeline_->classes();
  for (auto v : seg.labels.data) {
    if (v < 0 || v >= classes.num_classes) return error(409, "segmentation uses unknown class id " + std::to_string(v));
  }
  seg.num_classes = classes.num_classes;
  seg.foreground = classes.foreground;
  for (const auto& [index, style] : styles) opts.instance_styles[index] = style;
  if (is_empty(mask) && styles.empty()) {
    // Nothing to synthesize: hand back the caller's own bytes.
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return {200, json{{"image", req.at("image")}, {"instances", json::array()}, {"timing_ms", ms}}.dump()};
  }

  EditResult result;
  try {
    result = pipeline_->edit(image, seg, mask, instances, opts);
  } catch (const StageError& e) {
    return error(503, e.what());
  } catch (const NoStylesError& e) {
    return error(503, e.what());
  } catch (const std::invalid_argument& e) {
    return error(400, e.what());
  }
  for (const auto& [index, style] : styles) {
    if (index < 0 || static_cast<size_t>(index) >= result.instances.size()) {
      return error(400, "styles: instance_index " + std::to_string(index) + " does not name an edited instance");
    }
  }
  json list = json::array();
  for (const auto& inst : result.instances) {
    list.push_back({{"instance_index", inst.index},
                    {"class_name", classes.names.at(static_cast<size_t>(inst.class_id))},
                    {"mode", to_string(inst.mode)},
                    {"bbox", {{"top", inst.bbox.top}, {"left", inst.bbox.left}, {"height", inst.bbox.height}, {"width", inst.bbox.width}}},
                    {"used_style_index", inst.style_index ? json(*inst.style_index) : json(nullptr)}});
  }
  const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return {200, json{{"image", base64_encode(encode_png(result.image))}, {"instances", list}, {"timing_ms", ms}}.dump()};
}

std::unique_ptr<httplib::Server> EditService::make_server() const {
  auto server = std::make_unique<httplib::Server>();
  auto send = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server->Post("/api/edit", [this, send](const httplib::Request& req, httplib::Response& res) { send(res, edit(req.body)); });
  server->Get("/api/styles", [this, send](const httplib::Request& req, httplib::Response& res) {
    auto number = [&](const char* key, size_t fallback) -> std::optional<size_t> {
      if (!req.has_param(key)) return fallback;
      try {
        return static_cast<size_t>(std::stoull(req.get_param_value(key)));
      } catch (const std::exception&) {
        return std::nullopt;
      }
    };
    const auto offset = number("offset", 0), limit = number("limit", 50);
    if (!req.has_param("class") || !offset || !limit) return send(res, error(400, "expected class, offset and limit parameters"));
    send(res, styles(req.get_param_value("class"), *offset, *limit));
  });
  server->Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  return server;
}

int serve(PipelineConfig config, const std::string& host, int port) {
  if (const char* dir = std::getenv("SIEDOB_CHECKPOINT_DIR"); dir && *dir) config.checkpoint_dir = dir;
  std::shared_ptr<const Pipeline> pipeline;
  try {
    pipeline = std::make_shared<const Pipeline>(Pipeline::from_checkpoint(config));
  } catch (const std::exception& e) {
    std::cerr << "warning: checkpoints not loaded (" << e.what() << "); serving 503\n";
  }
  EditService service(pipeline, (fs::path(config.checkpoint_dir) / kBankName).string());
  auto server = service.make_server();
  std::cerr << "listening on " << host << ":" << port << "\n";
  if (!server->listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace siedob
