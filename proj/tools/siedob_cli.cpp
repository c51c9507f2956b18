#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "siedob/app.hpp"
#include "siedob/checkpoint.hpp"
#include "siedob/config.hpp"
#include "siedob/dataset.hpp"
#include "siedob/errors.hpp"
#include "siedob/image_io.hpp"
#include "siedob/metrics.hpp"
#include "siedob/pipeline.hpp"
#include "siedob/service.hpp"
#include "siedob/training.hpp"

namespace fs = std::filesystem;
using namespace siedob;
using nlohmann::json;

namespace {

int make_toy(const std::string& out, int count, int test_count, std::uint64_t seed) {
  std::cout << make_toy_workspace(out, count, test_count, seed) << "\n";
  return 0;
}

int train(const std::string& config_path, const std::string& stage_name, int steps) {
  const auto stage = parse_stage(stage_name);
  const auto reports = train_stage(config_path, stage, steps, [](const LossReport& r) {
    std::cerr << to_string(r.stage) << " step " << r.step << " total " << r.total << " critic " << r.critic << "\n";
  });
  std::cout << "trained " << to_string(stage) << " (" << (reports.empty() ? 0 : reports.back().step) << " steps)\n";
  return 0;
}

int bank(const std::string& config_path) {
  const auto b = build_bank(config_path);
  std::cout << "wrote " << b.size() << " style codes\n";
  return 0;
}

// "car:3" or "3:3".
std::pair<int, size_t> parse_style(const std::string& text, const ClassInfo& classes) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw ValidationError("--style expects class:index, got '" + text + "'");
  }
  const auto name = text.substr(0, colon);
  int cls = classes.index_of(name);
  size_t index = 0;
  try {
    if (cls < 0) cls = std::stoi(name);
    index = std::stoul(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("--style: cannot parse '" + text + "'");
  }
  if (cls < 0 || cls >= classes.num_classes) throw ValidationError("--style: unknown class '" + name + "'");
  return {cls, index};
}

int edit(const std::string& config_path, const std::string& image_path, const std::string& seg_path,
         const std::string& mask_path, const std::string& inst_path, const std::vector<std::string>& style_args,
         std::uint64_t seed, const std::string& out) {
  const auto pipeline = Pipeline::from_checkpoint(load_config(config_path));
  const auto& classes = pipeline.classes();
  SegmentationMap seg{read_labels(seg_path), classes.num_classes, classes.foreground};
  std::optional<LabelGrid> instances;
  if (!inst_path.empty()) instances = read_instances(inst_path);
  EditOptions opts;
  opts.seed = seed;
  for (const auto& s : style_args) {
    const auto [cls, index] = parse_style(s, classes);
    opts.class_styles[cls] = index;
  }
  const auto result = pipeline.edit(read_image(image_path), seg, read_mask(mask_path), instances, opts);
  write_image(out, result.image);
  for (const auto& inst : result.instances) {
    json line{{"instance_index", inst.index},
              {"class_name", classes.names.at(static_cast<size_t>(inst.class_id))},
              {"mode", to_string(inst.mode)},
              {"used_style_index", inst.style_index ? json(*inst.style_index) : json(nullptr)}};
    std::cout << line.dump() << "\n";
  }
  return 0;
}

int eval(const std::string& config_path, const std::string& out, std::uint64_t seed) {
  const auto report = evaluate_config(config_path, seed).to_json();
  const auto path = out.empty() ? (fs::path(load_config(config_path).log_dir) / "eval.json").string() : out;
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream file(path);
  file << report.dump(2) << "\n";
  if (!file) throw IoError("cannot write " + path);
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic image editing: train, edit, evaluate and serve."};
  app.require_subcommand(1);

  std::string config_path, stage, out, image, seg, mask, inst, host = "127.0.0.1";
  std::vector<std::string> styles;
  std::uint64_t seed = 0;
  int steps = -1, port = 8080, count = 8, test_count = 4;

  auto* toy = app.add_subcommand("make-toy", "Write the synthetic toy dataset and a matching config");
  toy->add_option("--out", out, "Output directory")->required();
  toy->add_option("--count", count, "Training scenes")->check(CLI::PositiveNumber);
  toy->add_option("--test-count", test_count, "Test scenes")->check(CLI::PositiveNumber);
  toy->add_option("--seed", seed, "Dataset seed");

  auto* tr = app.add_subcommand("train", "Train one stage");
  tr->add_option("--stage", stage, "BACKGROUND, OBJECT_INPAINT, OBJECT_GEN or FUSION")->required();
  tr->add_option("--config", config_path, "Config JSON")->required();
  tr->add_option("--steps", steps, "Override the configured step count");

  auto* bank_cmd = app.add_subcommand("build-bank", "Encode every training instance into the style bank");
  bank_cmd->add_option("--config", config_path, "Config JSON")->required();

  auto* ed = app.add_subcommand("edit", "Edit one image");
  ed->add_option("--config", config_path, "Config JSON")->required();
  ed->add_option("--image", image, "RGB PNG")->required();
  ed->add_option("--seg", seg, "8-bit class map PNG")->required();
  ed->add_option("--mask", mask, "Edit mask PNG (nonzero = edit)")->required();
  ed->add_option("--inst", inst, "16-bit instance map PNG");
  ed->add_option("--style", styles, "class:index style choice, repeatable");
  ed->add_option("--seed", seed, "Sampling seed");
  ed->add_option("--out", out, "Output PNG")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate on the test set");
  ev->add_option("--config", config_path, "Config JSON")->required();
  ev->add_option("--out", out, "Report JSON (default <log_dir>/eval.json)");
  ev->add_option("--seed", seed, "Evaluation seed");

  auto* sv = app.add_subcommand("serve", "Run the HTTP edit service");
  sv->add_option("--config", config_path, "Config JSON")->required();
  sv->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  sv->add_option("--host", host, "Bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*toy) return make_toy(out, count, test_count, seed);
    if (*tr) return train(config_path, stage, steps);
    if (*bank_cmd) return bank(config_path);
    if (*ed) return edit(config_path, image, seg, mask, inst, styles, seed, out);
    if (*ev) return eval(config_path, out, seed);
    if (*sv) {
      auto config = load_config(config_path);
      return serve(std::move(config), host, port);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
