#include "siedob/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>

#include "siedob/image_io.hpp"

namespace fs = std::filesystem;

namespace siedob {

int ClassInfo::index_of(const std::string& name) const {
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

void ClassInfo::validate() const {
  if (num_classes <= 0) throw ConfigError("classes: num_classes must be positive");
  if (static_cast<int>(names.size()) != num_classes) throw ConfigError("classes: names must list num_classes entries");
  if (foreground.empty()) throw ConfigError("classes: foreground set is empty");
  for (int c : foreground) {
    if (c < 0 || c >= num_classes) throw ConfigError("classes: foreground index out of range");
  }
}

ClassInfo load_classes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open classes file: " + path);
  ClassInfo info;
  try {
    auto j = nlohmann::json::parse(in);
    info.names = j.at("names").get<std::vector<std::string>>();
    info.num_classes = j.value("num_classes", static_cast<int>(info.names.size()));
    info.foreground = j.at("foreground").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed classes file " + path + ": " + e.what());
  }
  info.validate();
  return info;
}

void save_classes(const std::string& path, const ClassInfo& info) {
  nlohmann::json j;
  j["names"] = info.names;
  j["num_classes"] = info.num_classes;
  j["foreground"] = info.foreground;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write classes file: " + path);
  out << j.dump(2) << "\n";
}

std::vector<Sample> load_dataset(const std::string& dir, const ClassInfo& classes) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir);
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "image.png") && fs::exists(e.path() / "seg.png")) {
      entries.push_back(e.path());
    }
  }
  std::sort(entries.begin(), entries.end());
  if (entries.empty()) throw IoError("dataset directory holds no samples: " + dir);
  std::vector<Sample> out;
  for (const auto& p : entries) {
    Sample s;
    s.name = p.filename().string();
    s.image = read_image((p / "image.png").string());
    s.seg.labels = read_labels((p / "seg.png").string());
    s.seg.num_classes = classes.num_classes;
    s.seg.foreground = classes.foreground;
    if (!s.image.same_size(s.seg.labels)) throw IoError("image/seg size mismatch in " + p.string());
    try {
      s.seg.validate();
    } catch (const ValidationError& e) {
      throw IoError(p.string() + ": " + e.what());
    }
    if (fs::exists(p / "inst.png")) {
      s.instances = read_instances((p / "inst.png").string());
      if (!s.instances->same_size(s.seg.labels)) throw IoError("inst size mismatch in " + p.string());
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_sample(const std::string& dir, const Sample& sample) {
  fs::create_directories(dir);
  write_image((fs::path(dir) / "image.png").string(), sample.image);
  write_labels((fs::path(dir) / "seg.png").string(), sample.seg.labels);
  if (sample.instances) write_instances((fs::path(dir) / "inst.png").string(), *sample.instances);
}

ClassInfo toy_classes() {
  ClassInfo info;
  info.names = {"sky", "building", "road", "car", "person"};
  info.num_classes = 5;
  info.foreground = {3, 4};
  return info;
}

namespace {

enum ToyClass : int { kSky = 0, kBuilding = 1, kRoad = 2, kCar = 3, kPerson = 4 };

using Rgb = std::array<float, 3>;

void put(Sample& s, int y, int x, const Rgb& c, int cls, int inst) {
  if (!s.seg.labels.contains(y, x)) return;
  for (int k = 0; k < 3; ++k) s.image.at(y, x, k) = std::clamp(c[k], 0.0f, 1.0f);
  s.seg.labels.at(y, x) = cls;
  s.instances->at(y, x) = inst;
}

}  // namespace

Sample make_toy_sample(int size, std::uint64_t seed) {
  if (size < 16) throw ValidationError("toy scenes need size >= 16");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  auto ri = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const double s = size / 64.0;

  Sample out;
  out.name = "toy_" + std::to_string(seed);
  out.image = Image(size, size, 3);
  out.seg.labels = LabelGrid(size, size, kSky);
  out.seg.num_classes = 5;
  out.seg.foreground = {kCar, kPerson};
  out.instances = LabelGrid(size, size, 0);

  const int horizon = static_cast<int>(size * (0.42 + 0.12 * u(rng)));
  const Rgb sky_top{0.25f + 0.2f * u(rng), 0.45f + 0.2f * u(rng), 0.85f + 0.1f * u(rng)};
  const float road_tone = 0.32f + 0.15f * u(rng);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (y < horizon) {
        const float t = static_cast<float>(y) / horizon;
        put(out, y, x, {sky_top[0] + 0.35f * t, sky_top[1] + 0.3f * t, sky_top[2] + 0.05f * t}, kSky, 0);
      } else {
        const float stripe = ((x + 2 * y) / std::max(1, static_cast<int>(3 * s))) % 2 == 0 ? 0.03f : -0.03f;
        const float v = road_tone + stripe + 0.08f * (y - horizon) / static_cast<float>(size);
        put(out, y, x, {v, v, v * 1.02f}, kRoad, 0);
      }
    }
  }

  // Buildings rest on the horizon.
  const int n_buildings = ri(2, 4);
  for (int b = 0; b < n_buildings; ++b) {
    const int bw = ri(static_cast<int>(8 * s), static_cast<int>(20 * s));
    const int bh = ri(static_cast<int>(6 * s), std::max(static_cast<int>(7 * s), horizon - 2));
    const int left = ri(0, size - bw);
    const Rgb wall{0.45f + 0.3f * u(rng), 0.35f + 0.2f * u(rng), 0.3f + 0.15f * u(rng)};
    const int period = std::max(2, static_cast<int>(4 * s));
    for (int y = horizon - bh; y < horizon; ++y) {
      for (int x = left; x < left + bw; ++x) {
        const bool window = (y % period == 1) && (x % period >= 1) && (x % period < period - 1);
        Rgb c = wall;
        if (window) c = {0.15f, 0.18f, 0.25f};
        put(out, y, x, c, kBuilding, 0);
      }
    }
  }

  int next_id = 1;
  static constexpr std::array<Rgb, 6> kPaint{{{0.85f, 0.1f, 0.1f},
                                             {0.1f, 0.25f, 0.85f},
                                             {0.95f, 0.85f, 0.1f},
                                             {0.1f, 0.7f, 0.2f},
                                             {0.95f, 0.95f, 0.95f},
                                             {0.6f, 0.2f, 0.7f}}};
  const int n_cars = ri(1, 3);
  for (int c = 0; c < n_cars; ++c) {
    const int cw = ri(static_cast<int>(12 * s), static_cast<int>(20 * s));
    const int ch = ri(static_cast<int>(6 * s), static_cast<int>(9 * s));
    const int top = ri(horizon + 1, size - ch - 1);
    const int left = ri(0, size - cw);
    const Rgb body = kPaint[static_cast<size_t>(ri(0, 5))];
    const int id = next_id++;
    for (int y = top; y < top + ch; ++y) {
      for (int x = left; x < left + cw; ++x) {
        const int dy = y - top;
        Rgb col = body;
        if (dy < ch / 3 && x > left + cw / 5 && x < left + cw - cw / 5) col = {0.2f, 0.3f, 0.4f};  // windows
        if (dy < ch / 3 && (x <= left + cw / 5 - 1 || x >= left + cw - cw / 5 + 1)) continue;      // cabin shape
        if (dy == ch - 1 && ((x - left) % std::max(3, cw / 3)) < 2) col = {0.05f, 0.05f, 0.05f};  // wheels
        put(out, y, x, col, kCar, id);
      }
    }
  }

  const int n_people = ri(0, 2);
  for (int p = 0; p < n_people; ++p) {
    const int ph = ri(static_cast<int>(10 * s), static_cast<int>(16 * s));
    const int pw = std::max(3, ph / 3);
    const int top = ri(horizon - ph / 2, size - ph - 1);
    const int left = ri(0, size - pw);
    const Rgb shirt = kPaint[static_cast<size_t>(ri(0, 5))];
    const Rgb skin{0.9f, 0.72f, 0.6f};
    const int id = next_id++;
    const int head = std::max(2, ph / 4);
    for (int y = top; y < top + ph; ++y) {
      for (int x = left; x < left + pw; ++x) {
        const int dy = y - top;
        if (dy < head) {
          const float cx = left + (pw - 1) / 2.0f, cy = top + (head - 1) / 2.0f;
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) > head * head / 4.0f + 0.5f) continue;
          put(out, y, x, skin, kPerson, id);
        } else if (dy < head + (ph - head) * 3 / 5) {
          put(out, y, x, shirt, kPerson, id);
        } else {
          put(out, y, x, {0.15f, 0.15f, 0.3f}, kPerson, id);
        }
      }
    }
  }

  // Occlusion can leave an id with no pixels; renumber densely.
  std::vector<int> remap(static_cast<size_t>(next_id), 0);
  for (int id : out.instances->data) remap[static_cast<size_t>(id)] = 1;
  remap[0] = 0;
  int dense = 0;
  for (size_t i = 1; i < remap.size(); ++i) remap[i] = remap[i] ? ++dense : 0;
  for (auto& id : out.instances->data) id = remap[static_cast<size_t>(id)];
  return out;
}

void write_toy_dataset(const std::string& dir, int count, int size, std::uint64_t seed) {
  fs::create_directories(dir);
  save_classes((fs::path(dir) / "classes.json").string(), toy_classes());
  for (int i = 0; i < count; ++i) {
    Sample s = make_toy_sample(size, seed + static_cast<std::uint64_t>(i));
    char name[32];
    std::snprintf(name, sizeof(name), "%04d", i);
    save_sample((fs::path(dir) / name).string(), s);
  }
}

}  // namespace siedob
