#include "siedob/scene.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

namespace siedob {

bool SegmentationMap::is_foreground(int cls) const { return foreground_index(cls) >= 0; }

int SegmentationMap::foreground_index(int cls) const {
  auto it = std::find(foreground.begin(), foreground.end(), cls);
  return it == foreground.end() ? -1 : static_cast<int>(it - foreground.begin());
}

void SegmentationMap::validate() const {
  if (num_classes <= 0) throw ValidationError("segmentation map needs at least one class");
  for (int c : foreground) {
    if (c < 0 || c >= num_classes) throw ValidationError("foreground class " + std::to_string(c) + " out of range");
  }
  for (auto v : labels.data) {
    if (v < 0 || v >= num_classes) throw ValidationError("label " + std::to_string(v) + " out of range");
  }
}

const char* to_string(ObjectMode mode) { return mode == ObjectMode::Inpaint ? "INPAINT" : "GENERATE"; }

Image erase_input(const Image& image, const Mask& mask) {
  if (!image.same_size(mask)) throw DimensionError("erase_input: image and mask sizes differ");
  Image out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (mask.at(y, x) == 0) continue;
      for (int c = 0; c < image.channels; ++c) out.at(y, x, c) = 0.0f;
    }
  }
  return out;
}

BoundingBox tight_bbox(const Mask& mask) {
  int top = mask.height, left = mask.width, bottom = -1, right = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(y, x) == 0) continue;
      top = std::min(top, y);
      bottom = std::max(bottom, y);
      left = std::min(left, x);
      right = std::max(right, x);
    }
  }
  if (bottom < 0) return {};
  return {top, left, bottom - top + 1, right - left + 1};
}

LabelGrid connected_components(const Mask& mask, int* count) {
  LabelGrid labels(mask.height, mask.width, 0);
  int next = 0;
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(y, x) == 0 || labels.at(y, x) != 0) continue;
      ++next;
      labels.at(y, x) = next;
      stack.emplace_back(y, x);
      while (!stack.empty()) {
        auto [cy, cx] = stack.back();
        stack.pop_back();
        constexpr int dy[] = {-1, 1, 0, 0};
        constexpr int dx[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          int ny = cy + dy[k], nx = cx + dx[k];
          if (!mask.contains(ny, nx) || mask.at(ny, nx) == 0 || labels.at(ny, nx) != 0) continue;
          labels.at(ny, nx) = next;
          stack.emplace_back(ny, nx);
        }
      }
    }
  }
  if (count) *count = next;
  return labels;
}

std::vector<InstanceRecord> extract_instances(const SegmentationMap& seg,
                                              const std::optional<LabelGrid>& instance_map) {
  const int h = seg.height(), w = seg.width();
  std::vector<InstanceRecord> records;
  Mask unassigned(h, w, 0);
  for (size_t i = 0; i < seg.labels.size(); ++i) unassigned.data[i] = seg.is_foreground(seg.labels.data[i]) ? 1 : 0;

  int max_id = 0;
  if (instance_map) {
    if (!instance_map->same_size(seg.labels)) throw DimensionError("instance map size differs from segmentation");
    std::map<int, int> id_class;
    for (size_t i = 0; i < instance_map->size(); ++i) {
      const int id = instance_map->data[i];
      if (id < 0) throw ValidationError("negative instance id");
      if (id == 0) continue;
      const int cls = seg.labels.data[i];
      if (!seg.is_foreground(cls)) {
        throw ValidationError("instance id " + std::to_string(id) + " covers non-foreground class " + std::to_string(cls));
      }
      auto [it, inserted] = id_class.emplace(id, cls);
      if (!inserted && it->second != cls) {
        throw ValidationError("instance id " + std::to_string(id) + " spans several classes");
      }
      unassigned.data[i] = 0;
    }
    for (auto [id, cls] : id_class) {
      InstanceRecord rec;
      rec.class_id = cls;
      rec.instance_id = id;
      rec.mask = Mask(h, w, 0);
      for (size_t i = 0; i < instance_map->size(); ++i) rec.mask.data[i] = instance_map->data[i] == id ? 1 : 0;
      rec.bbox = tight_bbox(rec.mask);
      records.push_back(std::move(rec));
      max_id = std::max(max_id, id);
    }
  }

  // Remaining foreground pixels: one instance per connected component of each class.
  for (int cls : seg.foreground) {
    Mask class_mask(h, w, 0);
    for (size_t i = 0; i < seg.labels.size(); ++i) {
      class_mask.data[i] = (unassigned.data[i] && seg.labels.data[i] == cls) ? 1 : 0;
    }
    int n = 0;
    LabelGrid comps = connected_components(class_mask, &n);
    for (int k = 1; k <= n; ++k) {
      InstanceRecord rec;
      rec.class_id = cls;
      rec.instance_id = ++max_id;
      rec.mask = Mask(h, w, 0);
      for (size_t i = 0; i < comps.size(); ++i) rec.mask.data[i] = comps.data[i] == k ? 1 : 0;
      rec.bbox = tight_bbox(rec.mask);
      records.push_back(std::move(rec));
    }
  }
  std::sort(records.begin(), records.end(),
            [](const InstanceRecord& a, const InstanceRecord& b) { return a.instance_id < b.instance_id; });
  return records;
}

ObjectMode classify_mode(const InstanceRecord& record, const Mask& mask, double visibility_threshold) {
  if (!record.mask.same_size(mask)) throw DimensionError("classify_mode: instance and edit mask sizes differ");
  size_t total = 0, visible = 0;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (record.mask.data[i] == 0) continue;
    ++total;
    if (mask.data[i] == 0) ++visible;
  }
  if (total == 0) throw ValidationError("classify_mode: empty instance mask");
  const double fraction = static_cast<double>(visible) / static_cast<double>(total);
  return fraction < visibility_threshold ? ObjectMode::Generate : ObjectMode::Inpaint;
}

SceneDecomposition disassemble(const Image& image_erased, const SegmentationMap& seg, const Mask& mask,
                               const std::optional<LabelGrid>& instance_map, const DisassembleOptions& options) {
  if (!image_erased.same_size(mask) || !seg.labels.same_size(mask)) {
    throw DimensionError("disassemble: image, segmentation and mask sizes differ");
  }
  const int h = mask.height, w = mask.width;
  SceneDecomposition out;
  Mask object_union(h, w, 0);

  for (auto& rec : extract_instances(seg, instance_map)) {
    size_t total = 0, visible = 0;
    bool edited = false;
    for (size_t i = 0; i < mask.size(); ++i) {
      if (rec.mask.data[i] == 0) continue;
      ++total;
      if (mask.data[i] == 0) {
        ++visible;
      } else {
        edited = true;
      }
    }
    if (!edited) continue;
    rec.visible_fraction = static_cast<double>(visible) / static_cast<double>(total);
    rec.mode = classify_mode(rec, mask, options.visibility_threshold);
    for (size_t i = 0; i < mask.size(); ++i) object_union.data[i] |= rec.mask.data[i];
    out.objects.push_back(crop_object(image_erased, rec, options.crop_size));
  }

  out.background_mask = Mask(h, w, 0);
  for (size_t i = 0; i < mask.size(); ++i) {
    const bool background_class = !seg.is_foreground(seg.labels.data[i]);
    out.background_mask.data[i] = (!object_union.data[i] && (mask.data[i] || background_class)) ? 1 : 0;
  }
  out.background_input = image_erased;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (out.background_mask.at(y, x)) continue;
      for (int c = 0; c < image_erased.channels; ++c) out.background_input.at(y, x, c) = 0.0f;
    }
  }
  return out;
}

Placement crop_window(const BoundingBox& bbox, int height, int width, int out_size) {
  if (out_size <= 0) throw ValidationError("crop_window: out_size must be positive");
  if (bbox.height <= 0 || bbox.width <= 0) throw ValidationError("crop_window: degenerate bounding box");
  const int longest = std::max(bbox.height, bbox.width);
  int side = (longest * 11 + 9) / 10;  // ceil(1.1 · longest)
  side = std::min(side, std::max(height, width));
  auto fit = [side](int start, int extent) {
    const int lo = std::min(0, extent - side), hi = std::max(0, extent - side);
    return std::clamp(start, lo, hi);
  };
  Placement p;
  p.side = side;
  p.out_size = out_size;
  p.top = fit(bbox.top - (side - bbox.height) / 2, height);
  p.left = fit(bbox.left - (side - bbox.width) / 2, width);
  return p;
}

namespace {

// Source coordinate of destination sample `i` when mapping `dst_len` samples onto `src_len`.
double source_coord(int i, int src_len, int dst_len) {
  return (static_cast<double>(i) + 0.5) * src_len / dst_len - 0.5;
}

}  // namespace

Image crop_image(const Image& image, const Placement& p) {
  Image out(p.out_size, p.out_size, image.channels, 0.0f);
  auto fetch = [&](int y, int x, int c) -> float {
    return (y >= 0 && x >= 0 && y < image.height && x < image.width) ? image.at(y, x, c) : 0.0f;
  };
  for (int i = 0; i < p.out_size; ++i) {
    const double sy = p.top + source_coord(i, p.side, p.out_size);
    const int y0 = static_cast<int>(std::floor(sy));
    const float fy = static_cast<float>(sy - y0);
    for (int j = 0; j < p.out_size; ++j) {
      const double sx = p.left + source_coord(j, p.side, p.out_size);
      const int x0 = static_cast<int>(std::floor(sx));
      const float fx = static_cast<float>(sx - x0);
      for (int c = 0; c < image.channels; ++c) {
        const float top = fetch(y0, x0, c) * (1.0f - fx) + fetch(y0, x0 + 1, c) * fx;
        const float bottom = fetch(y0 + 1, x0, c) * (1.0f - fx) + fetch(y0 + 1, x0 + 1, c) * fx;
        out.at(i, j, c) = top * (1.0f - fy) + bottom * fy;
      }
    }
  }
  return out;
}

Mask crop_mask(const Mask& mask, const Placement& p) {
  Mask out(p.out_size, p.out_size, 0);
  for (int i = 0; i < p.out_size; ++i) {
    const int y = p.top + static_cast<int>(std::floor((i + 0.5) * p.side / p.out_size));
    for (int j = 0; j < p.out_size; ++j) {
      const int x = p.left + static_cast<int>(std::floor((j + 0.5) * p.side / p.out_size));
      out.at(i, j) = mask.contains(y, x) ? mask.at(y, x) : 0;
    }
  }
  return out;
}

ObjectCrop crop_object(const Image& image_erased, const InstanceRecord& record, int out_size) {
  if (!image_erased.same_size(record.mask)) throw DimensionError("crop_object: image and instance mask sizes differ");
  ObjectCrop crop;
  crop.placement = crop_window(record.bbox, image_erased.height, image_erased.width, out_size);
  crop.image = crop_image(image_erased, crop.placement);
  crop.mask = crop_mask(record.mask, crop.placement);
  crop.record = record;
  return crop;
}

void paste(Image& scene, const Image& crop, const Placement& p, const Mask& region) {
  if (!scene.same_size(region)) throw DimensionError("paste: scene and region sizes differ");
  if (crop.height != p.out_size || crop.width != p.out_size || crop.channels != scene.channels) {
    throw DimensionError("paste: crop does not match placement");
  }
  const int n = p.out_size;
  auto fetch = [&](int y, int x, int c) { return crop.at(std::clamp(y, 0, n - 1), std::clamp(x, 0, n - 1), c); };
  const int y_begin = std::max(0, p.top), y_end = std::min(scene.height, p.top + p.side);
  const int x_begin = std::max(0, p.left), x_end = std::min(scene.width, p.left + p.side);
  for (int y = y_begin; y < y_end; ++y) {
    const double cy = source_coord(y - p.top, n, p.side);
    const int y0 = static_cast<int>(std::floor(cy));
    const float fy = static_cast<float>(cy - y0);
    for (int x = x_begin; x < x_end; ++x) {
      if (region.at(y, x) == 0) continue;
      const double cx = source_coord(x - p.left, n, p.side);
      const int x0 = static_cast<int>(std::floor(cx));
      const float fx = static_cast<float>(cx - x0);
      for (int c = 0; c < scene.channels; ++c) {
        const float top = fetch(y0, x0, c) * (1.0f - fx) + fetch(y0, x0 + 1, c) * fx;
        const float bottom = fetch(y0 + 1, x0, c) * (1.0f - fx) + fetch(y0 + 1, x0 + 1, c) * fx;
        scene.at(y, x, c) = top * (1.0f - fy) + bottom * fy;
      }
    }
  }
}

std::vector<size_t> paste_order(const std::vector<GeneratedObject>& objects) {
  std::vector<size_t> order(objects.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<size_t> areas(objects.size());
  for (size_t i = 0; i < objects.size(); ++i) areas[i] = objects[i].record.area();
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return areas[a] > areas[b]; });
  return order;
}

Image compose(const Image& background_out, const std::vector<GeneratedObject>& objects) {
  Image out = background_out;
  for (size_t i : paste_order(objects)) {
    const auto& obj = objects[i];
    paste(out, obj.crop, obj.placement, obj.record.mask);
  }
  return out;
}

Image blend_known(const Image& original, const Image& generated, const Mask& mask) {
  if (!original.same_size(mask) || !generated.same_size(mask) || original.channels != generated.channels) {
    throw DimensionError("blend_known: sizes differ");
  }
  Image out = original;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(y, x) == 0) continue;
      for (int c = 0; c < original.channels; ++c) out.at(y, x, c) = generated.at(y, x, c);
    }
  }
  return out;
}

}  // namespace siedob
