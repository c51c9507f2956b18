#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "siedob/grid.hpp"

namespace siedob {

/// Per-pixel class labels in [0, num_classes) plus the set of foreground classes.
struct SegmentationMap {
  LabelGrid labels;
  int num_classes = 0;
  std::vector<int> foreground;

  bool is_foreground(int cls) const;
  /// Index of `cls` within `foreground`, or -1.
  int foreground_index(int cls) const;
  int height() const { return labels.height; }
  int width() const { return labels.width; }
  /// Throws ValidationError when a label or foreground index is out of range.
  void validate() const;
};

enum class ObjectMode { Inpaint, Generate };

const char* to_string(ObjectMode mode);

struct BoundingBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  bool operator==(const BoundingBox&) const = default;
};

struct InstanceRecord {
  int class_id = 0;
  int instance_id = 0;
  Mask mask;  // full scene resolution
  BoundingBox bbox;
  double visible_fraction = 0.0;
  ObjectMode mode = ObjectMode::Generate;

  size_t area() const { return count_set(mask); }
};

/// Square scene window [top, top+side) × [left, left+side) resampled to out_size².
/// The window may extend past the image only when side exceeds an image dimension.
struct Placement {
  int top = 0;
  int left = 0;
  int side = 0;
  int out_size = 0;

  bool operator==(const Placement&) const = default;
};

struct ObjectCrop {
  InstanceRecord record;
  Image image;
  Mask mask;
  Placement placement;
};

struct SceneDecomposition {
  Image background_input;
  Mask background_mask;
  std::vector<ObjectCrop> objects;
};

/// A synthesized object crop ready to be pasted back.
struct GeneratedObject {
  Image crop;
  InstanceRecord record;
  Placement placement;
};

struct DisassembleOptions {
  int crop_size = 128;
  double visibility_threshold = 0.05;
};

inline constexpr double kDefaultVisibilityThreshold = 0.05;

/// image × (1 − mask), broadcast over channels.
Image erase_input(const Image& image, const Mask& mask);

/// Tight axis-aligned bounding box of the set pixels. Zero-size box for an empty mask.
BoundingBox tight_bbox(const Mask& mask);

/// 4-connected component labels; 0 marks unset pixels, components are numbered from 1 in raster order.
LabelGrid connected_components(const Mask& mask, int* count = nullptr);

/// Instance masks of every foreground class. Uses `instance_map` ids when present
/// (0 = no instance) and falls back to connected components for unassigned pixels.
std::vector<InstanceRecord> extract_instances(const SegmentationMap& seg,
                                              const std::optional<LabelGrid>& instance_map);

ObjectMode classify_mode(const InstanceRecord& record, const Mask& mask,
                         double visibility_threshold = kDefaultVisibilityThreshold);

SceneDecomposition disassemble(const Image& image_erased, const SegmentationMap& seg, const Mask& mask,
                               const std::optional<LabelGrid>& instance_map,
                               const DisassembleOptions& options = {});

/// Square window around `bbox` with a 10% margin, translated to fit inside height×width.
Placement crop_window(const BoundingBox& bbox, int height, int width, int out_size);

/// Bilinear resample of the placement window; zero outside the image.
Image crop_image(const Image& image, const Placement& placement);
/// Nearest-neighbour resample of the placement window; zero outside the grid.
Mask crop_mask(const Mask& mask, const Placement& placement);

ObjectCrop crop_object(const Image& image_erased, const InstanceRecord& record, int out_size);

/// Writes `crop` back into `scene` on pixels where `region` is set and the window covers.
void paste(Image& scene, const Image& crop, const Placement& placement, const Mask& region);

/// Pastes objects onto `background_out` in descending area order, so smaller objects win overlaps.
Image compose(const Image& background_out, const std::vector<GeneratedObject>& objects);

/// Paste order used by `compose`: indices sorted by descending mask area, ties by input order.
std::vector<size_t> paste_order(const std::vector<GeneratedObject>& objects);

/// out = mask ? generated : original, per pixel.
Image blend_known(const Image& original, const Image& generated, const Mask& mask);

}  // namespace siedob
