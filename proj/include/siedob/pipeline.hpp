#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "siedob/checkpoint.hpp"
#include "siedob/config.hpp"
#include "siedob/scene.hpp"
#include "siedob/style_bank.hpp"

namespace siedob {

struct EditOptions {
  std::uint64_t seed = 0;
  /// Bank index (within the instance's class) per instance index of the disassembly.
  std::map<int, size_t> instance_styles;
  /// Bank index applied to every generated instance of a class, unless overridden per instance.
  std::map<int, size_t> class_styles;
  /// Raw style codes per instance index; takes precedence over bank indices.
  std::map<int, StyleCode> instance_codes;
  /// Skip the fusion network and return the re-blended composite.
  bool fusion = true;
};

struct InstanceReport {
  int index = 0;
  int class_id = 0;
  int instance_id = 0;
  ObjectMode mode = ObjectMode::Generate;
  BoundingBox bbox;
  double visible_fraction = 0.0;
  std::optional<size_t> style_index;  // bank index used for generated objects
};

struct EditResult {
  Image image;       // final output; equals the input wherever the edit mask is 0
  Image composite;   // background with objects pasted, before fusion
  Image background;  // re-blended background generator output
  std::vector<InstanceReport> instances;
};

/// End-to-end editor over a set of (possibly partially) trained networks. `edit` is const and
/// reentrant; networks are only read.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, ClassInfo classes, Networks nets, std::set<std::string> available,
           std::optional<StyleBank> bank);

  /// Loads classes, every checkpointed network and the style bank (when present) from the
  /// locations named by `config`.
  static Pipeline from_checkpoint(PipelineConfig config);

  EditResult edit(const Image& image, const SegmentationMap& seg, const Mask& mask,
                  const std::optional<LabelGrid>& instances, const EditOptions& options = {}) const;

  const PipelineConfig& config() const { return state_->config; }
  const ClassInfo& classes() const { return state_->classes; }
  const StyleBank* bank() const { return state_->bank ? &*state_->bank : nullptr; }
  const std::set<std::string>& available() const { return state_->available; }
  const Networks& networks() const { return state_->nets; }
  std::string checkpoint_hash() const { return state_->config.architecture_hash(state_->classes); }

 private:
  struct State {
    PipelineConfig config;
    ClassInfo classes;
    Networks nets;
    std::set<std::string> available;
    std::optional<StyleBank> bank;
  };
  void require(const std::string& tag, const char* what) const;

  std::shared_ptr<State> state_;
};

/// Style code of an object crop: E_s applied to the crop with everything outside the object mask zeroed.
StyleCode encode_style(StyleEncoder& encoder, const Image& crop, const Mask& crop_mask, int class_id,
                       torch::Dtype dtype);

/// One code per training instance (whole, unedited objects), grouped by class. Writes each
/// entry's source crop to style_thumbnail_dir(thumbnail_base) when `thumbnail_base` is non-empty.
StyleBank build_style_bank(const std::vector<Sample>& dataset, StyleEncoder& encoder, const PipelineConfig& config,
                           const std::string& thumbnail_base = "");

}  // namespace siedob
