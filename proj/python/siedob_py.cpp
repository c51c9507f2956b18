#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "siedob/app.hpp"
#include "siedob/errors.hpp"
#include "siedob/frechet.hpp"
#include "siedob/masks.hpp"
#include "siedob/pipeline.hpp"

namespace py = pybind11;
using namespace siedob;

namespace {

template <class T>
using Array = py::array_t<T, py::array::c_style | py::array::forcecast>;

Image to_image(const Array<float>& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw DimensionError("image must be an H x W x 3 array");
  Image im(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), 3);
  std::copy(a.data(), a.data() + a.size(), im.data.begin());
  return im;
}

template <class T, class G>
G to_grid(const Array<T>& a, const char* what) {
  if (a.ndim() != 2) throw DimensionError(std::string(what) + " must be a 2-d array");
  G g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), g.data.begin());
  return g;
}

Mask to_mask(const Array<std::uint8_t>& a) {
  auto m = to_grid<std::uint8_t, Mask>(a, "mask");
  for (auto& v : m.data) v = v != 0;
  return m;
}

py::array_t<float> from_image(const Image& im) {
  py::array_t<float> out({im.height, im.width, im.channels});
  std::copy(im.data.begin(), im.data.end(), out.mutable_data());
  return out;
}

template <class T>
py::array_t<T> from_grid(const Grid<T>& g) {
  py::array_t<T> out({g.height, g.width});
  std::copy(g.data.begin(), g.data.end(), out.mutable_data());
  return out;
}

py::dict bbox_dict(const BoundingBox& b) {
  py::dict d;
  d["top"] = b.top;
  d["left"] = b.left;
  d["height"] = b.height;
  d["width"] = b.width;
  return d;
}

py::dict loss_dict(const LossReport& r) {
  py::dict d;
  d["stage"] = to_string(r.stage);
  d["step"] = r.step;
  d["total"] = r.total;
  d["critic"] = r.critic;
  d["parts"] = r.parts;
  return d;
}

class PyPipeline {
 public:
  explicit PyPipeline(const std::string& config_path)
      : pipeline_(std::make_shared<const Pipeline>(Pipeline::from_checkpoint(load_config(config_path)))) {}

  py::dict edit(const Array<float>& image, const Array<std::int32_t>& seg, const Array<std::uint8_t>& mask,
                std::optional<Array<std::int32_t>> instances, std::uint64_t seed, const std::map<std::string, size_t>& styles,
                const std::map<int, size_t>& instance_styles, bool fusion) const {
    const auto& classes = pipeline_->classes();
    SegmentationMap s{to_grid<std::int32_t, LabelGrid>(seg, "seg"), classes.num_classes, classes.foreground};
    std::optional<LabelGrid> inst;
    if (instances) inst = to_grid<std::int32_t, LabelGrid>(*instances, "instances");
    EditOptions opts;
    opts.seed = seed;
    opts.fusion = fusion;
    opts.instance_styles = instance_styles;
    for (const auto& [name, index] : styles) {
      const int cls = classes.index_of(name);
      if (cls < 0) throw ValidationError("unknown class '" + name + "'");
      opts.class_styles[cls] = index;
    }
    const auto im = to_image(image);
    const auto m = to_mask(mask);
    EditResult r;
    {
      py::gil_scoped_release release;
      r = pipeline_->edit(im, s, m, inst, opts);
    }
    py::list list;
    for (const auto& i : r.instances) {
      py::dict d;
      d["instance_index"] = i.index;
      d["class_name"] = classes.names.at(static_cast<size_t>(i.class_id));
      d["mode"] = to_string(i.mode);
      d["bbox"] = bbox_dict(i.bbox);
      d["visible_fraction"] = i.visible_fraction;
      d["style_index"] = i.style_index ? py::cast(*i.style_index) : py::none();
      list.append(d);
    }
    py::dict out;
    out["image"] = from_image(r.image);
    out["composite"] = from_image(r.composite);
    out["background"] = from_image(r.background);
    out["instances"] = list;
    return out;
  }

  std::vector<std::string> classes() const { return pipeline_->classes().names; }
  std::set<std::string> available() const { return pipeline_->available(); }
  std::string checkpoint_hash() const { return pipeline_->checkpoint_hash(); }
  size_t style_count(const std::string& name) const {
    const int cls = pipeline_->classes().index_of(name);
    return cls >= 0 && pipeline_->bank() ? pipeline_->bank()->count(cls) : 0;
  }

 private:
  std::shared_ptr<const Pipeline> pipeline_;
};

}  // namespace

PYBIND11_MODULE(_siedob, m) {
  m.doc() = "Semantic image editing by disassembling and assembling objects: pipeline, training and metrics.";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<StageError>(m, "StageError", PyExc_RuntimeError);
  py::register_exception<NoStylesError>(m, "NoStylesError", PyExc_LookupError);

  py::class_<PyPipeline>(m, "Pipeline")
      .def(py::init<const std::string&>(), py::arg("config_path"), "Load checkpoints and style bank named by a config.")
      .def("edit", &PyPipeline::edit, py::arg("image"), py::arg("seg"), py::arg("mask"), py::arg("instances") = py::none(),
           py::arg("seed") = 0, py::arg("styles") = std::map<std::string, size_t>{},
           py::arg("instance_styles") = std::map<int, size_t>{}, py::arg("fusion") = true,
           "Edit an H x W x 3 float image in [0,1] under a class map and a mask (nonzero = edit).")
      .def_property_readonly("classes", &PyPipeline::classes)
      .def_property_readonly("available", &PyPipeline::available)
      .def_property_readonly("checkpoint_hash", &PyPipeline::checkpoint_hash)
      .def("style_count", &PyPipeline::style_count, py::arg("class_name"));

  m.def("make_toy", &make_toy_workspace, py::arg("directory"), py::arg("train_count") = 8, py::arg("test_count") = 4,
        py::arg("seed") = 0, "Write a toy dataset and config; returns the config path.");
  m.def(
      "train_stage",
      [](const std::string& config, const std::string& stage, int steps) {
        std::vector<LossReport> reports;
        {
          py::gil_scoped_release release;
          reports = train_stage(config, parse_stage(stage), steps);
        }
        py::list out;
        for (const auto& r : reports) out.append(loss_dict(r));
        return out;
      },
      py::arg("config_path"), py::arg("stage"), py::arg("steps") = -1, "Train one stage; returns the logged losses.");
  m.def(
      "build_bank", [](const std::string& config) { return build_bank(config).size(); }, py::arg("config_path"),
      "Build and save the style bank; returns the number of codes.");
  m.def(
      "evaluate",
      [](const std::string& config, std::uint64_t seed) {
        std::map<std::string, double> out;
        for (const auto& [name, v] : evaluate_config(config, seed).metrics) out[name] = v.value;
        return out;
      },
      py::arg("config_path"), py::arg("seed") = 0);
  m.def(
      "training_mask",
      [](const std::string& kind, int height, int width, std::uint64_t seed) {
        return from_grid(generate_training_mask(parse_mask_kind(kind), height, width, seed));
      },
      py::arg("kind"), py::arg("height"), py::arg("width"), py::arg("seed"));
  m.def(
      "disassemble",
      [](const Array<float>& image, const Array<std::int32_t>& seg, const Array<std::uint8_t>& mask, int num_classes,
         const std::vector<int>& foreground, std::optional<Array<std::int32_t>> instances, int crop_size, double threshold) {
        SegmentationMap s{to_grid<std::int32_t, LabelGrid>(seg, "seg"), num_classes, foreground};
        std::optional<LabelGrid> inst;
        if (instances) inst = to_grid<std::int32_t, LabelGrid>(*instances, "instances");
        const auto m = to_mask(mask);
        const auto d = disassemble(erase_input(to_image(image), m), s, m, inst, {crop_size, threshold});
        py::list objects;
        for (const auto& o : d.objects) {
          py::dict od;
          od["class_id"] = o.record.class_id;
          od["mode"] = to_string(o.record.mode);
          od["visible_fraction"] = o.record.visible_fraction;
          od["bbox"] = bbox_dict(o.record.bbox);
          od["mask"] = from_grid(o.record.mask);
          od["crop"] = from_image(o.image);
          od["crop_mask"] = from_grid(o.mask);
          objects.append(od);
        }
        py::dict out;
        out["background_mask"] = from_grid(d.background_mask);
        out["background_input"] = from_image(d.background_input);
        out["objects"] = objects;
        return out;
      },
      py::arg("image"), py::arg("seg"), py::arg("mask"), py::arg("num_classes"), py::arg("foreground"),
      py::arg("instances") = py::none(), py::arg("crop_size") = 32, py::arg("visibility_threshold") = kDefaultVisibilityThreshold);
  m.def("frechet_distance", &frechet_distance, py::arg("real"), py::arg("fake"),
        "Frechet distance between Gaussian fits of two feature matrices (rows are samples).");
}
