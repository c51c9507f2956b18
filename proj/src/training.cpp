#include "siedob/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "siedob/errors.hpp"
#include "siedob/masks.hpp"
#include "siedob/pipeline.hpp"
#include "siedob/tensor_convert.hpp"

namespace siedob {

namespace fs = std::filesystem;
using torch::Tensor;

double recompute_total(const LossReport& report, const LossWeights& weights) {
  LossTerms<double> t;
  auto get = [&](const char* key, std::optional<double>& slot) {
    if (auto it = report.parts.find(key); it != report.parts.end()) slot = it->second;
  };
  get("l1", t.l1);
  get("perceptual", t.perceptual);
  get("gan", t.gan);
  get("gan_global", t.gan_global);
  get("gan_local", t.gan_local);
  get("scc", t.scc);
  get("perceptual_style", t.perceptual_style);
  get("gan_style", t.gan_style);
  get("scc_style", t.scc_style);
  const Objective which = report.stage == Stage::Background      ? Objective::Background
                          : report.stage == Stage::ObjectInpaint ? Objective::ObjectInpaint
                          : report.stage == Stage::ObjectGen     ? Objective::ObjectGen
                                                                 : Objective::Fusion;
  return compose_objective(which, t, weights);
}

FeaturePyramid make_pyramid(const PipelineConfig& config) {
  FeaturePyramid pyramid(config.pyramid_seed);
  if (!config.pyramid_weights.empty()) pyramid->load_weights(config.pyramid_weights);
  pyramid->to(config.dtype());
  return pyramid;
}

void reset_stage(Networks& nets, Stage stage, const PipelineConfig& config, const ClassInfo& classes) {
  const auto fresh = Networks::create(config, classes);
  switch (stage) {
    case Stage::Background:
      nets.g_b = fresh.g_b;
      nets.d_g = fresh.d_g;
      nets.d_bap = fresh.d_bap;
      break;
    case Stage::ObjectInpaint:
      nets.g_oi = fresh.g_oi;
      nets.d_obj_inpaint = fresh.d_obj_inpaint;
      break;
    case Stage::ObjectGen:
      nets.g_og = fresh.g_og;
      nets.e_s = fresh.e_s;
      nets.e_s_prime = fresh.e_s_prime;
      nets.d_obj_gen = fresh.d_obj_gen;
      break;
    case Stage::Fusion:
      nets.f_net = fresh.f_net;
      nets.d_f = fresh.d_f;
      break;
  }
}

struct Trainer::ObjectItem {
  size_t sample = 0;
  int class_id = 0;
  Mask mask;              // instance mask in crop space
  Tensor crop;            // [1,3,S,S] ground-truth crop
  Tensor mask_t;          // [1,1,S,S]
  Tensor semantic;        // [1,K,S,S]
  Tensor style_input;     // crop with everything outside the object zeroed
};

struct Trainer::StageState {
  std::unique_ptr<torch::optim::Adam> opt_g, opt_d;
  std::mt19937_64 rng;
  int step = 0;
  std::unique_ptr<Pipeline> upstream;  // FUSION only
  bool warned_style_fallback = false;
};

Trainer::Trainer(PipelineConfig config, ClassInfo classes, std::vector<Sample> train, Networks nets,
                 std::set<std::string> available)
    : config_(std::move(config)),
      classes_(std::move(classes)),
      train_(std::move(train)),
      nets_(std::move(nets)),
      available_(std::move(available)) {
  if (train_.empty()) throw ConfigError("training set is empty");
  for (const auto& s : train_) {
    if (s.image.height != config_.scene_size || s.image.width != config_.scene_size) {
      throw ConfigError("training sample " + s.name + " is not " + std::to_string(config_.scene_size) + "x" +
                        std::to_string(config_.scene_size));
    }
    if (s.seg.num_classes != classes_.num_classes) throw ConfigError("training sample " + s.name + " has a different class count");
  }
  pyramid_ = make_pyramid(config_);
}

Trainer::~Trainer() = default;

namespace {

torch::optim::AdamOptions adam(double lr, const OptimizerConfig& o) {
  return torch::optim::AdamOptions(lr).betas(std::make_tuple(o.beta1, o.beta2));
}

std::vector<Tensor> params_of(std::initializer_list<std::shared_ptr<torch::nn::Module>> modules) {
  std::vector<Tensor> out;
  for (const auto& m : modules) {
    for (auto& p : m->parameters()) {
      if (p.requires_grad()) out.push_back(p);
    }
  }
  return out;
}

double checked(const Tensor& t, Stage stage, int step, const char* what) {
  const double v = t.item<double>();
  if (!std::isfinite(v)) {
    throw TrainingFault(std::string(to_string(stage)) + " step " + std::to_string(step) + ": non-finite " + what);
  }
  return v;
}

Tensor zero_like_scalar(const Tensor& ref) { return torch::zeros({}, ref.options()); }

}  // namespace

Trainer::StageState& Trainer::state(Stage stage) {
  auto& slot = stages_[stage];
  if (slot) return *slot;
  slot = std::make_unique<StageState>();
  slot->rng.seed(config_.seed * 1000003ull + static_cast<std::uint64_t>(stage) + 1);
  const auto& o = config_.optimizer;
  std::vector<Tensor> g, d;
  switch (stage) {
    case Stage::Background:
      g = params_of({nets_.g_b.ptr()});
      d = params_of({nets_.d_g.ptr(), nets_.d_bap.ptr()});
      break;
    case Stage::ObjectInpaint:
      g = params_of({nets_.g_oi.ptr()});
      d = params_of({nets_.d_obj_inpaint.ptr()});
      break;
    case Stage::ObjectGen:
      for (auto& p : nets_.e_s_prime->parameters()) p.set_requires_grad(config_.train_style_verifier);
      g = config_.train_style_verifier ? params_of({nets_.g_og.ptr(), nets_.e_s.ptr(), nets_.e_s_prime.ptr()})
                                       : params_of({nets_.g_og.ptr(), nets_.e_s.ptr()});
      d = params_of({nets_.d_obj_gen.ptr()});
      break;
    case Stage::Fusion:
      for (const char* tag : {"G_B", "G_OI", "G_OG", "E_s"}) {
        if (!available_.count(tag)) {
          throw StageError(std::string("FUSION needs trained upstream networks; missing ") + tag);
        }
      }
      g = params_of({nets_.f_net.ptr()});
      d = params_of({nets_.d_f.ptr()});
      slot->upstream = std::make_unique<Pipeline>(config_, classes_, nets_, available_, std::nullopt);
      break;
  }
  const double lr_g = stage == Stage::ObjectInpaint ? o.inpaint_lr() : o.lr_generator;
  slot->opt_g = std::make_unique<torch::optim::Adam>(g, adam(lr_g, o));
  slot->opt_d = std::make_unique<torch::optim::Adam>(d, adam(o.lr_discriminator, o));
  return *slot;
}

MaskKind Trainer::draw_mask_kind(std::mt19937_64& rng) const {
  std::vector<double> w;
  for (const auto& [kind, weight] : config_.mask_mix) w.push_back(weight);
  std::discrete_distribution<size_t> pick(w.begin(), w.end());
  return config_.mask_mix[pick(rng)].first;
}

const std::vector<Trainer::ObjectItem>& Trainer::objects() {
  if (objects_) return *objects_;
  objects_ = std::make_unique<std::vector<ObjectItem>>();
  const auto dtype = config_.dtype();
  const int k = static_cast<int>(classes_.foreground.size());
  for (size_t i = 0; i < train_.size(); ++i) {
    const auto& s = train_[i];
    for (const auto& rec : extract_instances(s.seg, s.instances)) {
      const auto crop = crop_object(s.image, rec, config_.crop_size);
      if (count_set(crop.mask) < 4) continue;
      ObjectItem item;
      item.sample = i;
      item.class_id = rec.class_id;
      item.mask = crop.mask;
      item.crop = image_to_tensor(crop.image, dtype);
      item.mask_t = mask_to_tensor(crop.mask, dtype);
      item.semantic = object_semantic(crop.mask, s.seg.foreground_index(rec.class_id), k, dtype);
      item.style_input = item.crop * item.mask_t;
      objects_->push_back(std::move(item));
    }
  }
  if (objects_->empty()) throw ConfigError("training set holds no foreground instances");
  return *objects_;
}

LossReport Trainer::step(Stage stage) {
  auto& s = state(stage);
  ++s.step;
  switch (stage) {
    case Stage::Background: return step_background(s);
    case Stage::ObjectInpaint: return step_inpaint(s);
    case Stage::ObjectGen: return step_object_gen(s);
    case Stage::Fusion: return step_fusion(s);
  }
  throw ConfigError("unknown stage");
}

LossReport Trainer::step_background(StageState& s) {
  const auto dtype = config_.dtype();
  const int n = config_.scene_size;
  std::uniform_int_distribution<size_t> pick(0, train_.size() - 1);
  std::vector<Tensor> inputs, gts, segs, masks;
  std::vector<std::vector<PatchWindow>> windows;
  for (int b = 0; b < config_.batch_size; ++b) {
    const auto& sample = train_[pick(s.rng)];
    const auto kind = draw_mask_kind(s.rng);
    const Mask m = generate_training_mask(kind, n, n, s.rng, config_.mask_params);
    const auto dec = disassemble(erase_input(sample.image, m), sample.seg, m, sample.instances,
                                 DisassembleOptions{config_.crop_size, config_.visibility_threshold});
    Mask keep(n, n);
    for (size_t i = 0; i < keep.data.size(); ++i) keep.data[i] = dec.background_mask.data[i] && !m.data[i];
    inputs.push_back(masked_image_tensor(sample.image, keep, dtype));
    gts.push_back(image_to_tensor(sample.image, dtype));
    segs.push_back(onehot(sample.seg.labels, sample.seg.num_classes, dtype));
    masks.push_back(mask_to_tensor(m, dtype));
    windows.push_back(sample_boundary_patches(m, config_.patches, s.rng));
  }
  const auto x = torch::cat(inputs), gt = torch::cat(gts), seg = torch::cat(segs), mask = torch::cat(masks);
  const int64_t side = config_.patches.critic_side;

  nets_.g_b->train();
  auto out = nets_.g_b->forward(x, seg, mask);
  auto blended = gt * (1.0 - mask) + out * mask;
  const auto real_patches = crop_patches(gt, windows, side);
  const bool have_patches = real_patches.size(0) > 0;

  LossReport report;
  report.stage = Stage::Background;
  report.step = s.step;
  if (config_.adversarial) {
    nets_.d_g->train();
    nets_.d_bap->train();
    s.opt_d->zero_grad();
    auto fake = blended.detach();
    auto d = hinge_d_loss(nets_.d_g->forward(torch::cat({gt, seg}, 1)), nets_.d_g->forward(torch::cat({fake, seg}, 1)));
    if (have_patches) {
      d = d + hinge_d_loss(nets_.d_bap->forward(real_patches), nets_.d_bap->forward(crop_patches(fake, windows, side)));
    }
    report.critic = checked(d, report.stage, s.step, "critic loss");
    d.backward();
    s.opt_d->step();
    nets_.d_g->eval();
    nets_.d_bap->eval();
  }

  s.opt_g->zero_grad();
  LossTerms<Tensor> t;
  t.l1 = siedob::l1_loss(out, gt);
  t.perceptual = perceptual_loss(out, gt, pyramid_);
  if (config_.adversarial) {
    t.gan_global = hinge_g_loss(nets_.d_g->forward(torch::cat({blended, seg}, 1)));
    t.gan_local = have_patches ? hinge_g_loss(nets_.d_bap->forward(crop_patches(blended, windows, side)))
                               : zero_like_scalar(out);
  } else {
    t.gan_global = t.gan_local = zero_like_scalar(out);
  }
  auto total = compose_objective(Objective::Background, t, config_.loss);
  report.total = checked(total, report.stage, s.step, "generator loss");
  total.backward();
  s.opt_g->step();
  report.parts = {{"l1", t.l1->item<double>()},
                  {"perceptual", t.perceptual->item<double>()},
                  {"gan_global", t.gan_global->item<double>()},
                  {"gan_local", t.gan_local->item<double>()}};
  return report;
}

LossReport Trainer::step_inpaint(StageState& s) {
  const auto& items = objects();
  const auto dtype = config_.dtype();
  const int n = config_.crop_size;
  std::uniform_int_distribution<size_t> pick(0, items.size() - 1);
  std::vector<Tensor> crops, masks, sems;
  const int batch = config_.inpaint_batch_size > 0 ? config_.inpaint_batch_size : config_.batch_size;
  for (int b = 0; b < batch; ++b) {
    const auto& item = items[pick(s.rng)];
    const auto area = static_cast<double>(count_set(item.mask));
    Mask m;
    // Partially visible objects: some of the object is edited, at least τ of it is kept.
    for (int attempt = 0; attempt < 20; ++attempt) {
      m = generate_training_mask(draw_mask_kind(s.rng), n, n, s.rng, config_.mask_params);
      size_t hit = 0;
      for (size_t i = 0; i < m.data.size(); ++i) hit += m.data[i] && item.mask.data[i];
      if (hit > 0 && 1.0 - hit / area >= config_.visibility_threshold) break;
    }
    crops.push_back(item.crop);
    masks.push_back(mask_to_tensor(m, dtype));
    sems.push_back(item.semantic);
  }
  const auto crop = torch::cat(crops), mask = torch::cat(masks), sem = torch::cat(sems);

  nets_.g_oi->train();
  auto out = nets_.g_oi->forward(crop, mask, sem);
  LossReport report;
  report.stage = Stage::ObjectInpaint;
  report.step = s.step;
  auto& critic = nets_.d_obj_inpaint;
  if (config_.adversarial) {
    critic->train();
    s.opt_d->zero_grad();
    auto d = hinge_d_loss(critic->forward(torch::cat({crop, sem}, 1)), critic->forward(torch::cat({out.detach(), sem}, 1)));
    report.critic = checked(d, report.stage, s.step, "critic loss");
    d.backward();
    s.opt_d->step();
    critic->eval();
  }
  s.opt_g->zero_grad();
  LossTerms<Tensor> t;
  t.l1 = siedob::l1_loss(out, crop);
  t.perceptual = perceptual_loss(out, crop, pyramid_);
  t.gan = config_.adversarial ? hinge_g_loss(critic->forward(torch::cat({out, sem}, 1))) : zero_like_scalar(out);
  auto total = compose_objective(Objective::ObjectInpaint, t, config_.loss);
  report.total = checked(total, report.stage, s.step, "generator loss");
  total.backward();
  s.opt_g->step();
  report.parts = {{"l1", t.l1->item<double>()}, {"perceptual", t.perceptual->item<double>()}, {"gan", t.gan->item<double>()}};
  return report;
}

LossReport Trainer::step_object_gen(StageState& s) {
  const auto& items = objects();
  std::map<int, std::vector<size_t>> by_class;
  for (size_t i = 0; i < items.size(); ++i) by_class[items[i].class_id].push_back(i);
  std::uniform_int_distribution<size_t> pick(0, items.size() - 1);

  std::vector<Tensor> gts, style_inputs, masks, sems;
  for (int b = 0; b < config_.batch_size; ++b) {
    const size_t i = pick(s.rng);
    const auto& item = items[i];
    const auto& same = by_class[item.class_id];
    size_t j = i;
    if (same.size() > 1) {
      std::uniform_int_distribution<size_t> other(0, same.size() - 2);
      j = same[other(s.rng)];
      if (j == i) j = same.back();
    } else if (!s.warned_style_fallback) {
      std::cerr << "warning: class " << item.class_id << " has a single training instance; using it as its own style image\n";
      s.warned_style_fallback = true;
    }
    gts.push_back(item.style_input);
    style_inputs.push_back(items[j].style_input);
    masks.push_back(item.mask_t);
    sems.push_back(item.semantic);
  }
  const auto gt = torch::cat(gts), style_img = torch::cat(style_inputs), mask = torch::cat(masks), sem = torch::cat(sems);
  const auto n = gt.size(0);

  nets_.g_og->train();
  nets_.e_s->train();
  nets_.e_s_prime->train(config_.train_style_verifier);
  auto codes = nets_.e_s->forward(torch::cat({gt, style_img}));
  auto results = nets_.g_og->forward(torch::cat({sem, sem}), codes, torch::cat({mask, mask})) * torch::cat({mask, mask});
  auto r_gt = results.narrow(0, 0, n), r_s = results.narrow(0, n, n);

  LossReport report;
  report.stage = Stage::ObjectGen;
  report.step = s.step;
  auto& critic = nets_.d_obj_gen;
  const auto sem2 = torch::cat({sem, sem});
  if (config_.adversarial) {
    critic->train();
    s.opt_d->zero_grad();
    auto d = hinge_d_loss(critic->forward(torch::cat({gt, sem}, 1)), critic->forward(torch::cat({results.detach(), sem2}, 1)));
    report.critic = checked(d, report.stage, s.step, "critic loss");
    d.backward();
    s.opt_d->step();
    critic->eval();
  }

  s.opt_g->zero_grad();
  LossTerms<Tensor> t;
  t.l1 = siedob::l1_loss(r_gt, gt);
  t.perceptual = perceptual_loss(r_gt, gt, pyramid_);
  t.perceptual_style = perceptual_loss(r_s, gt, pyramid_);
  if (config_.adversarial) {
    auto scores = critic->forward(torch::cat({results, sem2}, 1));
    t.gan = hinge_g_loss(scores.narrow(0, 0, n));
    t.gan_style = hinge_g_loss(scores.narrow(0, n, n));
  } else {
    t.gan = t.gan_style = zero_like_scalar(results);
  }
  auto verify = nets_.e_s_prime->forward(torch::cat({r_gt, r_s, gt, style_img}));
  t.scc = scc_loss(verify.narrow(0, 0, n), verify.narrow(0, 2 * n, n));
  t.scc_style = scc_loss(verify.narrow(0, n, n), verify.narrow(0, 3 * n, n));
  auto total = compose_objective(Objective::ObjectGen, t, config_.loss);
  report.total = checked(total, report.stage, s.step, "generator loss");
  total.backward();
  s.opt_g->step();
  report.parts = {{"l1", t.l1->item<double>()},
                  {"perceptual", t.perceptual->item<double>()},
                  {"gan", t.gan->item<double>()},
                  {"scc", t.scc->item<double>()},
                  {"perceptual_style", t.perceptual_style->item<double>()},
                  {"gan_style", t.gan_style->item<double>()},
                  {"scc_style", t.scc_style->item<double>()}};
  return report;
}

LossReport Trainer::step_fusion(StageState& s) {
  const auto dtype = config_.dtype();
  const int n = config_.scene_size;
  std::uniform_int_distribution<size_t> pick(0, train_.size() - 1);
  std::vector<Tensor> comps, gts, segs, masks;
  for (int b = 0; b < config_.batch_size; ++b) {
    const auto& sample = train_[pick(s.rng)];
    const Mask m = generate_training_mask(draw_mask_kind(s.rng), n, n, s.rng, config_.mask_params);
    const auto dec = disassemble(erase_input(sample.image, m), sample.seg, m, sample.instances,
                                 DisassembleOptions{config_.crop_size, config_.visibility_threshold});
    EditOptions opts;
    opts.fusion = false;
    // Generated objects take the style of the object they replace.
    for (size_t i = 0; i < dec.objects.size(); ++i) {
      const auto& rec = dec.objects[i].record;
      if (rec.mode != ObjectMode::Generate) continue;
      const auto gt_crop = crop_object(sample.image, rec, config_.crop_size);
      opts.instance_codes[static_cast<int>(i)] = encode_style(nets_.e_s, gt_crop.image, gt_crop.mask, rec.class_id, dtype);
    }
    auto composite = s.upstream->edit(sample.image, sample.seg, m, sample.instances, opts).composite;
    if (config_.fusion_jitter > 0) {
      // Independent colour offsets for the generated region and for some objects, so the
      // composite carries seams like separately generated parts do.
      std::uniform_real_distribution<double> offset(-config_.fusion_jitter, config_.fusion_jitter);
      std::bernoulli_distribution coin(0.5);
      auto shift = [&](const Mask& where) {
        const double d[3] = {offset(s.rng), offset(s.rng), offset(s.rng)};
        for (int y = 0; y < n; ++y)
          for (int x = 0; x < n; ++x)
            if (where.at(y, x) && m.at(y, x))
              for (int c = 0; c < 3; ++c)
                composite.at(y, x, c) = static_cast<float>(std::clamp(composite.at(y, x, c) + d[c], 0.0, 1.0));
      };
      shift(m);
      for (const auto& obj : dec.objects)
        if (coin(s.rng)) shift(obj.record.mask);
    }
    comps.push_back(image_to_tensor(composite, dtype));
    gts.push_back(image_to_tensor(sample.image, dtype));
    segs.push_back(onehot(sample.seg.labels, sample.seg.num_classes, dtype));
    masks.push_back(mask_to_tensor(m, dtype));
  }
  const auto comp = torch::cat(comps), gt = torch::cat(gts), seg = torch::cat(segs), mask = torch::cat(masks);

  nets_.f_net->train();
  auto out = nets_.f_net->forward(comp, seg, mask);
  auto blended = gt * (1.0 - mask) + out * mask;
  LossReport report;
  report.stage = Stage::Fusion;
  report.step = s.step;
  auto& critic = nets_.d_f;
  if (config_.adversarial) {
    critic->train();
    s.opt_d->zero_grad();
    auto d = hinge_d_loss(critic->forward(torch::cat({gt, seg}, 1)), critic->forward(torch::cat({blended.detach(), seg}, 1)));
    report.critic = checked(d, report.stage, s.step, "critic loss");
    d.backward();
    s.opt_d->step();
    critic->eval();
  }
  s.opt_g->zero_grad();
  LossTerms<Tensor> t;
  t.perceptual = perceptual_loss(out, gt, pyramid_);
  t.gan = config_.adversarial ? hinge_g_loss(critic->forward(torch::cat({blended, seg}, 1))) : zero_like_scalar(out);
  auto total = compose_objective(Objective::Fusion, t, config_.loss);
  report.total = checked(total, report.stage, s.step, "generator loss");
  if (total.requires_grad()) total.backward();
  s.opt_g->step();
  report.parts = {{"perceptual", t.perceptual->item<double>()}, {"gan", t.gan->item<double>()}};
  return report;
}

std::vector<LossReport> Trainer::run(Stage stage, int steps, bool checkpoint,
                                     const std::function<void(const LossReport&)>& on_log) {
  if (steps < 0) {
    switch (stage) {
      case Stage::Background: steps = config_.steps.background; break;
      case Stage::ObjectInpaint: steps = config_.steps.object_inpaint; break;
      case Stage::ObjectGen: steps = config_.steps.object_gen; break;
      case Stage::Fusion: steps = config_.steps.fusion; break;
    }
  }
  state(stage);  // surfaces missing prerequisites before any step
  std::vector<LossReport> logged;
  std::ofstream csv;
  if (!config_.log_dir.empty()) {
    fs::create_directories(config_.log_dir);
    csv.open(fs::path(config_.log_dir) / (std::string(to_string(stage)) + ".csv"));
    if (!csv) throw IoError("cannot write loss log in " + config_.log_dir);
  }
  auto save = [&] {
    save_checkpoint(config_.checkpoint_dir, nets_, stage_tags(stage), config_, classes_);
    for (const auto& tag : stage_tags(stage)) available_.insert(tag);
  };
  bool header = false;
  for (int i = 1; i <= steps; ++i) {
    auto report = step(stage);
    if (i % config_.log_every == 0 || i == steps) {
      if (csv.is_open()) {
        if (!header) {
          csv << "step,total,critic";
          for (const auto& [k, v] : report.parts) csv << "," << k;
          csv << "\n";
          header = true;
        }
        csv << report.step << "," << std::setprecision(9) << report.total << "," << report.critic;
        for (const auto& [k, v] : report.parts) csv << "," << v;
        csv << "\n";
        csv.flush();
      }
      if (on_log) on_log(report);
      logged.push_back(std::move(report));
    }
    if (checkpoint && i % config_.checkpoint_every == 0 && i != steps) save();
  }
  nets_.set_training(false);
  if (checkpoint) save();
  return logged;
}

}  // namespace siedob
