#include "rawcycle/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <utility>

#include "rawcycle/checkpoint.hpp"
#include "rawcycle/config_json.hpp"
#include "rawcycle/errors.hpp"
#include "rawcycle/graph.hpp"
#include "rawcycle/losses.hpp"
#include "rawcycle/metrics.hpp"
#include "rawcycle/noise.hpp"

namespace fs = std::filesystem;

namespace rawcycle {

namespace {

constexpr std::pair<Stage, const char*> kStageNames[] = {
    {Stage::kRgb2Raw, "rgb2raw"},
    {Stage::kRaw2Rgb, "raw2rgb"},
    {Stage::kJointFinetune, "joint_finetune"},
    {Stage::kNoisyFinetune, "noisy_finetune"},
    {Stage::kDenoiserRaw, "denoiser_raw"},
    {Stage::kDenoiserSrgb, "denoiser_srgb"},
};

}  // namespace

Stage stage_from_string(const std::string& s) {
  for (const auto& [stage, name] : kStageNames) {
    if (s == name) {
      return stage;
    }
  }
  throw ConfigError("unknown training stage \"" + s + "\"");
}

std::string to_string(Stage stage) {
  for (const auto& [st, name] : kStageNames) {
    if (st == stage) {
      return name;
    }
  }
  throw ArgumentError("invalid stage value");
}

bool is_cycle_stage(Stage stage) {
  return stage != Stage::kDenoiserRaw && stage != Stage::kDenoiserSrgb;
}

double LrSchedule::at_epoch(int epoch) const {
  double lr = initial;
  for (const auto& [boundary, value] : decays) {
    if (epoch >= boundary) {
      lr = value;
    }
  }
  return lr;
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) {
    throw ConfigError("epochs must be at least 1");
  }
  if (cfg.batch_size < 1) {
    throw ConfigError("batch_size must be at least 1");
  }
  if (!(cfg.lr.initial > 0.0)) {
    throw ConfigError("lr.initial must be positive");
  }
  for (const auto& [boundary, value] : cfg.lr.decays) {
    if (boundary < 0 || !(value > 0.0)) {
      throw ConfigError("lr decays need a non-negative epoch and a positive value");
    }
  }
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) ||
      !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(cfg.adam_eps > 0.0)) {
    throw ConfigError("adam eps must be positive");
  }
  if (!(cfg.joint_beta > 0.0 && cfg.joint_beta < 1.0)) {
    throw ConfigError("joint_beta must lie strictly between 0 and 1");
  }
  if (!(cfg.log_eps > 0.0)) {
    throw ConfigError("log_eps must be positive");
  }
  if (cfg.crop < 0 || cfg.crop % 2 != 0) {
    throw ConfigError("crop must be 0 or a positive even number");
  }
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  nlohmann::json decays = nlohmann::json::array();
  for (const auto& [epoch, value] : cfg.lr.decays) {
    decays.push_back({{"epoch", epoch}, {"value", value}});
  }
  j = nlohmann::json{
      {"stage", to_string(cfg.stage)},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"seed", cfg.seed},
      {"lr", {{"initial", cfg.lr.initial}, {"decays", decays}}},
      {"adam",
       {{"beta1", cfg.adam_beta1}, {"beta2", cfg.adam_beta2}, {"eps", cfg.adam_eps}}},
      {"joint_beta", cfg.joint_beta},
      {"log_eps", cfg.log_eps},
      {"crop", cfg.crop},
      {"augment_flips", cfg.augment_flips},
  };
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  cfg = TrainConfig{};
  if (j.contains("stage")) {
    cfg.stage = stage_from_string(j.at("stage").get<std::string>());
  }
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("lr")) {
    const nlohmann::json& lr = j.at("lr");
    cfg.lr.initial = lr.value("initial", cfg.lr.initial);
    if (lr.contains("decays")) {
      cfg.lr.decays.clear();
      for (const nlohmann::json& d : lr.at("decays")) {
        cfg.lr.decays.emplace_back(d.at("epoch").get<int>(), d.at("value").get<double>());
      }
    }
  }
  if (j.contains("adam")) {
    const nlohmann::json& adam = j.at("adam");
    cfg.adam_beta1 = adam.value("beta1", cfg.adam_beta1);
    cfg.adam_beta2 = adam.value("beta2", cfg.adam_beta2);
    cfg.adam_eps = adam.value("eps", cfg.adam_eps);
  }
  cfg.joint_beta = j.value("joint_beta", cfg.joint_beta);
  cfg.log_eps = j.value("log_eps", cfg.log_eps);
  cfg.crop = j.value("crop", cfg.crop);
  cfg.augment_flips = j.value("augment_flips", cfg.augment_flips);
}

void AdamOptimizer::step(ParamStore& ps, double lr) {
  ++t_;
  double warm1 = 1.0 - std::pow(beta1_, t_);
  double warm2 = 1.0 - std::pow(beta2_, t_);
  for (const std::string& name : ps.names()) {
    Tensor& p = ps.tensor(name);
    const Tensor& g = ps.grad(name);

    auto slot = [&](std::map<std::string, Tensor>& buffers) -> Tensor& {
      auto it = buffers.find(name);
      if (it == buffers.end()) {
        it = buffers.emplace(name, Tensor::zeros_like(p)).first;
      }
      return it->second;
    };
    Tensor& m = slot(m_);
    Tensor& v = slot(v_);

    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      p[i] -= lr * (m[i] / warm1) / (std::sqrt(v[i] / warm2) + eps_);
    }
  }
}

namespace {

// One sample's loss: the tape node driving backward plus the plain component
// breakdown for the metrics stream (identical arithmetic, evaluated on the
// forward tensors already sitting on the tape).
struct ItemLoss {
  Value node;
  LossValue plain;
};

ItemLoss build_scene_loss(Graph& g, const CycleScene& scene, const TrainSetup& setup) {
  const TrainConfig& cfg = setup.config;
  switch (cfg.stage) {
    case Stage::kRgb2Raw: {
      Rgb2RawOut out = rgb2raw_forward(g, g.input(scene.srgb_clean), setup.cycle);
      Value node = loss_s2r(g, out.raw_hat, g.input(scene.raw_clean.data), cfg.log_eps);
      return {node, loss_s2r(g.value(out.raw_hat), scene.raw_clean.data, cfg.log_eps)};
    }
    case Stage::kRaw2Rgb: {
      Value t_color = color_correction(g, scene.srgb_clean, setup.cycle);
      Value rgb_hat =
          raw2rgb_forward(g, g.input(scene.raw_clean.data), t_color, setup.cycle);
      Value node = loss_r2s(g, rgb_hat, g.input(scene.srgb_clean));
      return {node, loss_r2s(g.value(rgb_hat), scene.srgb_clean)};
    }
    case Stage::kJointFinetune: {
      CycleOut out = cycle_forward(g, scene.srgb_clean, NoiseSwitch::off(), setup.cycle);
      Value node = loss_joint(g, out.raw_hat, g.input(scene.raw_clean.data), out.rgb_hat,
                              g.input(scene.srgb_clean), cfg.joint_beta, cfg.log_eps);
      return {node, loss_joint(g.value(out.raw_hat), scene.raw_clean.data,
                               g.value(out.rgb_hat), scene.srgb_clean, cfg.joint_beta,
                               cfg.log_eps)};
    }
    case Stage::kNoisyFinetune: {
      NoiseResidue residue = extract_residue(scene.raw_noisy, scene.raw_clean);
      CycleOut out = cycle_forward(g, scene.srgb_clean,
                                   NoiseSwitch::with_residue(std::move(residue)),
                                   setup.cycle);
      Value node = loss_joint(g, out.raw_hat, g.input(scene.raw_clean.data), out.rgb_hat,
                              g.input(scene.srgb_noisy), cfg.joint_beta, cfg.log_eps);
      return {node, loss_joint(g.value(out.raw_hat), scene.raw_clean.data,
                               g.value(out.rgb_hat), scene.srgb_noisy, cfg.joint_beta,
                               cfg.log_eps)};
    }
    default:
      throw ArgumentError("build_scene_loss called for a denoiser stage");
  }
}

ItemLoss build_pair_loss(Graph& g, const PairSample& pair, const TrainSetup& setup) {
  std::optional<Value> map;
  if (setup.denoiser.mode == DenoiserMode::kRaw) {
    map = g.input(noise_level_map(PackedRaw{pair.noisy}, pair.noise));
  }
  Value out = denoiser_forward(g, g.input(pair.noisy), map, setup.denoiser);
  Value node = g.mean_abs_diff(out, g.input(pair.clean));
  return {node, loss_r2s(g.value(out), pair.clean)};
}

CycleScene prepare_scene(CycleScene scene, const TrainConfig& cfg, Rng& aug) {
  if (cfg.crop > 0) {
    scene = scene_crop(scene, cfg.crop, aug);
  }
  if (cfg.augment_flips) {
    bool hor = aug.below(2) == 1;
    bool ver = aug.below(2) == 1;
    if (hor || ver) {
      scene = scene_flip(scene, hor, ver);
    }
  }
  return scene;
}

struct ValScore {
  double psnr = 0.0;
  bool has_ssim = false;
  double ssim = 0.0;
};

ValScore score_items(const std::vector<std::pair<Tensor, Tensor>>& items) {
  ValScore score;
  double ssim_sum = 0.0;
  bool all_big_enough = true;
  for (const auto& [pred, target] : items) {
    score.psnr += psnr(pred, target);
    if (pred.h() >= 11 && pred.w() >= 11) {
      ssim_sum += ssim(pred, target);
    } else {
      all_big_enough = false;
    }
  }
  score.psnr /= static_cast<double>(items.size());
  if (all_big_enough) {
    score.has_ssim = true;
    score.ssim = ssim_sum / static_cast<double>(items.size());
  }
  return score;
}

ValScore run_validation(const TrainSetup& setup, ParamStore& ps) {
  std::vector<std::pair<Tensor, Tensor>> items;
  if (is_cycle_stage(setup.config.stage)) {
    const auto& scenes =
        setup.data.val_scenes.empty() ? setup.data.train_scenes : setup.data.val_scenes;
    for (const CycleScene& s : scenes) {
      switch (setup.config.stage) {
        case Stage::kRgb2Raw:
          items.emplace_back(run_rgb2raw(ps, s.srgb_clean, setup.cycle).data,
                             s.raw_clean.data);
          break;
        case Stage::kRaw2Rgb:
          items.emplace_back(run_raw2rgb(ps, s.raw_clean, s.srgb_clean, setup.cycle),
                             s.srgb_clean);
          break;
        case Stage::kJointFinetune:
          items.emplace_back(
              run_cycle(ps, s.srgb_clean, NoiseSwitch::off(), setup.cycle).rgb_hat,
              s.srgb_clean);
          break;
        default: {  // noisy_finetune
          NoiseResidue residue = extract_residue(s.raw_noisy, s.raw_clean);
          items.emplace_back(
              run_cycle(ps, s.srgb_clean, NoiseSwitch::with_residue(std::move(residue)),
                        setup.cycle)
                  .rgb_hat,
              s.srgb_noisy);
          break;
        }
      }
    }
  } else {
    const auto& pairs =
        setup.data.val_pairs.empty() ? setup.data.train_pairs : setup.data.val_pairs;
    for (const PairSample& pair : pairs) {
      Tensor denoised =
          setup.denoiser.mode == DenoiserMode::kRaw
              ? run_denoiser(ps, PackedRaw{pair.noisy}, pair.noise, setup.denoiser).data
              : run_denoiser(ps, pair.noisy, setup.denoiser);
      items.emplace_back(std::move(denoised), pair.clean);
    }
  }
  return score_items(items);
}

// Stage prerequisites: which earlier checkpoints and which data a stage
// refuses to start without.
void check_stage_inputs(const TrainSetup& setup, const std::set<std::string>& loaded) {
  Stage stage = setup.config.stage;
  auto loaded_any = [&loaded](std::initializer_list<const char*> names) {
    return std::any_of(names.begin(), names.end(),
                       [&loaded](const char* n) { return loaded.count(n) != 0; });
  };

  if (stage == Stage::kJointFinetune &&
      !loaded_any({"joint_finetune", "noisy_finetune"}) &&
      !(loaded.count("rgb2raw") != 0 && loaded.count("raw2rgb") != 0)) {
    throw ConfigError(
        "joint_finetune needs rgb2raw and raw2rgb checkpoints, or a joint checkpoint "
        "to resume");
  }
  if (stage == Stage::kNoisyFinetune &&
      !loaded_any({"joint_finetune", "noisy_finetune"})) {
    throw ConfigError("noisy_finetune needs a joint_finetune checkpoint");
  }

  if (is_cycle_stage(stage)) {
    if (setup.data.train_scenes.empty()) {
      throw ConfigError("stage \"" + to_string(stage) + "\" has no training scenes");
    }
    if (stage == Stage::kNoisyFinetune) {
      auto lacks_noisy = [](const CycleScene& s) { return !s.has_noisy(); };
      if (std::any_of(setup.data.train_scenes.begin(), setup.data.train_scenes.end(),
                      lacks_noisy)) {
        throw ConfigError(
            "noisy_finetune needs real noisy/clean pairs for every training scene");
      }
      if (std::any_of(setup.data.val_scenes.begin(), setup.data.val_scenes.end(),
                      lacks_noisy)) {
        throw ConfigError("noisy_finetune validation scenes must carry the noisy half");
      }
    }
  } else {
    if ((stage == Stage::kDenoiserRaw) != (setup.denoiser.mode == DenoiserMode::kRaw)) {
      throw ConfigError("denoiser stage \"" + to_string(stage) +
                        "\" does not match denoiser mode \"" +
                        to_string(setup.denoiser.mode) + "\"");
    }
    if (setup.data.train_pairs.empty()) {
      throw ConfigError("stage \"" + to_string(stage) + "\" has no training pairs");
    }
    int want = setup.denoiser.mode == DenoiserMode::kRaw ? 4 : 3;
    auto wrong = [want](const PairSample& p) { return p.clean.c() != want; };
    if (std::any_of(setup.data.train_pairs.begin(), setup.data.train_pairs.end(), wrong) ||
        std::any_of(setup.data.val_pairs.begin(), setup.data.val_pairs.end(), wrong)) {
      throw ConfigError("stage \"" + to_string(stage) + "\" needs " +
                        std::to_string(want) + "-channel pairs");
    }
  }
}

}  // namespace

TrainResult run_training(const TrainSetup& setup, ParamStore& ps) {
  const TrainConfig& cfg = setup.config;
  validate(cfg);
  bool cycle_stage = is_cycle_stage(cfg.stage);
  nlohmann::json model_json;
  if (cycle_stage) {
    validate(setup.cycle);
    model_json = setup.cycle;
  } else {
    validate(setup.denoiser);
    model_json = setup.denoiser;
  }

  std::set<std::string> loaded_stages;
  for (const fs::path& path : setup.init_checkpoints) {
    loaded_stages.insert(load_checkpoint(path, ps, &model_json).stage);
  }
  check_stage_inputs(setup, loaded_stages);

  fs::create_directories(setup.out_dir);
  std::ofstream metrics(setup.out_dir / "metrics.jsonl", std::ios::trunc);
  if (!metrics) {
    throw DataError("cannot open metrics stream under " + setup.out_dir.string());
  }

  Rng root(cfg.seed);
  Rng order_rng = root.child(1);
  Rng aug_rng = root.child(2);
  AdamOptimizer adam(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
  std::string stage_name = to_string(cfg.stage);

  std::size_t n_items =
      cycle_stage ? setup.data.train_scenes.size() : setup.data.train_pairs.size();
  TrainResult result;
  result.last_checkpoint = setup.out_dir / "last.ckpt";
  result.best_checkpoint = setup.out_dir / "best.ckpt";
  double best_psnr = -std::numeric_limits<double>::infinity();
  long long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double lr = cfg.lr.at_epoch(epoch);
    std::vector<std::size_t> order(n_items);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n_items; i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.below(i)]);
    }

    for (std::size_t start = 0; start < n_items;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t count =
          std::min(static_cast<std::size_t>(cfg.batch_size), n_items - start);
      Graph g(&ps);
      Value acc{};
      std::map<std::string, double> component_sums;
      for (std::size_t i = 0; i < count; ++i) {
        std::size_t idx = order[start + i];
        ItemLoss item =
            cycle_stage
                ? build_scene_loss(
                      g, prepare_scene(setup.data.train_scenes[idx], cfg, aug_rng), setup)
                : build_pair_loss(g, setup.data.train_pairs[idx], setup);
        acc = i == 0 ? item.node : g.add(acc, item.node);
        for (const auto& [key, value] : item.plain.components) {
          component_sums[key] += value;
        }
      }
      Value loss = count > 1 ? g.scale_const(acc, 1.0 / static_cast<double>(count)) : acc;
      double loss_value = g.value(loss)[0];
      ++step;

      nlohmann::json line{{"epoch", epoch}, {"stage", stage_name}, {"step", step},
                          {"lr", lr},       {"loss", loss_value}};
      for (const auto& [key, sum] : component_sums) {
        line["loss_" + key] = sum / static_cast<double>(count);
      }

      if (!std::isfinite(loss_value)) {
        line["diverged"] = true;
        metrics << line.dump() << "\n";
        metrics.flush();
        throw DataError("training diverged: non-finite loss at stage " + stage_name +
                        ", epoch " + std::to_string(epoch) + ", step " +
                        std::to_string(step) + " (" + line.dump() + ")");
      }

      metrics << line.dump() << "\n";
      ps.zero_grads();
      g.backward(loss);
      adam.step(ps, lr);
      result.final_loss = loss_value;
    }

    ValScore score = run_validation(setup, ps);
    nlohmann::json val_line{{"epoch", epoch},
                            {"stage", stage_name},
                            {"step", step},
                            {"psnr", score.psnr}};
    if (score.has_ssim) {
      val_line["ssim"] = score.ssim;
    }
    metrics << val_line.dump() << "\n";

    CheckpointManifest manifest;
    manifest.config = model_json;
    manifest.stage = stage_name;
    manifest.step = step;
    save_checkpoint(result.last_checkpoint, ps, manifest);
    if (score.psnr > best_psnr) {
      best_psnr = score.psnr;
      save_checkpoint(result.best_checkpoint, ps, manifest);
    }
  }

  result.best_val_psnr = best_psnr;
  result.steps = step;
  return result;
}

TrainResult run_training(const TrainSetup& setup) {
  ParamStore ps(setup.config.seed);
  return run_training(setup, ps);
}

}  // namespace rawcycle
