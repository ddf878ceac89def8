#include "rawcycle/cli.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rawcycle/bayer.hpp"
#include "rawcycle/checkpoint.hpp"
#include "rawcycle/config_json.hpp"
#include "rawcycle/corpus.hpp"
#include "rawcycle/errors.hpp"
#include "rawcycle/image_io.hpp"
#include "rawcycle/metrics.hpp"
#include "rawcycle/models.hpp"
#include "rawcycle/params.hpp"
#include "rawcycle/rng.hpp"
#include "rawcycle/synth.hpp"
#include "rawcycle/train.hpp"

namespace rawcycle {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Config plumbing. One JSON file feeds every verb; sections:
//   train, cycle, denoiser, dataset, sampler  -> the matching config structs
//   data: {scenes, val_scenes, pairs, val_pairs}  -> folder paths
//   out_dir, init_checkpoints                 -> training outputs and warm starts
// --set key.path=value patches the tree after loading, so any field is
// reachable from the command line without editing the file.

json load_config_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

void apply_overrides(json& cfg, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects key.path=value, got \"" + kv + "\"");
    const std::string path = kv.substr(0, eq);
    const std::string raw_value = kv.substr(eq + 1);

    json value;
    try {
      value = json::parse(raw_value);
    } catch (const json::parse_error&) {
      value = raw_value;  // unquoted strings and paths land here
    }

    json* node = &cfg;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = path.find('.', start);
      const std::string key = path.substr(start, dot - start);
      if (key.empty()) throw ConfigError("--set key \"" + path + "\" has an empty segment");
      if (dot == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      node = &(*node)[key];
      start = dot + 1;
    }
  }
}

// Fills a config struct from one section: defaults first, then the user's
// (possibly partial) object merged on top. Unknown keys are ignored.
template <typename T>
T section_as(const json& cfg, const char* key) {
  json merged = T{};
  if (cfg.contains(key)) {
    try {
      merged.merge_patch(cfg.at(key));
      return merged.template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad \"") + key + "\" config section: " + e.what());
    }
  }
  return merged.template get<T>();
}

CycleConfig cycle_from_manifest(const CheckpointManifest& man, const std::string& path) {
  try {
    CycleConfig cfg = man.config.get<CycleConfig>();
    validate(cfg);
    return cfg;
  } catch (const json::exception&) {
    throw ConfigError("checkpoint " + path + " does not hold a cycle model");
  }
}

DenoiserConfig denoiser_from_manifest(const CheckpointManifest& man,
                                      const std::string& path) {
  try {
    DenoiserConfig cfg = man.config.get<DenoiserConfig>();
    validate(cfg);
    return cfg;
  } catch (const json::exception&) {
    throw ConfigError("checkpoint " + path + " does not hold a denoiser model");
  }
}

bool ends_with_ppm(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0;
}

void ensure_parent_dir(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_srgb_output(const std::string& path, const Tensor& t) {
  ensure_parent_dir(path);
  if (ends_with_ppm(path)) {
    write_ppm(path, t);
    return;
  }
  ImageMeta meta;
  meta.height = t.h();
  meta.width = t.w();
  meta.channels = t.c();
  meta.kind = "srgb";
  write_f32(path, t, meta);
}

// Metrics between two same-shaped tensors; SSIM only when the window fits.
json quality_json(const Tensor& pred, const Tensor& ref) {
  json j;
  j["psnr"] = psnr(pred, ref);
  if (pred.h() >= 11 && pred.w() >= 11) j["ssim"] = ssim(pred, ref);
  return j;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::vector<std::string> checkpoints;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  json cfg = load_config_json(a.config_path);
  apply_overrides(cfg, a.sets);

  TrainSetup setup;
  setup.config = section_as<TrainConfig>(cfg, "train");
  if (a.seed_given) setup.config.seed = a.seed;
  setup.cycle = section_as<CycleConfig>(cfg, "cycle");
  setup.denoiser = section_as<DenoiserConfig>(cfg, "denoiser");

  const json data = cfg.value("data", json::object());
  const std::string stage_name = to_string(setup.config.stage);
  if (is_cycle_stage(setup.config.stage)) {
    const std::string scenes = data.value("scenes", std::string());
    if (scenes.empty())
      throw ConfigError("stage " + stage_name + " needs data.scenes in the config");
    setup.data.train_scenes = load_scene_folder(scenes);
    const std::string val = data.value("val_scenes", std::string());
    if (!val.empty()) setup.data.val_scenes = load_scene_folder(val);
  } else {
    const std::string pairs = data.value("pairs", std::string());
    if (pairs.empty())
      throw ConfigError("stage " + stage_name + " needs data.pairs in the config");
    setup.data.train_pairs = load_pair_folder(pairs);
    const std::string val = data.value("val_pairs", std::string());
    if (!val.empty()) setup.data.val_pairs = load_pair_folder(val);
  }

  std::string out_dir = a.out_dir;
  if (out_dir.empty()) out_dir = cfg.value("out_dir", std::string());
  if (out_dir.empty())
    throw ConfigError("no output directory: pass --out or set out_dir in the config");
  setup.out_dir = out_dir;

  if (cfg.contains("init_checkpoints")) {
    try {
      for (const auto& entry : cfg.at("init_checkpoints"))
        setup.init_checkpoints.emplace_back(entry.get<std::string>());
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad init_checkpoints list: ") + e.what());
    }
  }
  for (const std::string& c : a.checkpoints) setup.init_checkpoints.emplace_back(c);

  const TrainResult r = run_training(setup);
  json summary = {{"stage", stage_name},
                  {"steps", r.steps},
                  {"final_loss", r.final_loss},
                  {"best_val_psnr", r.best_val_psnr},
                  {"last_checkpoint", r.last_checkpoint.string()},
                  {"best_checkpoint", r.best_checkpoint.string()}};
  out << summary.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string checkpoint;
  std::string input;
  std::string output;
  std::string mode = "raw";
  std::uint64_t seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  json cfg = load_config_json(a.config_path);
  apply_overrides(cfg, a.sets);

  const CheckpointManifest man = peek_checkpoint(a.checkpoint);
  const CycleConfig cycle = cycle_from_manifest(man, a.checkpoint);
  ParamStore ps(0);
  load_checkpoint(a.checkpoint, ps);

  DatasetSpec spec = section_as<DatasetSpec>(cfg, "dataset");
  spec.root = a.input;
  spec.kind = DatasetSpec::Kind::kSrgbFolder;
  validate(spec);
  const NoiseSamplerConfig sampler = section_as<NoiseSamplerConfig>(cfg, "sampler");
  const DenoiserMode mode = denoiser_mode_from_string(a.mode);

  Rng rng(a.seed);
  const std::vector<Tensor> images = prepare_corpus(spec, rng);
  synth_pair_folder(ps, cycle, images, mode, a.output, rng, sampler);

  json summary = {{"pairs", images.size()}, {"mode", a.mode}, {"output", a.output}};
  out << summary.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// denoise

struct DenoiseArgs {
  std::string checkpoint;
  std::string input;
  std::string output;
  std::string mode;  // optional; must agree with the checkpoint when given
  std::string reference;
  double shot = 0.0;
  double read = 0.0;
  bool shot_given = false;
  bool read_given = false;
};

// Reads a raw reference or input in either on-disk representation and
// returns it packed.
PackedRaw read_packed_any(const std::string& path, ImageMeta* meta_out = nullptr) {
  ImageMeta meta;
  Tensor t = read_f32(path, &meta);
  if (meta_out) *meta_out = meta;
  if (meta.kind == "raw_mosaic") {
    RawMosaic raw{t, bayer_pattern_from_string(meta.pattern)};
    return pack(unify_pattern(raw));
  }
  if (meta.kind == "packed_raw" && t.c() == 4) return PackedRaw{t};
  throw DataError(path + " holds kind \"" + meta.kind +
                  "\", expected raw_mosaic or packed_raw");
}

int cmd_denoise(const DenoiseArgs& a, std::ostream& out) {
  const CheckpointManifest man = peek_checkpoint(a.checkpoint);
  const DenoiserConfig dcfg = denoiser_from_manifest(man, a.checkpoint);
  if (!a.mode.empty() && denoiser_mode_from_string(a.mode) != dcfg.mode)
    throw ConfigError("checkpoint " + a.checkpoint + " holds a " + to_string(dcfg.mode) +
                      " denoiser but --mode " + a.mode + " was requested");
  ParamStore ps(0);
  load_checkpoint(a.checkpoint, ps);

  if (a.shot_given != a.read_given)
    throw ConfigError("--shot and --read must be given together");

  json summary;
  summary["output"] = a.output;

  if (dcfg.mode == DenoiserMode::kRaw) {
    ImageMeta in_meta;
    const PackedRaw noisy = read_packed_any(a.input, &in_meta);

    NoiseParams level{};
    if (a.shot_given) {
      level = {a.shot, a.read};
    } else if (in_meta.extra.count("shot") && in_meta.extra.count("read")) {
      level = {in_meta.extra.at("shot"), in_meta.extra.at("read")};
    } else {
      throw ConfigError(
          "raw denoising needs a noise level: pass --shot/--read or use an input "
          "whose sidecar carries shot/read");
    }

    const PackedRaw denoised = run_denoiser(ps, noisy, level, dcfg);
    ensure_parent_dir(a.output);
    if (in_meta.kind == "raw_mosaic") {
      write_raw_mosaic(a.output, unpack(denoised));
    } else {
      ImageMeta meta;
      meta.height = denoised.data.h();
      meta.width = denoised.data.w();
      meta.channels = 4;
      meta.kind = "packed_raw";
      write_f32(a.output, denoised.data, meta);
    }
    if (!a.reference.empty())
      summary.update(quality_json(denoised.data, read_packed_any(a.reference).data));
  } else {
    const Tensor noisy = read_srgb_auto(a.input);
    const Tensor denoised = run_denoiser(ps, noisy, dcfg);
    write_srgb_output(a.output, denoised);
    if (!a.reference.empty())
      summary.update(quality_json(denoised, read_srgb_auto(a.reference)));
  }

  out << summary.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string input;
  std::string checkpoint;
  std::string mode;
  std::string output;  // optional JSONL report copy
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const std::vector<PairSample> pairs = load_pair_folder(a.input);
  for (const PairSample& p : pairs) {
    if (p.clean.c() != pairs.front().clean.c())
      throw DataError("pair folder " + a.input + " mixes 3- and 4-channel pairs");
  }

  std::optional<DenoiserConfig> dcfg;
  ParamStore ps(0);
  if (!a.checkpoint.empty()) {
    const CheckpointManifest man = peek_checkpoint(a.checkpoint);
    dcfg = denoiser_from_manifest(man, a.checkpoint);
    if (!a.mode.empty() && denoiser_mode_from_string(a.mode) != dcfg->mode)
      throw ConfigError("checkpoint " + a.checkpoint + " holds a " +
                        to_string(dcfg->mode) + " denoiser but --mode " + a.mode +
                        " was requested");
    load_checkpoint(a.checkpoint, ps);
    const int want = dcfg->mode == DenoiserMode::kRaw ? 4 : 3;
    if (pairs.front().clean.c() != want)
      throw ConfigError("pair folder " + a.input + " holds " +
                        std::to_string(pairs.front().clean.c()) +
                        "-channel pairs, which does not fit a " + to_string(dcfg->mode) +
                        " denoiser");
  }

  bool with_ssim = true;
  for (const PairSample& p : pairs)
    with_ssim = with_ssim && p.clean.h() >= 11 && p.clean.w() >= 11;

  std::ofstream report;
  if (!a.output.empty()) {
    ensure_parent_dir(a.output);
    report.open(a.output, std::ios::trunc);
    if (!report) throw DataError("cannot open report file " + a.output);
  }
  auto emit = [&](const json& j) {
    out << j.dump() << "\n";
    if (report.is_open()) report << j.dump() << "\n";
  };

  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const PairSample& p : pairs) {
    Tensor pred;
    if (!dcfg) {
      pred = p.noisy;
    } else if (dcfg->mode == DenoiserMode::kRaw) {
      pred = run_denoiser(ps, PackedRaw{p.noisy}, p.noise, *dcfg).data;
    } else {
      pred = run_denoiser(ps, p.noisy, *dcfg);
    }
    json row;
    row["scene"] = p.name;
    row["psnr"] = psnr(pred, p.clean);
    psnr_sum += row["psnr"].get<double>();
    if (with_ssim) {
      row["ssim"] = ssim(pred, p.clean);
      ssim_sum += row["ssim"].get<double>();
    }
    emit(row);
  }

  const double n = static_cast<double>(pairs.size());
  json agg;
  agg["aggregate"] = true;
  agg["count"] = pairs.size();
  agg["psnr"] = psnr_sum / n;
  if (with_ssim) agg["ssim"] = ssim_sum / n;
  emit(agg);
  return 0;
}

// ---------------------------------------------------------------------------
// color-match

struct ColorMatchArgs {
  std::string checkpoint;
  std::string input;
  std::string reference;
  std::string output;
};

int cmd_color_match(const ColorMatchArgs& a, std::ostream& out) {
  const CheckpointManifest man = peek_checkpoint(a.checkpoint);
  const CycleConfig cycle = cycle_from_manifest(man, a.checkpoint);
  ParamStore ps(0);
  load_checkpoint(a.checkpoint, ps);

  const Tensor source = read_srgb_auto(a.input);
  const Tensor target = read_srgb_auto(a.reference);
  const RawMosaic raw_src = run_rgb2raw(ps, source, cycle);
  const Tensor matched = run_raw2rgb(ps, raw_src, target, cycle);
  write_srgb_output(a.output, matched);

  json summary = {{"output", a.output}};
  out << summary.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// count-params

struct CountParamsArgs {
  std::string config_path;
  std::vector<std::string> sets;
};

int cmd_count_params(const CountParamsArgs& a, std::ostream& out) {
  json cfg = load_config_json(a.config_path);
  apply_overrides(cfg, a.sets);
  const CycleConfig cycle = section_as<CycleConfig>(cfg, "cycle");
  validate(cycle);
  const DenoiserConfig denoiser = section_as<DenoiserConfig>(cfg, "denoiser");
  validate(denoiser);

  // A dummy forward materializes every parameter under its stable name.
  ParamStore cycle_ps(0);
  run_cycle(cycle_ps, Tensor::make3(8, 8, 3), NoiseSwitch::off(), cycle);

  ParamStore den_ps(0);
  DenoiserConfig raw_cfg = denoiser;
  raw_cfg.mode = DenoiserMode::kRaw;
  run_denoiser(den_ps, PackedRaw{Tensor::make3(8, 8, 4)}, NoiseParams{1e-3, 1e-4},
               raw_cfg);
  DenoiserConfig srgb_cfg = denoiser;
  srgb_cfg.mode = DenoiserMode::kSrgb;
  run_denoiser(den_ps, Tensor::make3(8, 8, 3), srgb_cfg);

  json counts = {{"cycle",
                  {{"total", cycle_ps.count_scalars()},
                   {"rgb2raw", cycle_ps.count_scalars("rgb2raw/")},
                   {"raw2rgb", cycle_ps.count_scalars("raw2rgb/")},
                   {"color", cycle_ps.count_scalars("color/")}}},
                 {"denoiser_raw", den_ps.count_scalars("denoise_raw/")},
                 {"denoiser_srgb", den_ps.count_scalars("denoise_srgb/")}};
  out << counts.dump() << "\n";
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"learned sRGB<->RAW cycle: pair synthesis, denoising, color matching"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "run one training stage");
  train->add_option("--config", train_args.config_path, "JSON config file");
  train->add_option("--set", train_args.sets, "config override, key.path=value");
  train->add_option("--out", train_args.out_dir, "output directory (overrides out_dir)");
  train->add_option("--checkpoint", train_args.checkpoints,
                    "warm-start checkpoint, repeatable");
  CLI::Option* train_seed = train->add_option("--seed", train_args.seed, "training seed");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "synthesize clean/noisy pair folders");
  synth->add_option("--checkpoint", synth_args.checkpoint, "cycle model checkpoint")
      ->required();
  synth->add_option("--input", synth_args.input, "sRGB corpus folder")->required();
  synth->add_option("--output", synth_args.output, "pair folder to create")->required();
  synth->add_option("--mode", synth_args.mode, "raw or srgb pairs (default raw)");
  synth->add_option("--seed", synth_args.seed, "sampling seed");
  synth->add_option("--config", synth_args.config_path,
                    "JSON config file (dataset/sampler sections)");
  synth->add_option("--set", synth_args.sets, "config override, key.path=value");

  DenoiseArgs den_args;
  CLI::App* denoise = app.add_subcommand("denoise", "denoise one image");
  denoise->add_option("--checkpoint", den_args.checkpoint, "denoiser checkpoint")
      ->required();
  denoise->add_option("--input", den_args.input, "noisy image")->required();
  denoise->add_option("--output", den_args.output, "denoised image path")->required();
  denoise->add_option("--mode", den_args.mode, "expected mode, raw or srgb");
  denoise->add_option("--reference", den_args.reference,
                      "clean image; adds psnr/ssim to the summary");
  CLI::Option* shot_opt =
      denoise->add_option("--shot", den_args.shot, "shot noise variance per unit signal");
  CLI::Option* read_opt =
      denoise->add_option("--read", den_args.read, "read noise variance");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "score a clean/noisy pair folder");
  eval->add_option("--input", eval_args.input, "pair folder")->required();
  eval->add_option("--checkpoint", eval_args.checkpoint,
                   "denoiser checkpoint; omitted scores the noisy images as-is");
  eval->add_option("--mode", eval_args.mode, "expected mode, raw or srgb");
  eval->add_option("--output", eval_args.output, "also write the JSONL report here");

  ColorMatchArgs cm_args;
  CLI::App* color_match =
      app.add_subcommand("color-match", "re-render --input under --reference's palette");
  color_match->add_option("--checkpoint", cm_args.checkpoint, "cycle model checkpoint")
      ->required();
  color_match->add_option("--input", cm_args.input, "source sRGB image")->required();
  color_match->add_option("--reference", cm_args.reference, "palette reference image")
      ->required();
  color_match->add_option("--output", cm_args.output, "matched image path")->required();

  CountParamsArgs cp_args;
  CLI::App* count_params =
      app.add_subcommand("count-params", "print learnable parameter counts");
  count_params->add_option("--config", cp_args.config_path, "JSON config file");
  count_params->add_option("--set", cp_args.sets, "config override, key.path=value");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  train_args.seed_given = train_seed->count() > 0;
  den_args.shot_given = shot_opt->count() > 0;
  den_args.read_given = read_opt->count() > 0;

  try {
    if (train->parsed()) return cmd_train(train_args, out);
    if (synth->parsed()) return cmd_synth(synth_args, out);
    if (denoise->parsed()) return cmd_denoise(den_args, out);
    if (eval->parsed()) return cmd_eval(eval_args, out);
    if (color_match->parsed()) return cmd_color_match(cm_args, out);
    if (count_params->parsed()) return cmd_count_params(cp_args, out);
    err << "error: no command selected\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ArgumentError& e) {
    err << "argument error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 4;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.emplace_back("rawcycle");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const std::string& s : full) argv.push_back(s.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace rawcycle
