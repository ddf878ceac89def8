#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rawcycle/bayer.hpp"
#include "rawcycle/checkpoint.hpp"
#include "rawcycle/cli.hpp"
#include "rawcycle/config_json.hpp"
#include "rawcycle/corpus.hpp"
#include "rawcycle/image_io.hpp"
#include "rawcycle/models.hpp"
#include "rawcycle/params.hpp"
#include "rawcycle/rng.hpp"
#include "support/temp_dir.hpp"
#include "support/toy_isp.hpp"

using namespace rawcycle;
using namespace rawcycle::testsupport;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliRun {
  int rc = 0;
  std::string out;
  std::string err;
};

CliRun run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.rc = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<json> parse_lines(const std::string& text) {
  std::vector<json> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(json::parse(line));
  }
  return lines;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Random values pre-rounded to float32 so .f32 round trips compare bitwise.
Tensor random3_f32(Rng& rng, int h, int w, int c) {
  Tensor t = Tensor::make3(h, w, c);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = static_cast<double>(static_cast<float>(rng.uniform()));
  }
  return t;
}

CycleConfig tiny_cycle() {
  CycleConfig cfg;
  cfg.rgb2raw = {1, 1, 8};
  cfg.raw2rgb = {1, 1, 8};
  cfg.color_corr = {1, 1, 8, 12.0};
  cfg.reduction = 8;
  return cfg;
}

DenoiserConfig tiny_denoiser(DenoiserMode mode) {
  DenoiserConfig cfg;
  cfg.n_rrg = 1;
  cfg.n_dab = 1;
  cfg.channels = 8;
  cfg.reduction = 8;
  cfg.mode = mode;
  return cfg;
}

// Freshly initialized denoisers are exact identities (the tail conv starts
// at zero), which makes their behavior through the CLI fully predictable.
fs::path write_denoiser_ckpt(const fs::path& dir, DenoiserMode mode,
                             std::uint64_t seed = 7) {
  fs::create_directories(dir);
  DenoiserConfig cfg = tiny_denoiser(mode);
  ParamStore ps(seed);
  if (mode == DenoiserMode::kRaw) {
    run_denoiser(ps, PackedRaw{Tensor::make3(4, 4, 4)}, NoiseParams{1e-3, 1e-4}, cfg);
  } else {
    run_denoiser(ps, Tensor::make3(4, 4, 3), cfg);
  }
  const fs::path path = dir / (std::string("denoiser_") + to_string(mode) + ".ckpt");
  save_checkpoint(path, ps, {json(cfg), "denoiser_" + to_string(mode), 0});
  return path;
}

fs::path write_cycle_ckpt(const fs::path& dir, std::uint64_t seed = 11) {
  CycleConfig cfg = tiny_cycle();
  ParamStore ps(seed);
  run_cycle(ps, Tensor::make3(8, 8, 3), NoiseSwitch::off(), cfg);
  const fs::path path = dir / "cycle.ckpt";
  save_checkpoint(path, ps, {json(cfg), "joint_finetune", 0});
  return path;
}

ImageMeta packed_meta(const Tensor& t) {
  ImageMeta meta;
  meta.height = t.h();
  meta.width = t.w();
  meta.channels = t.c();
  meta.kind = "packed_raw";
  return meta;
}

ImageMeta srgb_meta(const Tensor& t) {
  ImageMeta meta;
  meta.height = t.h();
  meta.width = t.w();
  meta.channels = t.c();
  meta.kind = "srgb";
  return meta;
}

}  // namespace

TEST_CASE("help exits 0 and usage errors exit 2") {
  CliRun help = run({"--help"});
  CHECK(help.rc == 0);
  CHECK(help.out.find("Subcommands") != std::string::npos);

  CHECK(run({}).rc == 2);
  CHECK(run({"train", "--no-such-flag"}).rc == 2);
  CHECK(run({"denoise"}).rc == 2);  // required flags missing
}

TEST_CASE("count-params agrees with directly materialized stores") {
  CliRun r = run({"count-params",
                  "--set", "cycle.rgb2raw={\"n_rrg\":1,\"n_dab\":1,\"channels\":8}",
                  "--set", "cycle.raw2rgb={\"n_rrg\":1,\"n_dab\":1,\"channels\":8}",
                  "--set", "cycle.color_corr.n_rrg=1",
                  "--set", "cycle.color_corr.n_dab=1",
                  "--set", "cycle.color_corr.channels=8",
                  "--set", "denoiser.n_rrg=1",
                  "--set", "denoiser.n_dab=1",
                  "--set", "denoiser.channels=8"});
  REQUIRE(r.rc == 0);
  const json counts = json::parse(r.out);

  ParamStore cycle_ps(0);
  run_cycle(cycle_ps, Tensor::make3(8, 8, 3), NoiseSwitch::off(), tiny_cycle());
  CHECK(counts.at("cycle").at("total").get<std::size_t>() == cycle_ps.count_scalars());
  CHECK(counts.at("cycle").at("rgb2raw").get<std::size_t>() ==
        cycle_ps.count_scalars("rgb2raw/"));
  CHECK(counts.at("cycle").at("raw2rgb").get<std::size_t>() ==
        cycle_ps.count_scalars("raw2rgb/"));
  CHECK(counts.at("cycle").at("color").get<std::size_t>() ==
        cycle_ps.count_scalars("color/"));

  ParamStore den_ps(0);
  run_denoiser(den_ps, PackedRaw{Tensor::make3(4, 4, 4)}, NoiseParams{1e-3, 1e-4},
               tiny_denoiser(DenoiserMode::kRaw));
  CHECK(counts.at("denoiser_raw").get<std::size_t>() == den_ps.count_scalars());
}

TEST_CASE("denoise rejects a mode that contradicts the checkpoint") {
  TempDir dir("cli_mode");
  const fs::path ckpt = write_denoiser_ckpt(dir.path, DenoiserMode::kRaw);

  Rng rng(50);
  const Tensor noisy = random3_f32(rng, 12, 12, 4);
  const fs::path in = dir.path / "noisy.f32";
  write_f32(in.string(), noisy, packed_meta(noisy));

  CliRun r = run({"denoise", "--checkpoint", ckpt.string(), "--input", in.string(),
                  "--output", (dir.path / "out.f32").string(), "--mode", "srgb"});
  CHECK(r.rc == 2);
  CHECK(r.err.find("raw") != std::string::npos);
}

TEST_CASE("identity denoiser hits the psnr cap against its own input") {
  TempDir dir("cli_cap");
  const fs::path ckpt = write_denoiser_ckpt(dir.path, DenoiserMode::kRaw);

  Rng rng(51);
  Tensor noisy = random3_f32(rng, 12, 12, 4);
  ImageMeta meta = packed_meta(noisy);
  meta.extra = {{"shot", 0.005}, {"read", 0.0005}};
  const fs::path in = dir.path / "noisy.f32";
  write_f32(in.string(), noisy, meta);
  const fs::path out_path = dir.path / "denoised.f32";

  CliRun r = run({"denoise", "--checkpoint", ckpt.string(), "--input", in.string(),
                  "--output", out_path.string(), "--reference", in.string()});
  REQUIRE(r.rc == 0);
  const json summary = json::parse(r.out);
  CHECK(summary.at("psnr") == 100.0);
  CHECK(summary.at("ssim") == 1.0);

  // The zero-tail network is an exact identity, so the file round trips.
  ImageMeta out_meta;
  Tensor den = read_f32(out_path.string(), &out_meta);
  CHECK(out_meta.kind == "packed_raw");
  REQUIRE(den.same_shape(noisy));
  for (std::size_t i = 0; i < den.size(); ++i) REQUIRE(den[i] == noisy[i]);
}

TEST_CASE("raw denoising needs a noise level from flags or the sidecar") {
  TempDir dir("cli_level");
  const fs::path ckpt = write_denoiser_ckpt(dir.path, DenoiserMode::kRaw);

  Rng rng(52);
  const Tensor noisy = random3_f32(rng, 8, 8, 4);
  const fs::path in = dir.path / "noisy.f32";
  write_f32(in.string(), noisy, packed_meta(noisy));  // no shot/read metadata
  const std::string out_path = (dir.path / "out.f32").string();

  CliRun bare = run({"denoise", "--checkpoint", ckpt.string(), "--input", in.string(),
                     "--output", out_path});
  CHECK(bare.rc == 2);
  CHECK(bare.err.find("--shot") != std::string::npos);

  CliRun half = run({"denoise", "--checkpoint", ckpt.string(), "--input", in.string(),
                     "--output", out_path, "--shot", "0.005"});
  CHECK(half.rc == 2);

  CliRun full = run({"denoise", "--checkpoint", ckpt.string(), "--input", in.string(),
                     "--output", out_path, "--shot", "0.005", "--read", "0.0005"});
  CHECK(full.rc == 0);
  const json summary = json::parse(full.out);
  CHECK(summary.contains("output"));
  CHECK_FALSE(summary.contains("psnr"));  // no reference, no metrics
}

TEST_CASE("mosaic input comes back as a unified mosaic") {
  TempDir dir("cli_mosaic");
  const fs::path ckpt = write_denoiser_ckpt(dir.path, DenoiserMode::kRaw);

  Rng rng(53);
  const Tensor dem = random3_f32(rng, 8, 10, 3);
  const RawMosaic grbg = mosaic(dem, BayerPattern::kGrbg);
  const fs::path in = dir.path / "noisy.f32";
  write_raw_mosaic(in.string(), grbg, {{"shot", 0.004}, {"read", 0.0003}});
  const fs::path out_path = dir.path / "denoised.f32";

  CliRun r = run({"denoise", "--checkpoint", ckpt.string(), "--input", in.string(),
                  "--output", out_path.string()});
  REQUIRE(r.rc == 0);

  ImageMeta out_meta;
  const RawMosaic den = read_raw_mosaic(out_path.string(), &out_meta);
  CHECK(out_meta.kind == "raw_mosaic");
  CHECK(den.pattern == BayerPattern::kRggb);

  // Identity network: the output is the unified input, one column pair
  // smaller because unification shifts GRBG by one column.
  const RawMosaic expected = unify_pattern(grbg);
  REQUIRE(den.data.same_shape(expected.data));
  for (std::size_t i = 0; i < den.data.size(); ++i)
    REQUIRE(den.data[i] == expected.data[i]);
}

TEST_CASE("srgb denoiser round trips ppm files") {
  TempDir dir("cli_srgb");
  const fs::path ckpt = write_denoiser_ckpt(dir.path, DenoiserMode::kSrgb);

  Rng rng(54);
  const Tensor img = random3_f32(rng, 12, 12, 3);
  const fs::path in = dir.path / "noisy.ppm";
  write_ppm(in.string(), img);
  const fs::path out_path = dir.path / "denoised.ppm";

  CliRun r = run({"denoise", "--checkpoint", ckpt.string(), "--input", in.string(),
                  "--output", out_path.string(), "--reference", in.string()});
  REQUIRE(r.rc == 0);
  const json summary = json::parse(r.out);
  CHECK(summary.at("psnr") == 100.0);  // identity network against its own input
  REQUIRE(fs::exists(out_path));
  const Tensor back = read_ppm(out_path.string());
  CHECK(back.same_shape(img));
}

TEST_CASE("eval scores every pair and reports a matching aggregate") {
  TempDir dir("cli_eval");
  Rng rng(55);
  const char* names[3] = {"pair_a", "pair_b", "pair_c"};
  for (const char* name : names) {
    PairSample pair;
    pair.clean = random3_f32(rng, 12, 12, 4);
    pair.noisy = random3_f32(rng, 12, 12, 4);
    pair.noise = {0.005, 0.0005};
    save_pair_sample(dir.path / name, pair);
  }

  const fs::path report = dir.path / "report.jsonl";
  CliRun r = run({"eval", "--input", dir.path.string(), "--output", report.string()});
  REQUIRE(r.rc == 0);

  std::vector<json> lines = parse_lines(r.out);
  REQUIRE(lines.size() == 4);
  double psnr_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    CHECK(lines[i].at("scene") == names[i]);
    CHECK(lines[i].contains("ssim"));  // 12x12 fits the 11x11 window
    psnr_sum += lines[i].at("psnr").get<double>();
  }
  const json& agg = lines[3];
  CHECK(agg.at("aggregate") == true);
  CHECK(agg.at("count") == 3);
  CHECK(std::abs(agg.at("psnr").get<double>() - psnr_sum / 3.0) <= 1e-9);

  // The report file carries the same lines, and reruns are byte identical.
  CHECK(slurp(report) == r.out);
  CliRun again = run({"eval", "--input", dir.path.string()});
  CHECK(again.out == r.out);

  // An identity denoiser leaves every score unchanged.
  const fs::path ckpt = write_denoiser_ckpt(dir.path / "ckpt", DenoiserMode::kRaw);
  CliRun through = run({"eval", "--input", dir.path.string(), "--checkpoint",
                        ckpt.string(), "--mode", "raw"});
  REQUIRE(through.rc == 0);
  CHECK(through.out == r.out);
}

TEST_CASE("eval exit codes cover empty folders and model mismatches") {
  TempDir dir("cli_eval_err");
  fs::create_directories(dir.path / "empty");
  CHECK(run({"eval", "--input", (dir.path / "empty").string()}).rc == 4);

  Rng rng(56);
  PairSample pair;
  pair.clean = random3_f32(rng, 8, 8, 4);
  pair.noisy = random3_f32(rng, 8, 8, 4);
  save_pair_sample(dir.path / "pairs" / "p0", pair);

  const fs::path srgb_ckpt = write_denoiser_ckpt(dir.path, DenoiserMode::kSrgb);
  CliRun crossed = run({"eval", "--input", (dir.path / "pairs").string(),
                        "--checkpoint", srgb_ckpt.string()});
  CHECK(crossed.rc == 2);
}

TEST_CASE("synth writes pair folders that replay bit-identically") {
  TempDir dir("cli_synth");
  const fs::path ckpt = write_cycle_ckpt(dir.path);

  Rng rng(57);
  fs::create_directories(dir.path / "corpus");
  for (int i = 0; i < 2; ++i) {
    const Tensor img = random3_f32(rng, 12, 12, 3);
    const fs::path p = dir.path / "corpus" / ("img" + std::to_string(i) + ".f32");
    write_f32(p.string(), img, srgb_meta(img));
  }

  auto synth_to = [&](const fs::path& out_dir) {
    return run({"synth", "--checkpoint", ckpt.string(), "--input",
                (dir.path / "corpus").string(), "--output", out_dir.string(),
                "--mode", "raw", "--seed", "9"});
  };
  CliRun first = synth_to(dir.path / "out1");
  REQUIRE(first.rc == 0);
  const json summary = json::parse(first.out);
  CHECK(summary.at("pairs") == 2);

  CliRun second = synth_to(dir.path / "out2");
  REQUIRE(second.rc == 0);

  int files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir.path / "out1")) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const fs::path twin = dir.path / "out2" / fs::relative(entry.path(), dir.path / "out1");
    REQUIRE(fs::exists(twin));
    CHECK(slurp(entry.path()) == slurp(twin));
  }
  CHECK(files == 8);  // 2 pairs x (clean + noisy, each with a sidecar)

  std::vector<PairSample> pairs = load_pair_folder(dir.path / "out1");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].clean.c() == 4);
  CHECK(pairs[0].provenance == Provenance::kSynthetic);
  CHECK(pairs[0].noise.shot > 0.0);
}

TEST_CASE("color-match writes a matched image and rejects size mismatches") {
  TempDir dir("cli_cm");
  const fs::path ckpt = write_cycle_ckpt(dir.path);

  Rng rng(58);
  const Tensor source = random3_f32(rng, 12, 12, 3);
  const Tensor target = random3_f32(rng, 12, 12, 3);
  write_f32((dir.path / "source.f32").string(), source, srgb_meta(source));
  write_f32((dir.path / "target.f32").string(), target, srgb_meta(target));
  const fs::path out_path = dir.path / "matched.f32";

  CliRun r = run({"color-match", "--checkpoint", ckpt.string(), "--input",
                  (dir.path / "source.f32").string(), "--reference",
                  (dir.path / "target.f32").string(), "--output", out_path.string()});
  REQUIRE(r.rc == 0);
  ImageMeta meta;
  const Tensor matched = read_f32(out_path.string(), &meta);
  CHECK(meta.kind == "srgb");
  CHECK(matched.h() == 12);
  CHECK(matched.w() == 12);
  CHECK(matched.c() == 3);

  // A reference of a different size cannot gate the decoder features.
  const Tensor small = random3_f32(rng, 8, 8, 3);
  write_f32((dir.path / "small.f32").string(), small, srgb_meta(small));
  CliRun mismatched = run({"color-match", "--checkpoint", ckpt.string(), "--input",
                           (dir.path / "source.f32").string(), "--reference",
                           (dir.path / "small.f32").string(), "--output",
                           (dir.path / "bad.f32").string()});
  CHECK(mismatched.rc == 3);
}

TEST_CASE("train verb runs a toy stage from a config file") {
  TempDir dir("cli_train");
  Rng rng(59);
  for (int i = 0; i < 2; ++i) {
    const CycleScene scene = toy_scene(rng, 12, 12);
    const fs::path sd = dir.path / "scenes" / ("s" + std::to_string(i));
    fs::create_directories(sd);
    write_f32((sd / "srgb_clean.f32").string(), scene.srgb_clean,
              srgb_meta(scene.srgb_clean));
    write_raw_mosaic((sd / "raw_clean.f32").string(), scene.raw_clean);
  }

  json cfg = {{"train",
               {{"stage", "rgb2raw"},
                {"epochs", 2},
                {"batch_size", 2},
                {"seed", 3},
                {"lr", {{"initial", 1e-3}}}}},
              {"cycle", json(tiny_cycle())},
              {"data", {{"scenes", (dir.path / "scenes").string()}}},
              {"out_dir", (dir.path / "run1").string()}};
  const fs::path cfg_path = dir.path / "train.json";
  std::ofstream(cfg_path) << cfg.dump(2);

  CliRun r = run({"train", "--config", cfg_path.string()});
  REQUIRE(r.rc == 0);
  const json summary = json::parse(r.out);
  CHECK(summary.at("stage") == "rgb2raw");
  CHECK(summary.at("steps") == 2);  // 2 scenes / batch 2 = 1 step, 2 epochs
  REQUIRE(fs::exists(summary.at("last_checkpoint").get<std::string>()));
  CHECK(fs::exists(dir.path / "run1" / "metrics.jsonl"));
  const CheckpointManifest man =
      peek_checkpoint(summary.at("last_checkpoint").get<std::string>());
  CHECK(man.stage == "rgb2raw");

  // --set overrides the file and --out redirects the outputs.
  CliRun longer = run({"train", "--config", cfg_path.string(), "--set",
                       "train.epochs=3", "--out", (dir.path / "run2").string()});
  REQUIRE(longer.rc == 0);
  CHECK(json::parse(longer.out).at("steps") == 3);
  CHECK(fs::exists(dir.path / "run2" / "metrics.jsonl"));

  // Without scene data the stage cannot start.
  json no_data = cfg;
  no_data.erase("data");
  const fs::path bad_path = dir.path / "bad.json";
  std::ofstream(bad_path) << no_data.dump();
  CliRun missing = run({"train", "--config", bad_path.string()});
  CHECK(missing.rc == 2);
  CHECK(missing.err.find("data.scenes") != std::string::npos);
}

TEST_CASE("config mistakes exit 2 with a config error message") {
  TempDir dir("cli_cfg");
  const fs::path broken = dir.path / "broken.json";
  std::ofstream(broken) << "{ not json";
  CliRun bad_file = run({"train", "--config", broken.string()});
  CHECK(bad_file.rc == 2);
  CHECK(bad_file.err.find("config error") != std::string::npos);

  CliRun bad_set = run({"count-params", "--set", "no-equals-sign"});
  CHECK(bad_set.rc == 2);

  CliRun bad_type = run({"count-params", "--set", "denoiser.channels=lots"});
  CHECK(bad_type.rc == 2);
}
