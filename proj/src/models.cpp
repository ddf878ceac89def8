#include "rawcycle/models.hpp"

#include <utility>

#include "rawcycle/errors.hpp"

namespace rawcycle {

namespace {

void check_branch(const char* label, int n_rrg, int n_dab, int channels, int reduction) {
  const std::string who(label);
  if (n_rrg < 1) throw ConfigError(who + ".n_rrg must be at least 1");
  if (n_dab < 1) throw ConfigError(who + ".n_dab must be at least 1");
  if (channels < 1) throw ConfigError(who + ".channels must be at least 1");
  if (reduction < 1) throw ConfigError("reduction must be at least 1");
  if (channels % reduction != 0)
    throw ConfigError(who + ".channels must be divisible by the reduction ratio");
}

void check_rgb_input(const Tensor& x, const char* who) {
  if (x.rank() != 3 || x.c() != 3)
    throw DimensionError(std::string(who) + " expects an HxWx3 image, got " + x.shape_str());
  if (x.h() % 2 != 0 || x.w() % 2 != 0)
    throw DimensionError(std::string(who) + " needs even height and width, got " + x.shape_str());
}

std::string idx(const std::string& stem, int i) { return stem + std::to_string(i); }

}  // namespace

DenoiserMode denoiser_mode_from_string(const std::string& s) {
  if (s == "raw") return DenoiserMode::kRaw;
  if (s == "srgb") return DenoiserMode::kSrgb;
  throw ConfigError("unknown denoiser mode \"" + s + "\" (expected raw or srgb)");
}

std::string to_string(DenoiserMode mode) {
  return mode == DenoiserMode::kRaw ? "raw" : "srgb";
}

CycleConfig toy_cycle_config() {
  CycleConfig cfg;
  cfg.rgb2raw = {1, 2, 16};
  cfg.raw2rgb = {1, 2, 16};
  cfg.color_corr = {1, 2, 16, 12.0};
  cfg.reduction = 8;
  return cfg;
}

DenoiserConfig toy_denoiser_config(DenoiserMode mode) {
  return DenoiserConfig{1, 2, 16, 8, mode};
}

void validate(const CycleConfig& cfg) {
  check_branch("rgb2raw", cfg.rgb2raw.n_rrg, cfg.rgb2raw.n_dab, cfg.rgb2raw.channels,
               cfg.reduction);
  check_branch("raw2rgb", cfg.raw2rgb.n_rrg, cfg.raw2rgb.n_dab, cfg.raw2rgb.channels,
               cfg.reduction);
  check_branch("color_corr", cfg.color_corr.n_rrg, cfg.color_corr.n_dab,
               cfg.color_corr.channels, cfg.reduction);
  if (cfg.color_corr.channels != cfg.raw2rgb.channels)
    throw ConfigError("color_corr.channels must equal raw2rgb.channels for the color gate");
  if (!(cfg.color_corr.blur_sigma > 0.0))
    throw ConfigError("color_corr.blur_sigma must be positive");
}

void validate(const DenoiserConfig& cfg) {
  check_branch("denoiser", cfg.n_rrg, cfg.n_dab, cfg.channels, cfg.reduction);
}

Rgb2RawOut rgb2raw_forward(Graph& g, Value i_rgb, const CycleConfig& cfg) {
  validate(cfg);
  check_rgb_input(g.value(i_rgb), "rgb2raw");
  Value t = conv_layer(g, "rgb2raw/m0", i_rgb, cfg.rgb2raw.channels, 3);
  for (int i = 0; i < cfg.rgb2raw.n_rrg; ++i)
    t = rrg(g, idx("rgb2raw/rrg", i), t, cfg.rgb2raw.n_dab, cfg.reduction);
  Value dem = conv_layer(g, "rgb2raw/m1", t, 3, 3);
  return {dem, g.mosaic_rggb(dem)};
}

Value color_correction(Graph& g, const Tensor& i_rgb, const CycleConfig& cfg) {
  validate(cfg);
  check_rgb_input(i_rgb, "color_correction");
  Tensor low = downscale2(gaussian_blur(i_rgb, cfg.color_corr.blur_sigma));
  Value t = conv_layer(g, "color/m3", g.input(low), cfg.color_corr.channels, 3);
  for (int i = 0; i < cfg.color_corr.n_rrg; ++i)
    t = rrg(g, idx("color/rrg", i), t, cfg.color_corr.n_dab, cfg.reduction);
  return g.sigmoid(conv_layer(g, "color/m4", t, cfg.color_corr.channels, 3));
}

Value raw2rgb_forward(Graph& g, Value i_raw, Value t_color, const CycleConfig& cfg) {
  validate(cfg);
  const Tensor& raw = g.value(i_raw);
  if (raw.rank() != 3 || raw.c() != 1)
    throw DimensionError("raw2rgb expects an HxWx1 mosaic, got " + raw.shape_str());
  if (raw.h() % 2 != 0 || raw.w() % 2 != 0)
    throw DimensionError("raw2rgb needs even mosaic dims, got " + raw.shape_str());
  const Tensor& color = g.value(t_color);
  if (color.h() != raw.h() / 2 || color.w() != raw.w() / 2 ||
      color.c() != cfg.raw2rgb.channels)
    throw DimensionError("color gate " + color.shape_str() + " does not match packed raw (" +
                         std::to_string(raw.h() / 2) + "x" + std::to_string(raw.w() / 2) + "x" +
                         std::to_string(cfg.raw2rgb.channels) + ")");

  Value t = conv_layer(g, "raw2rgb/m2", g.pack_rggb(i_raw), cfg.raw2rgb.channels, 3);
  const int k = cfg.raw2rgb.n_rrg;
  for (int i = 0; i + 1 < k; ++i)
    t = rrg(g, idx("raw2rgb/rrg", i), t, cfg.raw2rgb.n_dab, cfg.reduction);
  t = g.add(t, g.hadamard(t, t_color));
  t = rrg(g, idx("raw2rgb/rrg", k - 1), t, cfg.raw2rgb.n_dab, cfg.reduction);
  return g.pixel_shuffle(conv_layer(g, "raw2rgb/m5", t, 12, 3), 2);
}

CycleOut cycle_forward(Graph& g, const Tensor& i_rgb, const NoiseSwitch& sw,
                       const CycleConfig& cfg, Rng* rng) {
  Rgb2RawOut enc = rgb2raw_forward(g, g.input(i_rgb), cfg);
  Value fed = enc.raw_hat;
  if (sw.kind == NoiseSwitchKind::kParams) {
    if (rng == nullptr)
      throw ArgumentError("noise injection in cycle_forward needs a random source");
    RawMosaic clean{g.value(enc.raw_hat), BayerPattern::kRggb};
    RawMosaic noisy = inject_noise(clean, sw.params, *rng);
    fed = g.add(enc.raw_hat, g.input(noisy.data - clean.data));
  } else if (sw.kind == NoiseSwitchKind::kResidue) {
    fed = g.add(enc.raw_hat, g.input(sw.residue.data));
  }
  Value t_color = color_correction(g, i_rgb, cfg);
  return {enc.dem_hat, enc.raw_hat, fed, raw2rgb_forward(g, fed, t_color, cfg)};
}

Value denoiser_forward(Graph& g, Value input, std::optional<Value> noise_map,
                       const DenoiserConfig& cfg) {
  validate(cfg);
  const Tensor& x = g.value(input);
  const int io_channels = cfg.mode == DenoiserMode::kRaw ? 4 : 3;
  if (x.rank() != 3 || x.c() != io_channels)
    throw DimensionError("denoiser (" + to_string(cfg.mode) + ") expects " +
                         std::to_string(io_channels) + " channels, got " + x.shape_str());

  const std::string prefix = "denoise_" + to_string(cfg.mode);
  Value head_in = input;
  if (cfg.mode == DenoiserMode::kRaw) {
    if (!noise_map)
      throw ArgumentError("raw denoising requires a noise level map");
    const Tensor& m = g.value(*noise_map);
    if (!m.same_shape(x))
      throw DimensionError("noise level map " + m.shape_str() + " does not match input " +
                           x.shape_str());
    head_in = g.concat_c(input, *noise_map);
  } else if (noise_map) {
    throw ArgumentError("sRGB denoising takes no noise level map");
  }

  Value t = conv_layer(g, prefix + "/head", head_in, cfg.channels, 3);
  for (int i = 0; i < cfg.n_rrg; ++i)
    t = rrg(g, idx(prefix + "/rrg", i), t, cfg.n_dab, cfg.reduction);
  Value residual = conv_layer(g, prefix + "/tail", t, io_channels, 3, /*zero_init=*/true);
  return g.add(input, residual);
}

RawMosaic run_rgb2raw(ParamStore& ps, const Tensor& i_rgb, const CycleConfig& cfg) {
  Graph g(&ps);
  Rgb2RawOut out = rgb2raw_forward(g, g.input(i_rgb), cfg);
  return {g.value(out.raw_hat), BayerPattern::kRggb};
}

Tensor run_raw2rgb(ParamStore& ps, const RawMosaic& raw, const Tensor& color_ref,
                   const CycleConfig& cfg) {
  if (raw.pattern != BayerPattern::kRggb)
    throw ArgumentError("raw2rgb expects a unified RGGB mosaic; run unify_pattern first");
  Graph g(&ps);
  Value t_color = color_correction(g, color_ref, cfg);
  return g.value(raw2rgb_forward(g, g.input(raw.data), t_color, cfg));
}

CycleTensors run_cycle(ParamStore& ps, const Tensor& i_rgb, const NoiseSwitch& sw,
                       const CycleConfig& cfg, Rng* rng) {
  Graph g(&ps);
  CycleOut out = cycle_forward(g, i_rgb, sw, cfg, rng);
  return {{g.value(out.raw_hat), BayerPattern::kRggb},
          {g.value(out.raw_decoder_in), BayerPattern::kRggb},
          g.value(out.rgb_hat)};
}

PackedRaw run_denoiser(ParamStore& ps, const PackedRaw& noisy, const NoiseParams& noise,
                       const DenoiserConfig& cfg) {
  if (cfg.mode != DenoiserMode::kRaw)
    throw ArgumentError("packed-raw denoising requires a raw-mode config");
  Graph g(&ps);
  Value map = g.input(noise_level_map(noisy, noise));
  return {g.value(denoiser_forward(g, g.input(noisy.data), map, cfg))};
}

Tensor run_denoiser(ParamStore& ps, const Tensor& noisy_srgb, const DenoiserConfig& cfg) {
  if (cfg.mode != DenoiserMode::kSrgb)
    throw ArgumentError("sRGB denoising requires an srgb-mode config");
  Graph g(&ps);
  return g.value(denoiser_forward(g, g.input(noisy_srgb), std::nullopt, cfg));
}

}  // namespace rawcycle
