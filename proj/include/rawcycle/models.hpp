#pragma once

#include <optional>
#include <string>

#include "rawcycle/bayer.hpp"
#include "rawcycle/blocks.hpp"
#include "rawcycle/graph.hpp"
#include "rawcycle/noise.hpp"

namespace rawcycle {

// Network assembly: the sRGB-to-RAW branch, the color-correction branch,
// the RAW-to-sRGB branch, the full cycle with its noise switch, and the two
// denoisers. Every builder works on a Graph bound to a ParamStore and
// creates its parameters on first use under stable names ("rgb2raw/m0/w",
// "color/rrg1/dab0/ca/c1/b", ...), so checkpoints line up across runs and a
// store loaded from disk is picked up as-is.

struct BranchConfig {
  int n_rrg = 3;
  int n_dab = 5;
  int channels = 64;
};

struct ColorBranchConfig {
  int n_rrg = 2;
  int n_dab = 3;
  int channels = 64;
  double blur_sigma = 12.0;
};

struct CycleConfig {
  BranchConfig rgb2raw{};
  BranchConfig raw2rgb{};  // n_rrg groups; the last one sits after the color gate
  ColorBranchConfig color_corr{};
  int reduction = 8;  // channel-attention bottleneck ratio, shared by all blocks
};

enum class DenoiserMode { kRaw, kSrgb };

DenoiserMode denoiser_mode_from_string(const std::string& s);
std::string to_string(DenoiserMode mode);

struct DenoiserConfig {
  int n_rrg = 4;
  int n_dab = 8;
  int channels = 64;
  int reduction = 8;
  DenoiserMode mode = DenoiserMode::kRaw;
};

// Scaled-down presets sized for CPU training runs.
CycleConfig toy_cycle_config();
DenoiserConfig toy_denoiser_config(DenoiserMode mode);

// Throw ConfigError naming the offending field.
void validate(const CycleConfig& cfg);
void validate(const DenoiserConfig& cfg);

// sRGB image -> predicted demosaicked linear image and its RGGB mosaic.
struct Rgb2RawOut {
  Value dem_hat;  // H x W x 3
  Value raw_hat;  // H x W x 1 mosaic, always RGGB
};
Rgb2RawOut rgb2raw_forward(Graph& g, Value i_rgb, const CycleConfig& cfg);

// Color reference for the RAW decoder: heavy blur kills structure, 2x2
// averaging drops to the packed grid, then a small conv stack ends in a
// sigmoid so the gate lies in (0,1). The blur and downscale run outside the
// tape; only network parameters receive gradients.
Value color_correction(Graph& g, const Tensor& i_rgb, const CycleConfig& cfg);

// RGGB mosaic + color gate -> sRGB image. The gate enters as
// t = t + t (*) t_color between the first n_rrg-1 groups and the last one.
Value raw2rgb_forward(Graph& g, Value i_raw, Value t_color, const CycleConfig& cfg);

// Noise switch for the full cycle. kParams draws fresh noise for the
// predicted mosaic; kResidue replays noise lifted from a real pair. Either
// way the perturbation joins the tape as a constant, so gradients pass
// straight through the injection point.
enum class NoiseSwitchKind { kOff, kParams, kResidue };

struct NoiseSwitch {
  NoiseSwitchKind kind = NoiseSwitchKind::kOff;
  NoiseParams params{};
  NoiseResidue residue{};

  static NoiseSwitch off() { return {}; }
  static NoiseSwitch with_params(const NoiseParams& p) {
    return {NoiseSwitchKind::kParams, p, {}};
  }
  static NoiseSwitch with_residue(NoiseResidue r) {
    return {NoiseSwitchKind::kResidue, {}, std::move(r)};
  }
};

struct CycleOut {
  Value dem_hat;
  Value raw_hat;         // clean prediction from the encoder
  Value raw_decoder_in;  // after the noise switch; same node as raw_hat when off
  Value rgb_hat;
};
// rng is only consulted when the switch carries NoiseParams.
CycleOut cycle_forward(Graph& g, const Tensor& i_rgb, const NoiseSwitch& sw,
                       const CycleConfig& cfg, Rng* rng = nullptr);

// Denoiser: head conv, n_rrg groups, zero-initialized tail conv, global
// input skip. Raw mode takes a packed image plus its 4-channel noise level
// map; sRGB mode takes a 3-channel image and no map.
Value denoiser_forward(Graph& g, Value input, std::optional<Value> noise_map,
                       const DenoiserConfig& cfg);

// One-shot helpers that run a private tape and hand back plain tensors.
RawMosaic run_rgb2raw(ParamStore& ps, const Tensor& i_rgb, const CycleConfig& cfg);
Tensor run_raw2rgb(ParamStore& ps, const RawMosaic& raw, const Tensor& color_ref,
                   const CycleConfig& cfg);

struct CycleTensors {
  RawMosaic raw_hat;
  RawMosaic raw_decoder_in;
  Tensor rgb_hat;
};
CycleTensors run_cycle(ParamStore& ps, const Tensor& i_rgb, const NoiseSwitch& sw,
                       const CycleConfig& cfg, Rng* rng = nullptr);

PackedRaw run_denoiser(ParamStore& ps, const PackedRaw& noisy, const NoiseParams& noise,
                       const DenoiserConfig& cfg);
Tensor run_denoiser(ParamStore& ps, const Tensor& noisy_srgb, const DenoiserConfig& cfg);

// Exact number of learnable scalars currently held by the store.
inline std::size_t count_params(const ParamStore& ps) { return ps.count_scalars(); }

}  // namespace rawcycle
