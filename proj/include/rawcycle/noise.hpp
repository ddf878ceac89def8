#pragma once

#include <cmath>

#include "rawcycle/bayer.hpp"
#include "rawcycle/rng.hpp"
#include "rawcycle/tensor.hpp"

namespace rawcycle {

// Heteroscedastic shot/read noise model. Per pixel the noise is zero-mean
// Gaussian with variance shot * signal + read: the signal-proportional part
// models photon shot noise (Gaussian approximation of Poisson), the constant
// part models readout electronics. Noisy values are never clipped here;
// clipping happens only at image export.

struct NoiseParams {
  double shot = 0.0;  // variance per unit signal
  double read = 0.0;  // signal-independent variance
};

// Sampling ranges for synthetic noise levels. log(shot) is uniform over
// [log(shot_min), log(shot_max)]; log(read) is normal around a linear fit
// in log(shot). Constants follow the unprocessing-pipeline convention and
// are config-overridable.
struct NoiseSamplerConfig {
  double shot_min = 1e-4;
  double shot_max = 1.2e-2;
  double read_slope = 2.18;
  double read_intercept = 1.20;
  double read_stddev = 0.26;
};

NoiseParams sample_noise_params(Rng& rng, const NoiseSamplerConfig& cfg = {});

// Standard deviation the injector applies at one signal value. Shared with
// noise_level_map so the map is algebraically identical to the injector.
inline double noise_sigma(double signal, const NoiseParams& p) {
  return std::sqrt(p.shot * (signal > 0.0 ? signal : 0.0) + p.read);
}

// Elementwise noisy = clean + N(0, shot*clean + read). Negative clean values
// contribute zero shot variance (floor at read) and trigger one warning per
// call. Works on any tensor shape; mosaic and packed overloads keep the tag.
Tensor inject_noise(const Tensor& clean, const NoiseParams& p, Rng& rng);
RawMosaic inject_noise(const RawMosaic& clean, const NoiseParams& p, Rng& rng);
PackedRaw inject_noise(const PackedRaw& clean, const NoiseParams& p, Rng& rng);

// Per-pixel standard-deviation estimate fed to the RAW denoiser.
Tensor noise_level_map(const PackedRaw& signal, const NoiseParams& p);

// Real noise carried as a reusable per-pixel residue.
struct NoiseResidue {
  Tensor data;
};

NoiseResidue extract_residue(const RawMosaic& noisy, const RawMosaic& clean);
RawMosaic apply_residue(const RawMosaic& clean_hat, const NoiseResidue& residue);

}  // namespace rawcycle
