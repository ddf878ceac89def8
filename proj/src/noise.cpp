#include "rawcycle/noise.hpp"

#include "rawcycle/errors.hpp"
#include "rawcycle/log.hpp"

namespace rawcycle {

NoiseParams sample_noise_params(Rng& rng, const NoiseSamplerConfig& cfg) {
  const double log_shot = rng.uniform(std::log(cfg.shot_min), std::log(cfg.shot_max));
  const double log_read =
      rng.normal(cfg.read_slope * log_shot + cfg.read_intercept, cfg.read_stddev);
  return {std::exp(log_shot), std::exp(log_read)};
}

Tensor inject_noise(const Tensor& clean, const NoiseParams& p, Rng& rng) {
  Tensor noisy = clean;
  bool saw_negative = false;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    if (clean[i] < 0.0) saw_negative = true;
    noisy[i] = clean[i] + rng.normal() * noise_sigma(clean[i], p);
  }
  if (saw_negative && p.shot > 0.0)
    log_warn("inject_noise: negative clean values, shot variance floored at read level");
  return noisy;
}

RawMosaic inject_noise(const RawMosaic& clean, const NoiseParams& p, Rng& rng) {
  return {inject_noise(clean.data, p, rng), clean.pattern};
}

PackedRaw inject_noise(const PackedRaw& clean, const NoiseParams& p, Rng& rng) {
  return {inject_noise(clean.data, p, rng)};
}

Tensor noise_level_map(const PackedRaw& signal, const NoiseParams& p) {
  Tensor map = Tensor::zeros_like(signal.data);
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = noise_sigma(signal.data[i], p);
  return map;
}

NoiseResidue extract_residue(const RawMosaic& noisy, const RawMosaic& clean) {
  if (!noisy.data.same_shape(clean.data))
    throw DimensionError("residue inputs differ: " + noisy.data.shape_str() + " vs " +
                         clean.data.shape_str());
  if (noisy.pattern != clean.pattern)
    throw DimensionError("residue inputs carry different Bayer patterns: " +
                         to_string(noisy.pattern) + " vs " + to_string(clean.pattern));
  return {noisy.data - clean.data};
}

RawMosaic apply_residue(const RawMosaic& clean_hat, const NoiseResidue& residue) {
  if (!clean_hat.data.same_shape(residue.data))
    throw DimensionError("residue shape " + residue.data.shape_str() +
                         " does not match image " + clean_hat.data.shape_str());
  return {clean_hat.data + residue.data, clean_hat.pattern};
}

}  // namespace rawcycle
