#include "rawcycle/synth.hpp"

#include <cstdio>
#include <string>

namespace rawcycle {

PairSample synth_raw_pair(ParamStore& ps, const CycleConfig& cfg, const Tensor& srgb,
                          Rng& rng, const NoiseSamplerConfig& sampler,
                          const NoiseParams* force) {
  RawMosaic clean = run_rgb2raw(ps, srgb, cfg);
  NoiseParams level = force != nullptr ? *force : sample_noise_params(rng, sampler);
  RawMosaic noisy = inject_noise(clean, level, rng);

  PairSample pair;
  pair.clean = pack(clean).data;
  pair.noisy = pack(noisy).data;
  pair.noise = level;
  pair.provenance = Provenance::kSynthetic;
  return pair;
}

PairSample synth_srgb_pair(ParamStore& ps, const CycleConfig& cfg, const Tensor& srgb,
                           Rng& rng, const NoiseSamplerConfig& sampler,
                           const NoiseParams* force) {
  NoiseParams level = force != nullptr ? *force : sample_noise_params(rng, sampler);

  PairSample pair;
  pair.clean = run_cycle(ps, srgb, NoiseSwitch::off(), cfg).rgb_hat;
  pair.noisy = run_cycle(ps, srgb, NoiseSwitch::with_params(level), cfg, &rng).rgb_hat;
  pair.noise = level;
  pair.provenance = Provenance::kSynthetic;
  return pair;
}

void synth_pair_folder(ParamStore& ps, const CycleConfig& cfg,
                       const std::vector<Tensor>& srgb_images, DenoiserMode mode,
                       const std::filesystem::path& out_root, Rng& rng,
                       const NoiseSamplerConfig& sampler) {
  for (std::size_t i = 0; i < srgb_images.size(); ++i) {
    PairSample pair = mode == DenoiserMode::kRaw
                          ? synth_raw_pair(ps, cfg, srgb_images[i], rng, sampler)
                          : synth_srgb_pair(ps, cfg, srgb_images[i], rng, sampler);
    char name[16];
    std::snprintf(name, sizeof(name), "pair_%04zu", i);
    save_pair_sample(out_root / name, pair);
  }
}

}  // namespace rawcycle
