#pragma once

#include <filesystem>
#include <vector>

#include "rawcycle/corpus.hpp"
#include "rawcycle/models.hpp"
#include "rawcycle/noise.hpp"
#include "rawcycle/params.hpp"
#include "rawcycle/rng.hpp"

namespace rawcycle {

// Clean/noisy pair synthesis through the trained cycle halves. Pass `force`
// to pin the noise level (tests, fixed-level evaluation sets); otherwise each
// pair draws a fresh shot/read sample.

// The sRGB-to-RAW branch renders the clean mosaic, noise is injected in
// full-resolution mosaic space, and both halves come back packed.
PairSample synth_raw_pair(ParamStore& ps, const CycleConfig& cfg, const Tensor& srgb,
                          Rng& rng, const NoiseSamplerConfig& sampler = {},
                          const NoiseParams* force = nullptr);

// The full cycle renders the clean rendition with the switch off and the
// noisy rendition with injection enabled, so both pass through the same
// RAW-to-sRGB decoder and differ only by the injected noise.
PairSample synth_srgb_pair(ParamStore& ps, const CycleConfig& cfg, const Tensor& srgb,
                           Rng& rng, const NoiseSamplerConfig& sampler = {},
                           const NoiseParams* force = nullptr);

// Writes one pair scene directory (pair_0000, pair_0001, ...) per input
// image under out_root. kRaw emits packed RAW pairs, kSrgb emits sRGB pairs.
void synth_pair_folder(ParamStore& ps, const CycleConfig& cfg,
                       const std::vector<Tensor>& srgb_images, DenoiserMode mode,
                       const std::filesystem::path& out_root, Rng& rng,
                       const NoiseSamplerConfig& sampler = {});

}  // namespace rawcycle
