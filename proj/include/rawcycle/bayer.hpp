#pragma once

#include <string>

#include "rawcycle/tensor.hpp"

namespace rawcycle {

// Bayer-mosaic geometry: mosaicking, 2x2 packing, pattern unification and
// phase-correct flips. Everything here is a pure index manipulation, so all
// round trips are bit exact.

enum class BayerPattern { kRggb, kBggr, kGrbg, kGbrg };

BayerPattern bayer_pattern_from_string(const std::string& s);
std::string to_string(BayerPattern p);

// Color sampled at mosaic site (row, col): 0 = R, 1 = G, 2 = B.
int bayer_color_at(BayerPattern p, int row, int col);

// Full-resolution single-channel mosaic. H and W are kept even; odd inputs
// are rejected rather than padded so no sensor data is fabricated.
struct RawMosaic {
  Tensor data;  // H x W x 1
  BayerPattern pattern = BayerPattern::kRggb;
};

// Half-resolution 4-channel packing. Channel order is always R, G (from the
// R row), G (from the B row), B regardless of the source pattern.
struct PackedRaw {
  Tensor data;  // (H/2) x (W/2) x 4
};

// Geometry of a unify or flip: where the output's origin sits inside the
// (possibly flipped) input, and the output size. Lets callers crop a paired
// full-color image to the exact region the mosaic kept.
struct UnifyInfo {
  int row_offset = 0;
  int col_offset = 0;
  int height = 0;
  int width = 0;
};

// Sample one color per pixel from a full-color image. No resampling: each
// output pixel is a plain copy of one input channel.
RawMosaic mosaic(const Tensor& dem, BayerPattern pattern);

// Shift the sampling grid (0-or-1 pixel crop per axis, then an even re-crop)
// until the top-left site is red. Identity on RGGB input.
RawMosaic unify_pattern(const RawMosaic& raw, UnifyInfo* info = nullptr);

// Gather each 2x2 block of the unified mosaic into one 4-channel pixel.
PackedRaw pack(const RawMosaic& raw);

// Scatter packed channels back to a full-resolution RGGB mosaic.
// pack(unpack(p)) == p exactly.
RawMosaic unpack(const PackedRaw& packed);

// Flip the scene while keeping a valid RGGB mosaic: unify, flip the array,
// retag the flipped phase, unify again. `info` reports the kept region in
// coordinates of the flipped full array.
RawMosaic bayer_flip(const RawMosaic& raw, bool horizontal, bool vertical,
                     UnifyInfo* info = nullptr);

}  // namespace rawcycle
