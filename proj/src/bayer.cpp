#include "rawcycle/bayer.hpp"

#include "rawcycle/errors.hpp"

namespace rawcycle {

namespace {

// 2x2 color layout per pattern, 0 = R, 1 = G, 2 = B.
constexpr int kSiteColor[4][2][2] = {
    {{0, 1}, {1, 2}},  // RGGB
    {{2, 1}, {1, 0}},  // BGGR
    {{1, 0}, {2, 1}},  // GRBG
    {{1, 2}, {0, 1}},  // GBRG
};

// Crop offset that moves each pattern's top-left site onto a red site.
constexpr int kShift[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};

void require_mosaic(const RawMosaic& m) {
  if (m.data.rank() != 3 || m.data.c() != 1)
    throw DimensionError("mosaic must be H x W x 1, got " + m.data.shape_str());
  if (m.data.h() % 2 != 0 || m.data.w() % 2 != 0)
    throw DimensionError("mosaic dimensions must be even, got " + m.data.shape_str());
}

// Pattern of an RGGB mosaic after flipping an even-sized array.
BayerPattern flipped_rggb_pattern(bool horizontal, bool vertical) {
  if (horizontal && vertical) return BayerPattern::kBggr;
  if (horizontal) return BayerPattern::kGrbg;
  if (vertical) return BayerPattern::kGbrg;
  return BayerPattern::kRggb;
}

}  // namespace

BayerPattern bayer_pattern_from_string(const std::string& s) {
  if (s == "RGGB") return BayerPattern::kRggb;
  if (s == "BGGR") return BayerPattern::kBggr;
  if (s == "GRBG") return BayerPattern::kGrbg;
  if (s == "GBRG") return BayerPattern::kGbrg;
  throw DataError("unknown Bayer pattern \"" + s + "\"");
}

std::string to_string(BayerPattern p) {
  switch (p) {
    case BayerPattern::kRggb: return "RGGB";
    case BayerPattern::kBggr: return "BGGR";
    case BayerPattern::kGrbg: return "GRBG";
    case BayerPattern::kGbrg: return "GBRG";
  }
  throw DataError("invalid Bayer pattern tag");
}

int bayer_color_at(BayerPattern p, int row, int col) {
  return kSiteColor[static_cast<int>(p)][row & 1][col & 1];
}

RawMosaic mosaic(const Tensor& dem, BayerPattern pattern) {
  if (dem.rank() != 3 || dem.c() != 3)
    throw DimensionError("mosaic input must be H x W x 3, got " + dem.shape_str());
  if (dem.h() % 2 != 0 || dem.w() % 2 != 0)
    throw DimensionError("mosaic input dimensions must be even, got " + dem.shape_str());
  RawMosaic out{Tensor::make3(dem.h(), dem.w(), 1), pattern};
  for (int i = 0; i < dem.h(); ++i)
    for (int j = 0; j < dem.w(); ++j)
      out.data.at(i, j, 0) = dem.at(i, j, bayer_color_at(pattern, i, j));
  return out;
}

RawMosaic unify_pattern(const RawMosaic& raw, UnifyInfo* info) {
  require_mosaic(raw);
  const int dr = kShift[static_cast<int>(raw.pattern)][0];
  const int dc = kShift[static_cast<int>(raw.pattern)][1];
  const int h = (raw.data.h() - dr) & ~1;
  const int w = (raw.data.w() - dc) & ~1;
  if (h < 2 || w < 2)
    throw DimensionError("mosaic " + raw.data.shape_str() + " too small to unify");
  RawMosaic out{Tensor::make3(h, w, 1), BayerPattern::kRggb};
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) out.data.at(i, j, 0) = raw.data.at(i + dr, j + dc, 0);
  if (info) *info = {dr, dc, h, w};
  return out;
}

PackedRaw pack(const RawMosaic& raw) {
  RawMosaic uni = unify_pattern(raw);
  const int ph = uni.data.h() / 2;
  const int pw = uni.data.w() / 2;
  PackedRaw out{Tensor::make3(ph, pw, 4)};
  for (int i = 0; i < ph; ++i)
    for (int j = 0; j < pw; ++j) {
      out.data.at(i, j, 0) = uni.data.at(2 * i, 2 * j, 0);
      out.data.at(i, j, 1) = uni.data.at(2 * i, 2 * j + 1, 0);
      out.data.at(i, j, 2) = uni.data.at(2 * i + 1, 2 * j, 0);
      out.data.at(i, j, 3) = uni.data.at(2 * i + 1, 2 * j + 1, 0);
    }
  return out;
}

RawMosaic unpack(const PackedRaw& packed) {
  if (packed.data.rank() != 3 || packed.data.c() != 4)
    throw DimensionError("packed raw must be H x W x 4, got " + packed.data.shape_str());
  const int ph = packed.data.h();
  const int pw = packed.data.w();
  RawMosaic out{Tensor::make3(2 * ph, 2 * pw, 1), BayerPattern::kRggb};
  for (int i = 0; i < ph; ++i)
    for (int j = 0; j < pw; ++j) {
      out.data.at(2 * i, 2 * j, 0) = packed.data.at(i, j, 0);
      out.data.at(2 * i, 2 * j + 1, 0) = packed.data.at(i, j, 1);
      out.data.at(2 * i + 1, 2 * j, 0) = packed.data.at(i, j, 2);
      out.data.at(2 * i + 1, 2 * j + 1, 0) = packed.data.at(i, j, 3);
    }
  return out;
}

RawMosaic bayer_flip(const RawMosaic& raw, bool horizontal, bool vertical,
                     UnifyInfo* info) {
  UnifyInfo pre;
  RawMosaic uni = unify_pattern(raw, &pre);
  const int h = uni.data.h();
  const int w = uni.data.w();
  RawMosaic flipped{Tensor::make3(h, w, 1), flipped_rggb_pattern(horizontal, vertical)};
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j)
      flipped.data.at(i, j, 0) =
          uni.data.at(vertical ? h - 1 - i : i, horizontal ? w - 1 - j : j, 0);
  UnifyInfo post;
  RawMosaic out = unify_pattern(flipped, &post);
  if (info) {
    // Offsets are reported in coordinates of the flipped input array, so a
    // caller can flip a paired image the same way and crop it to match.
    const int row0 = vertical ? raw.data.h() - h - pre.row_offset : pre.row_offset;
    const int col0 = horizontal ? raw.data.w() - w - pre.col_offset : pre.col_offset;
    *info = {row0 + post.row_offset, col0 + post.col_offset, post.height, post.width};
  }
  return out;
}

}  // namespace rawcycle
