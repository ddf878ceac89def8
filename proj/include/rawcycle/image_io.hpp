#pragma once

#include <map>
#include <string>

#include "rawcycle/bayer.hpp"
#include "rawcycle/tensor.hpp"

namespace rawcycle {

// Disk formats.
//
// Array files (".f32"): flat little-endian float32, row-major (h, w, c),
// with a JSON sidecar at <path>.json describing the payload:
//   {height, width, channels, kind, pattern?, value_range, dtype, extra?}
// kind is one of "srgb", "raw_mosaic", "packed_raw", "noise_map", "feature".
// pattern is present only for raw mosaics. extra carries numeric metadata
// such as the noise parameters used to synthesize a file.
//
// PPM ("P6", 8-bit) is used for viewable sRGB export; values are clamped to
// [0,1] only at this boundary.

struct ImageMeta {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::string kind = "srgb";
  std::string pattern;  // Bayer tag, raw mosaics only
  double range_lo = 0.0;
  double range_hi = 1.0;
  std::map<std::string, double> extra;
};

void write_f32(const std::string& path, const Tensor& t, const ImageMeta& meta);
Tensor read_f32(const std::string& path, ImageMeta* meta = nullptr);

void write_raw_mosaic(const std::string& path, const RawMosaic& raw,
                      const std::map<std::string, double>& extra = {});
RawMosaic read_raw_mosaic(const std::string& path, ImageMeta* meta = nullptr);

void write_ppm(const std::string& path, const Tensor& t);
Tensor read_ppm(const std::string& path);

// Reads an sRGB image from either container: ".ppm" directly, anything else
// as an ".f32" whose sidecar must declare kind "srgb" and three channels.
Tensor read_srgb_auto(const std::string& path);

}  // namespace rawcycle
