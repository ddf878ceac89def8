#include "rawcycle/image_io.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "json.hpp"
#include "rawcycle/errors.hpp"

namespace rawcycle {

namespace {

using nlohmann::json;

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open " + tmp + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path + " for reading");
  return std::string(std::istreambuf_iterator<char>(f), {});
}

json meta_to_json(const ImageMeta& meta) {
  json j;
  j["height"] = meta.height;
  j["width"] = meta.width;
  j["channels"] = meta.channels;
  j["kind"] = meta.kind;
  if (!meta.pattern.empty()) j["pattern"] = meta.pattern;
  j["value_range"] = {meta.range_lo, meta.range_hi};
  j["dtype"] = "float32";
  if (!meta.extra.empty()) j["extra"] = meta.extra;
  return j;
}

ImageMeta meta_from_json(const json& j, const std::string& path) {
  ImageMeta meta;
  try {
    meta.height = j.at("height").get<int>();
    meta.width = j.at("width").get<int>();
    meta.channels = j.at("channels").get<int>();
    meta.kind = j.value("kind", std::string("srgb"));
    meta.pattern = j.value("pattern", std::string());
    if (j.contains("value_range")) {
      meta.range_lo = j["value_range"].at(0).get<double>();
      meta.range_hi = j["value_range"].at(1).get<double>();
    }
    if (j.contains("extra"))
      meta.extra = j["extra"].get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw DataError("bad sidecar for " + path + ": " + e.what());
  }
  if (meta.height <= 0 || meta.width <= 0 || meta.channels <= 0)
    throw DataError("bad sidecar dimensions for " + path);
  return meta;
}

}  // namespace

void write_f32(const std::string& path, const Tensor& t, const ImageMeta& meta) {
  if (t.rank() != 3) throw DimensionError("array files hold rank-3 tensors, got " + t.shape_str());
  if (t.h() != meta.height || t.w() != meta.width || t.c() != meta.channels)
    throw DimensionError("metadata " + std::to_string(meta.height) + "x" +
                         std::to_string(meta.width) + "x" + std::to_string(meta.channels) +
                         " does not match tensor " + t.shape_str());
  std::string bytes(t.size() * sizeof(float), '\0');
  auto* out = reinterpret_cast<float*>(bytes.data());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = static_cast<float>(t[i]);
  write_file_atomic(path, bytes);
  write_file_atomic(path + ".json", meta_to_json(meta).dump(2) + "\n");
}

Tensor read_f32(const std::string& path, ImageMeta* meta_out) {
  json j;
  try {
    j = json::parse(read_file(path + ".json"));
  } catch (const json::parse_error& e) {
    throw DataError("bad sidecar for " + path + ": " + e.what());
  }
  ImageMeta meta = meta_from_json(j, path);
  const std::string bytes = read_file(path);
  const std::size_t want =
      static_cast<std::size_t>(meta.height) * meta.width * meta.channels * sizeof(float);
  if (bytes.size() != want)
    throw DataError(path + " holds " + std::to_string(bytes.size()) + " bytes, sidecar implies " +
                    std::to_string(want));
  Tensor t = Tensor::make3(meta.height, meta.width, meta.channels);
  const auto* in = reinterpret_cast<const float*>(bytes.data());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = in[i];
  if (meta_out) *meta_out = meta;
  return t;
}

void write_raw_mosaic(const std::string& path, const RawMosaic& raw,
                      const std::map<std::string, double>& extra) {
  ImageMeta meta;
  meta.height = raw.data.h();
  meta.width = raw.data.w();
  meta.channels = 1;
  meta.kind = "raw_mosaic";
  meta.pattern = to_string(raw.pattern);
  meta.extra = extra;
  write_f32(path, raw.data, meta);
}

RawMosaic read_raw_mosaic(const std::string& path, ImageMeta* meta_out) {
  ImageMeta meta;
  Tensor t = read_f32(path, &meta);
  if (meta.kind != "raw_mosaic")
    throw DataError(path + " is kind \"" + meta.kind + "\", expected raw_mosaic");
  if (meta.channels != 1) throw DataError(path + " mosaic must have 1 channel");
  RawMosaic raw{std::move(t), bayer_pattern_from_string(meta.pattern)};
  if (meta_out) *meta_out = meta;
  return raw;
}

void write_ppm(const std::string& path, const Tensor& t) {
  if (t.rank() != 3 || t.c() != 3)
    throw DimensionError("ppm export needs H x W x 3, got " + t.shape_str());
  std::string bytes = "P6\n" + std::to_string(t.w()) + " " + std::to_string(t.h()) + "\n255\n";
  bytes.reserve(bytes.size() + t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double v = std::min(1.0, std::max(0.0, t[i]));
    bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
  }
  write_file_atomic(path, bytes);
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_int(const std::string& tok, const std::string& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad ppm header token \"" + tok + "\" in " + path);
  }
}

}  // namespace

Tensor read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open " + path + " for reading");
  if (next_token(f) != "P6") throw DataError(path + " is not a P6 ppm file");
  const int w = parse_int(next_token(f), path);
  const int h = parse_int(next_token(f), path);
  const int maxval = parse_int(next_token(f), path);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
    throw DataError("bad ppm header in " + path);
  const int bytes_per_sample = maxval > 255 ? 2 : 1;
  const std::size_t n = static_cast<std::size_t>(w) * h * 3;
  std::vector<unsigned char> buf(n * bytes_per_sample);
  f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(f.gcount()) != buf.size())
    throw DataError(path + " is truncated");
  Tensor t = Tensor::make3(h, w, 3);
  for (std::size_t i = 0; i < n; ++i) {
    const int v = bytes_per_sample == 1 ? buf[i] : (buf[2 * i] << 8) | buf[2 * i + 1];
    t[i] = static_cast<double>(v) / maxval;
  }
  return t;
}

Tensor read_srgb_auto(const std::string& path) {
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".ppm") == 0) return read_ppm(path);
  ImageMeta meta;
  Tensor t = read_f32(path, &meta);
  if (meta.kind != "srgb" || t.c() != 3)
    throw DataError(path + " does not hold a 3-channel srgb image (kind " + meta.kind + ")");
  return t;
}

}  // namespace rawcycle
