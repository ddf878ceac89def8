#include "rawcycle/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <utility>

#include "rawcycle/blocks.hpp"
#include "rawcycle/errors.hpp"
#include "rawcycle/image_io.hpp"
#include "rawcycle/log.hpp"

namespace fs = std::filesystem;

namespace rawcycle {

namespace {

std::vector<fs::path> sorted_entries(const fs::path& root, bool directories) {
  if (!fs::exists(root) || !fs::is_directory(root)) {
    throw DataError("dataset root is not a directory: " + root.string());
  }
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (directories ? entry.is_directory() : entry.is_regular_file()) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Tensor crop_block(const Tensor& img, int r0, int c0, int h, int w) {
  Tensor out = Tensor::make3(h, w, img.c());
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int k = 0; k < img.c(); ++k) {
        out.at(i, j, k) = img.at(r0 + i, c0 + j, k);
      }
    }
  }
  return out;
}

Tensor read_srgb_any(const fs::path& path) { return read_srgb_auto(path.string()); }

fs::path find_variant(const fs::path& dir, const std::string& stem,
                      std::initializer_list<const char*> exts) {
  for (const char* ext : exts) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) {
      return p;
    }
  }
  return {};
}

}  // namespace

void validate(const DatasetSpec& spec) {
  double sum = spec.train_fraction + spec.val_fraction + spec.test_fraction;
  if (spec.train_fraction < 0.0 || spec.val_fraction < 0.0 || spec.test_fraction < 0.0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("dataset split fractions must be non-negative and sum to 1");
  }
  if (spec.crop <= 0 || spec.crop % 2 != 0) {
    throw ConfigError("dataset crop size must be a positive even number, got " +
                      std::to_string(spec.crop));
  }
  if (spec.crops_per_image <= 0) {
    throw ConfigError("crops_per_image must be positive");
  }
}

std::vector<Tensor> load_srgb_images(const fs::path& root) {
  std::vector<Tensor> images;
  for (const fs::path& path : sorted_entries(root, false)) {
    std::string ext = path.extension().string();
    if (ext != ".ppm" && ext != ".f32") {
      continue;
    }
    try {
      images.push_back(gaussian_blur(read_srgb_any(path), 1.0));
    } catch (const std::exception& e) {
      log_warn("skipping " + path.string() + ": " + e.what());
    }
  }
  if (images.empty()) {
    throw DataError("no readable sRGB images under " + root.string());
  }
  return images;
}

CorpusSplit split_corpus(std::vector<Tensor> images, const DatasetSpec& spec, Rng& rng) {
  validate(spec);
  for (std::size_t i = images.size(); i > 1; --i) {
    std::swap(images[i - 1], images[rng.below(i)]);
  }
  auto n = static_cast<long long>(images.size());
  long long n_train = std::llround(static_cast<double>(n) * spec.train_fraction);
  n_train = std::min(n_train, n);
  long long n_val = std::llround(static_cast<double>(n) * spec.val_fraction);
  n_val = std::min(n_val, n - n_train);

  CorpusSplit split;
  for (long long i = 0; i < n; ++i) {
    auto& bucket = i < n_train ? split.train : (i < n_train + n_val ? split.val : split.test);
    bucket.push_back(std::move(images[static_cast<std::size_t>(i)]));
  }
  return split;
}

Tensor flip_image(const Tensor& img, bool horizontal, bool vertical) {
  if (img.rank() != 3) {
    throw DimensionError("flip_image expects an HxWxC tensor, got " + img.shape_str());
  }
  Tensor out = Tensor::make3(img.h(), img.w(), img.c());
  for (int i = 0; i < img.h(); ++i) {
    int si = vertical ? img.h() - 1 - i : i;
    for (int j = 0; j < img.w(); ++j) {
      int sj = horizontal ? img.w() - 1 - j : j;
      for (int k = 0; k < img.c(); ++k) {
        out.at(i, j, k) = img.at(si, sj, k);
      }
    }
  }
  return out;
}

Tensor random_crop(const Tensor& img, int crop, Rng& rng, int* row0, int* col0) {
  if (img.rank() != 3) {
    throw DimensionError("random_crop expects an HxWxC tensor, got " + img.shape_str());
  }
  if (crop <= 0) {
    throw ArgumentError("crop size must be positive, got " + std::to_string(crop));
  }
  int out_h = std::min(crop, img.h());
  int out_w = std::min(crop, img.w());
  int r0 = img.h() > out_h ? static_cast<int>(rng.below(static_cast<std::size_t>(img.h() - out_h) + 1)) : 0;
  int c0 = img.w() > out_w ? static_cast<int>(rng.below(static_cast<std::size_t>(img.w() - out_w) + 1)) : 0;
  if (row0 != nullptr) {
    *row0 = r0;
  }
  if (col0 != nullptr) {
    *col0 = c0;
  }
  return crop_block(img, r0, c0, out_h, out_w);
}

std::vector<Tensor> prepare_corpus(const DatasetSpec& spec, Rng& rng) {
  validate(spec);
  if (spec.kind != DatasetSpec::Kind::kSrgbFolder) {
    throw ConfigError("prepare_corpus needs an sRGB folder dataset");
  }
  std::vector<Tensor> crops;
  for (const Tensor& img : load_srgb_images(spec.root)) {
    for (int k = 0; k < spec.crops_per_image; ++k) {
      Tensor crop = random_crop(img, spec.crop, rng);
      if (spec.flips) {
        bool hor = rng.below(2) == 1;
        bool ver = rng.below(2) == 1;
        if (hor || ver) {
          crop = flip_image(crop, hor, ver);
        }
      }
      crops.push_back(std::move(crop));
    }
  }
  return crops;
}

namespace {

// Loads one scene directory; throws to signal "skip this scene".
CycleScene read_scene(const fs::path& dir) {
  fs::path srgb_path = find_variant(dir, "srgb_clean", {".f32", ".ppm"});
  fs::path raw_path = dir / "raw_clean.f32";
  if (srgb_path.empty() || !fs::exists(raw_path)) {
    throw DataError("missing srgb_clean/raw_clean in " + dir.string());
  }

  CycleScene scene;
  Tensor srgb = read_srgb_any(srgb_path);
  RawMosaic raw = read_raw_mosaic(raw_path.string());
  if (srgb.h() != raw.data.h() || srgb.w() != raw.data.w()) {
    throw DataError("srgb_clean and raw_clean disagree on size in " + dir.string());
  }
  UnifyInfo info;
  scene.raw_clean = unify_pattern(raw, &info);
  scene.srgb_clean = crop_block(srgb, info.row_offset, info.col_offset, info.height, info.width);

  fs::path srgb_noisy_path = find_variant(dir, "srgb_noisy", {".f32", ".ppm"});
  fs::path raw_noisy_path = dir / "raw_noisy.f32";
  if (!srgb_noisy_path.empty() && fs::exists(raw_noisy_path)) {
    Tensor srgb_n = read_srgb_any(srgb_noisy_path);
    RawMosaic raw_n = read_raw_mosaic(raw_noisy_path.string());
    if (raw_n.pattern != raw.pattern || raw_n.data.h() != raw.data.h() ||
        raw_n.data.w() != raw.data.w() || srgb_n.h() != raw.data.h() ||
        srgb_n.w() != raw.data.w()) {
      throw DataError("noisy half of " + dir.string() + " does not match the clean half");
    }
    scene.raw_noisy = unify_pattern(raw_n);
    scene.srgb_noisy =
        crop_block(srgb_n, info.row_offset, info.col_offset, info.height, info.width);
  }
  return scene;
}

}  // namespace

std::vector<CycleScene> load_scene_folder(const fs::path& root) {
  std::vector<CycleScene> scenes;
  for (const fs::path& dir : sorted_entries(root, true)) {
    try {
      scenes.push_back(read_scene(dir));
    } catch (const std::exception& e) {
      log_warn("skipping scene " + dir.string() + ": " + e.what());
    }
  }
  if (scenes.empty()) {
    throw DataError("no usable scenes under " + root.string());
  }
  return scenes;
}

CycleScene scene_crop(const CycleScene& scene, int crop, Rng& rng) {
  if (crop <= 0 || crop % 2 != 0) {
    throw ArgumentError("scene crop size must be a positive even number");
  }
  int h = scene.srgb_clean.h();
  int w = scene.srgb_clean.w();
  int out_h = std::min(crop, h);
  int out_w = std::min(crop, w);
  // Even offsets keep the crop on the RGGB phase of the unified mosaics.
  int r0 = h > out_h ? 2 * static_cast<int>(rng.below(static_cast<std::size_t>(h - out_h) / 2 + 1)) : 0;
  int c0 = w > out_w ? 2 * static_cast<int>(rng.below(static_cast<std::size_t>(w - out_w) / 2 + 1)) : 0;

  CycleScene out;
  out.srgb_clean = crop_block(scene.srgb_clean, r0, c0, out_h, out_w);
  out.raw_clean = {crop_block(scene.raw_clean.data, r0, c0, out_h, out_w),
                   scene.raw_clean.pattern};
  if (scene.has_noisy()) {
    out.srgb_noisy = crop_block(scene.srgb_noisy, r0, c0, out_h, out_w);
    out.raw_noisy = {crop_block(scene.raw_noisy.data, r0, c0, out_h, out_w),
                     scene.raw_noisy.pattern};
  }
  return out;
}

CycleScene scene_flip(const CycleScene& scene, bool horizontal, bool vertical) {
  if (!horizontal && !vertical) {
    return scene;
  }
  UnifyInfo info;
  CycleScene out;
  out.raw_clean = bayer_flip(scene.raw_clean, horizontal, vertical, &info);
  out.srgb_clean = crop_block(flip_image(scene.srgb_clean, horizontal, vertical),
                              info.row_offset, info.col_offset, info.height, info.width);
  if (scene.has_noisy()) {
    out.raw_noisy = bayer_flip(scene.raw_noisy, horizontal, vertical);
    out.srgb_noisy = crop_block(flip_image(scene.srgb_noisy, horizontal, vertical),
                                info.row_offset, info.col_offset, info.height, info.width);
  }
  return out;
}

void save_pair_sample(const fs::path& scene_dir, const PairSample& pair) {
  if (!pair.clean.same_shape(pair.noisy)) {
    throw DimensionError("pair halves disagree on shape: " + pair.clean.shape_str() +
                         " vs " + pair.noisy.shape_str());
  }
  if (pair.clean.rank() != 3 || (pair.clean.c() != 3 && pair.clean.c() != 4)) {
    throw DimensionError("pair images must be HxWx3 sRGB or HxWx4 packed RAW");
  }
  fs::create_directories(scene_dir);

  ImageMeta meta;
  meta.height = pair.clean.h();
  meta.width = pair.clean.w();
  meta.channels = pair.clean.c();
  meta.kind = pair.clean.c() == 4 ? "packed_raw" : "srgb";
  write_f32((scene_dir / "clean.f32").string(), pair.clean, meta);

  meta.extra["shot"] = pair.noise.shot;
  meta.extra["read"] = pair.noise.read;
  meta.extra["synthetic"] = pair.provenance == Provenance::kSynthetic ? 1.0 : 0.0;
  write_f32((scene_dir / "noisy.f32").string(), pair.noisy, meta);
}

std::vector<PairSample> load_pair_folder(const fs::path& root) {
  std::vector<PairSample> pairs;
  for (const fs::path& dir : sorted_entries(root, true)) {
    try {
      PairSample pair;
      pair.clean = read_f32((dir / "clean.f32").string());
      ImageMeta meta;
      pair.noisy = read_f32((dir / "noisy.f32").string(), &meta);
      if (!pair.clean.same_shape(pair.noisy) ||
          (pair.clean.c() != 3 && pair.clean.c() != 4)) {
        throw DataError("pair halves disagree on shape in " + dir.string());
      }
      auto lookup = [&meta](const char* key) {
        auto it = meta.extra.find(key);
        return it == meta.extra.end() ? 0.0 : it->second;
      };
      pair.noise = {lookup("shot"), lookup("read")};
      pair.provenance =
          lookup("synthetic") != 0.0 ? Provenance::kSynthetic : Provenance::kReal;
      pair.name = dir.filename().string();
      pairs.push_back(std::move(pair));
    } catch (const std::exception& e) {
      log_warn("skipping pair " + dir.string() + ": " + e.what());
    }
  }
  if (pairs.empty()) {
    throw DataError("no usable pairs under " + root.string());
  }
  return pairs;
}

}  // namespace rawcycle
