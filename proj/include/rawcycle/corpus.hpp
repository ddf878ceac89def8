#pragma once

#include <filesystem>
#include <vector>

#include "rawcycle/bayer.hpp"
#include "rawcycle/noise.hpp"
#include "rawcycle/rng.hpp"
#include "rawcycle/tensor.hpp"

namespace rawcycle {

// Dataset ingestion and sampling. Folder scans visit files in sorted name
// order and every random choice flows from a caller-supplied Rng, so a
// fixed seed reproduces the exact crop sequence. Unreadable or mismatched
// files are skipped with a logged warning; an empty result is fatal.

struct DatasetSpec {
  std::filesystem::path root;
  enum class Kind { kSrgbFolder, kRawPairFolder } kind = Kind::kSrgbFolder;
  double train_fraction = 0.90;
  double val_fraction = 0.05;
  double test_fraction = 0.05;
  int crop = 128;
  bool flips = true;
  int crops_per_image = 1;
};

void validate(const DatasetSpec& spec);

// Reads every *.ppm / *.f32 sRGB image under root (non-recursive) into
// [0,1] tensors and applies the sigma-1 Gaussian preprocessing blur.
std::vector<Tensor> load_srgb_images(const std::filesystem::path& root);

struct CorpusSplit {
  std::vector<Tensor> train, val, test;
};

// Seeded shuffle, then a rounded train/val/test partition.
CorpusSplit split_corpus(std::vector<Tensor> images, const DatasetSpec& spec, Rng& rng);

Tensor flip_image(const Tensor& img, bool horizontal, bool vertical);

// Uniform crop window, the whole image when it is already small enough.
// The chosen offsets are reported through row0/col0 when requested.
Tensor random_crop(const Tensor& img, int crop, Rng& rng, int* row0 = nullptr,
                   int* col0 = nullptr);

// Full ingest chain: load, blur, then crops_per_image seeded crops per
// image with optional random flips.
std::vector<Tensor> prepare_corpus(const DatasetSpec& spec, Rng& rng);

// One aligned training example for the cycle stages. The noisy half is
// present only for scenes recorded under real noise.
struct CycleScene {
  Tensor srgb_clean;     // HxWx3
  RawMosaic raw_clean;   // unified to RGGB on load
  Tensor srgb_noisy;     // empty when absent
  RawMosaic raw_noisy;   // empty when absent

  bool has_noisy() const {
    return srgb_noisy.size() != 0 && raw_noisy.data.size() != 0;
  }
};

// Scans root/*/ for scene directories holding srgb_clean.(f32|ppm) and
// raw_clean.f32, plus optional srgb_noisy.* / raw_noisy.f32. Mosaics are
// unified to RGGB and the sRGB images cropped to stay pixel-aligned.
std::vector<CycleScene> load_scene_folder(const std::filesystem::path& root);

// Crop with even offsets so the RGGB phase survives, applied identically
// to every image in the scene.
CycleScene scene_crop(const CycleScene& scene, int crop, Rng& rng);

// Paired flip: mirrors the sRGB images and flips the mosaics through the
// Bayer-aware path, cropping the sRGB side to the re-unified window.
CycleScene scene_flip(const CycleScene& scene, bool horizontal, bool vertical);

enum class Provenance { kSynthetic, kReal };

// One clean/noisy training pair for the denoisers: packed 4-channel RAW or
// 3-channel sRGB, matching shapes, with the generating noise level when
// the pair is synthetic.
struct PairSample {
  Tensor clean;
  Tensor noisy;
  NoiseParams noise{};
  Provenance provenance = Provenance::kSynthetic;
  std::string name;  // scene folder basename when loaded from disk
};

// Pairs live as root/<scene>/clean.f32 + noisy.f32; the noisy sidecar
// carries shot/read and the synthetic marker.
void save_pair_sample(const std::filesystem::path& scene_dir, const PairSample& pair);
std::vector<PairSample> load_pair_folder(const std::filesystem::path& root);

}  // namespace rawcycle
