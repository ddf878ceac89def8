#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rawcycle/corpus.hpp"
#include "rawcycle/models.hpp"
#include "rawcycle/params.hpp"

namespace rawcycle {

// Staged training. Each stage optimizes one slice of the system:
//   rgb2raw        sRGB -> RAW branch against ground-truth mosaics
//   raw2rgb        RAW -> sRGB branch (and color branch) against sRGB
//   joint_finetune both branches end to end, noise switch off
//   noisy_finetune both branches with residues replayed from real pairs
//   denoiser_raw   packed-RAW denoiser on clean/noisy pairs
//   denoiser_srgb  sRGB denoiser on clean/noisy pairs
// Later stages refuse to start without the checkpoints or data they build
// on. Every run is bit reproducible under a fixed seed: shuffles, crops and
// flips draw from seeded substreams, and no output embeds a timestamp.

enum class Stage {
  kRgb2Raw,
  kRaw2Rgb,
  kJointFinetune,
  kNoisyFinetune,
  kDenoiserRaw,
  kDenoiserSrgb,
};

Stage stage_from_string(const std::string& s);
std::string to_string(Stage stage);
bool is_cycle_stage(Stage stage);

// Epoch-indexed step schedule: the initial rate until the first boundary,
// then each decay's value from its epoch onward.
struct LrSchedule {
  double initial = 1e-4;
  std::vector<std::pair<int, double>> decays;  // (epoch, value), ascending epochs

  double at_epoch(int epoch) const;
};

struct TrainConfig {
  Stage stage = Stage::kRgb2Raw;
  int epochs = 1;
  int batch_size = 1;
  std::uint64_t seed = 0;
  LrSchedule lr{};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double joint_beta = 0.5;   // weight of the s2r term in the joint loss
  double log_eps = 1e-4;     // clamp for the log-domain raw loss
  int crop = 0;              // even per-sample scene crop; 0 trains on full images
  bool augment_flips = false;
};

void validate(const TrainConfig& cfg);

void to_json(nlohmann::json& j, const TrainConfig& cfg);
// Missing keys keep their defaults, so config files can stay sparse.
void from_json(const nlohmann::json& j, TrainConfig& cfg);

// Adam with bias correction. Moment buffers are keyed by parameter name and
// iterated in sorted order, so updates are deterministic.
class AdamOptimizer {
 public:
  AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  // Applies one update from the gradients currently held by the store.
  void step(ParamStore& ps, double lr);

  int steps_taken() const { return t_; }

 private:
  double beta1_, beta2_, eps_;
  int t_ = 0;
  std::map<std::string, Tensor> m_, v_;
};

struct TrainData {
  std::vector<CycleScene> train_scenes, val_scenes;  // cycle stages
  std::vector<PairSample> train_pairs, val_pairs;    // denoiser stages
};

struct TrainSetup {
  TrainConfig config{};
  CycleConfig cycle{};        // consulted by cycle stages
  DenoiserConfig denoiser{};  // consulted by denoiser stages
  TrainData data{};
  std::filesystem::path out_dir;  // checkpoints and metrics.jsonl
  std::vector<std::filesystem::path> init_checkpoints;
};

struct TrainResult {
  std::filesystem::path last_checkpoint;
  std::filesystem::path best_checkpoint;
  double best_val_psnr = 0.0;
  double final_loss = 0.0;
  long long steps = 0;
};

// Full run: fresh store seeded from the config, init checkpoints applied,
// then the epoch loop with per-step metrics lines, a checkpoint after every
// epoch and a best-by-validation-PSNR checkpoint. A non-finite loss aborts
// with a diagnostic. The overload taking a store trains it in place.
TrainResult run_training(const TrainSetup& setup);
TrainResult run_training(const TrainSetup& setup, ParamStore& ps);

}  // namespace rawcycle
