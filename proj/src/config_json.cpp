#include "rawcycle/config_json.hpp"

#include "rawcycle/errors.hpp"

namespace rawcycle {

void to_json(nlohmann::json& j, const BranchConfig& c) {
  j = {{"n_rrg", c.n_rrg}, {"n_dab", c.n_dab}, {"channels", c.channels}};
}

void from_json(const nlohmann::json& j, BranchConfig& c) {
  j.at("n_rrg").get_to(c.n_rrg);
  j.at("n_dab").get_to(c.n_dab);
  j.at("channels").get_to(c.channels);
}

void to_json(nlohmann::json& j, const ColorBranchConfig& c) {
  j = {{"n_rrg", c.n_rrg},
       {"n_dab", c.n_dab},
       {"channels", c.channels},
       {"blur_sigma", c.blur_sigma}};
}

void from_json(const nlohmann::json& j, ColorBranchConfig& c) {
  j.at("n_rrg").get_to(c.n_rrg);
  j.at("n_dab").get_to(c.n_dab);
  j.at("channels").get_to(c.channels);
  j.at("blur_sigma").get_to(c.blur_sigma);
}

void to_json(nlohmann::json& j, const CycleConfig& c) {
  j = {{"rgb2raw", c.rgb2raw},
       {"raw2rgb", c.raw2rgb},
       {"color_corr", c.color_corr},
       {"reduction", c.reduction}};
}

void from_json(const nlohmann::json& j, CycleConfig& c) {
  j.at("rgb2raw").get_to(c.rgb2raw);
  j.at("raw2rgb").get_to(c.raw2rgb);
  j.at("color_corr").get_to(c.color_corr);
  j.at("reduction").get_to(c.reduction);
}

void to_json(nlohmann::json& j, const DenoiserConfig& c) {
  j = {{"n_rrg", c.n_rrg},
       {"n_dab", c.n_dab},
       {"channels", c.channels},
       {"reduction", c.reduction},
       {"mode", to_string(c.mode)}};
}

void from_json(const nlohmann::json& j, DenoiserConfig& c) {
  j.at("n_rrg").get_to(c.n_rrg);
  j.at("n_dab").get_to(c.n_dab);
  j.at("channels").get_to(c.channels);
  j.at("reduction").get_to(c.reduction);
  c.mode = denoiser_mode_from_string(j.at("mode").get<std::string>());
}

void to_json(nlohmann::json& j, const NoiseSamplerConfig& c) {
  j = {{"shot_min", c.shot_min},
       {"shot_max", c.shot_max},
       {"read_slope", c.read_slope},
       {"read_intercept", c.read_intercept},
       {"read_stddev", c.read_stddev}};
}

void from_json(const nlohmann::json& j, NoiseSamplerConfig& c) {
  j.at("shot_min").get_to(c.shot_min);
  j.at("shot_max").get_to(c.shot_max);
  j.at("read_slope").get_to(c.read_slope);
  j.at("read_intercept").get_to(c.read_intercept);
  j.at("read_stddev").get_to(c.read_stddev);
}

namespace {

std::string dataset_kind_name(DatasetSpec::Kind kind) {
  return kind == DatasetSpec::Kind::kSrgbFolder ? "srgb_folder" : "raw_pair_folder";
}

DatasetSpec::Kind dataset_kind_from(const std::string& name) {
  if (name == "srgb_folder") return DatasetSpec::Kind::kSrgbFolder;
  if (name == "raw_pair_folder") return DatasetSpec::Kind::kRawPairFolder;
  throw ConfigError("unknown dataset kind \"" + name + "\"");
}

}  // namespace

void to_json(nlohmann::json& j, const DatasetSpec& c) {
  j = {{"root", c.root.string()},
       {"kind", dataset_kind_name(c.kind)},
       {"train_fraction", c.train_fraction},
       {"val_fraction", c.val_fraction},
       {"test_fraction", c.test_fraction},
       {"crop", c.crop},
       {"flips", c.flips},
       {"crops_per_image", c.crops_per_image}};
}

void from_json(const nlohmann::json& j, DatasetSpec& c) {
  c.root = j.at("root").get<std::string>();
  c.kind = dataset_kind_from(j.at("kind").get<std::string>());
  j.at("train_fraction").get_to(c.train_fraction);
  j.at("val_fraction").get_to(c.val_fraction);
  j.at("test_fraction").get_to(c.test_fraction);
  j.at("crop").get_to(c.crop);
  j.at("flips").get_to(c.flips);
  j.at("crops_per_image").get_to(c.crops_per_image);
}

}  // namespace rawcycle
