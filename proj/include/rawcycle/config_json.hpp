#pragma once

#include "json.hpp"
#include "rawcycle/corpus.hpp"
#include "rawcycle/models.hpp"
#include "rawcycle/noise.hpp"

namespace rawcycle {

// JSON bindings for the model configs, used by config files and checkpoint
// manifests. Field names mirror the struct members one to one.

void to_json(nlohmann::json& j, const BranchConfig& c);
void from_json(const nlohmann::json& j, BranchConfig& c);

void to_json(nlohmann::json& j, const ColorBranchConfig& c);
void from_json(const nlohmann::json& j, ColorBranchConfig& c);

void to_json(nlohmann::json& j, const CycleConfig& c);
void from_json(const nlohmann::json& j, CycleConfig& c);

void to_json(nlohmann::json& j, const DenoiserConfig& c);
void from_json(const nlohmann::json& j, DenoiserConfig& c);

void to_json(nlohmann::json& j, const NoiseSamplerConfig& c);
void from_json(const nlohmann::json& j, NoiseSamplerConfig& c);

// DatasetSpec serializes kind as "srgb_folder" / "raw_pair_folder" and the
// root as a plain path string.
void to_json(nlohmann::json& j, const DatasetSpec& c);
void from_json(const nlohmann::json& j, DatasetSpec& c);

}  // namespace rawcycle
