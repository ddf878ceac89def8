#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "rawcycle/params.hpp"

namespace rawcycle {

// Checkpoint container: the magic "RCKP", a length-prefixed JSON manifest
// (config, stage, step, payload checksum, array table), then every
// parameter array as little-endian float64 in table order. Writes go to a
// temp file first and are renamed into place, so a crash never leaves a
// half-written checkpoint under the real name.

struct CheckpointManifest {
  nlohmann::json config;
  std::string stage;
  std::int64_t step = 0;
};

void save_checkpoint(const std::filesystem::path& path, const ParamStore& ps,
                     const CheckpointManifest& manifest);

// Loads arrays into `ps`, overwriting same-named entries and creating the
// rest. Corruption raises DataError; when `expected_config` is given, a
// differing stored config raises ConfigError naming the first mismatching
// field.
CheckpointManifest load_checkpoint(const std::filesystem::path& path, ParamStore& ps,
                                   const nlohmann::json* expected_config = nullptr);

// Reads only the manifest, without touching any parameter payload.
CheckpointManifest peek_checkpoint(const std::filesystem::path& path);

}  // namespace rawcycle
