#pragma once

#include <filesystem>
#include <string>

#include "motionsynth/optimizer.hpp"
#include "motionsynth/trainer.hpp"

// nlohmann::json is used at the interface so the CLI can reuse the config
// (de)serializers for its run-config documents.
#include <json.hpp>

namespace motionsynth {

struct Checkpoint {
  int version = 1;
  VtlnConfig config;
  VtlnParams params;
  NormStats stats;
  RmspropState opt;
  long iteration = 0;
  std::string rng_state;
};

// Doubles are written with shortest round-trip decimals, so a save/load
// cycle is value-exact for finite 64-bit floats.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json config_to_json(const VtlnConfig& cfg);
// Strict: unknown keys are rejected, missing keys fall back to defaults.
VtlnConfig config_from_json(const nlohmann::json& doc);

nlohmann::json train_options_to_json(const TrainOptions& opts);
TrainOptions train_options_from_json(const nlohmann::json& doc);

Checkpoint make_checkpoint(const TrainResult& result, long iteration);

}  // namespace motionsynth
