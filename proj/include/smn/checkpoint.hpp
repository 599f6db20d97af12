#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "smn/train.hpp"

namespace smn {

inline constexpr const char* kCheckpointFormat = "smn-ckpt/1";

nlohmann::json config_to_json(const TrainConfig& config);
TrainConfig config_from_json(const nlohmann::json& j);

/// Versioned JSON; doubles are written in shortest round-trip form so a
/// loaded state resumes training bit-for-bit.
std::string serialize_checkpoint(const TrainState& state);
TrainState deserialize_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

}  // namespace smn
