#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "ecg/nn/model.hpp"

namespace ecg::nn {

inline constexpr int kCheckpointVersion = 1;

nlohmann::ordered_json config_to_json(const ModelConfig& c);
/// Missing keys keep their defaults; throws InvalidConfig on bad values.
ModelConfig config_from_json(const nlohmann::json& j, ModelConfig base = {});

std::vector<std::uint8_t> encode_checkpoint(const ResidualNet<float>& net);
ResidualNet<float> decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const ResidualNet<float>& net, const std::filesystem::path& path);
ResidualNet<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace ecg::nn
