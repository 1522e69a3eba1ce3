#pragma once

#include <string>

#include <json.hpp>

#include "gazesa/gbdt.hpp"

namespace gazesa::gbdt {

inline constexpr int kModelFormatVersion = 1;

nlohmann::ordered_json config_to_json(const TrainConfig& config);
// Unknown keys are rejected; missing keys keep their defaults.
TrainConfig config_from_json(const nlohmann::json& doc);
TrainConfig load_config(const std::string& path);

nlohmann::ordered_json model_to_json(const TreeEnsemble& model);
// Throws Error(kModel) on an unknown version or a structurally broken tree.
TreeEnsemble model_from_json(const nlohmann::json& doc);

void save_model(const std::string& path, const TreeEnsemble& model);
TreeEnsemble load_model(const std::string& path);

}  // namespace gazesa::gbdt
