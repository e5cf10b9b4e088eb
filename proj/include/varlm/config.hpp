#pragma once

#include <filesystem>

#include <json.hpp>

#include "varlm/nlm.hpp"
#include "varlm/projection.hpp"
#include "varlm/variety.hpp"

namespace varlm {

/// Everything a CLI run can be configured with. Every field has a default;
/// a config file only needs the fields it overrides.
struct ToolConfig {
  VarietyConfig variety;
  TsneOptions tsne;
};

nlohmann::ordered_json to_json(const TrainConfig& c);
nlohmann::ordered_json to_json(const NgramOptions& o);
nlohmann::ordered_json to_json(const TsneOptions& o);
nlohmann::ordered_json to_json(const VarietyConfig& c);
nlohmann::ordered_json to_json(const ToolConfig& c);

// Each reader overlays the keys present in `j` onto `base`; unknown keys throw ValidationError.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
NgramOptions ngram_options_from_json(const nlohmann::json& j, NgramOptions base = {});
TsneOptions tsne_options_from_json(const nlohmann::json& j, TsneOptions base = {});
ToolConfig tool_config_from_json(const nlohmann::json& j, ToolConfig base = {});

ToolConfig load_tool_config(const std::filesystem::path& path);

}  // namespace varlm
