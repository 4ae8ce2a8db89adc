#pragma once

#include <string>

#include "advkt/trainer.hpp"

namespace advkt {

// Flat `key = value` text, `#` starts a comment. Every TrainConfig field is
// addressable by its field name. Unknown keys and unparsable values raise
// ValidationError.
void apply_config_entry(TrainConfig& cfg, const std::string& key, const std::string& value);
TrainConfig parse_config_text(const std::string& text, TrainConfig base = {});
TrainConfig load_config_file(const std::string& path, TrainConfig base = {});

// Round-trippable dump of the effective configuration (config.resolved).
std::string render_config(const TrainConfig& cfg);

}  // namespace advkt
