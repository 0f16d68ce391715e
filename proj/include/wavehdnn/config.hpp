#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "wavehdnn/trainer.hpp"

namespace wavehdnn::config {

/// Prefix of environment variables overriding config keys, e.g. WHDNN_LR=0.01.
inline constexpr const char* kEnvPrefix = "WHDNN_";

/// Parses flat `key = value` text ('#' starts a comment) into a key map.
/// Throws FormatError naming the line on malformed input.
std::map<std::string, std::string> parse_key_values(const std::string& text,
                                                    const std::string& source = "<config>");

/// Applies one key; throws ConfigError for unknown keys or bad values.
void set_key(trainer::TrainConfig& cfg, const std::string& key, const std::string& value);

trainer::TrainConfig from_key_values(const std::map<std::string, std::string>& kv,
                                     trainer::TrainConfig base = {});
trainer::TrainConfig load(const std::filesystem::path& path);

/// Overrides any key for which WHDNN_<KEY> is set in the environment.
void apply_env_overrides(trainer::TrainConfig& cfg);

/// Every key with its current value, in canonical order.
std::map<std::string, std::string> to_key_values(const trainer::TrainConfig& cfg);
std::string to_text(const trainer::TrainConfig& cfg);

}  // namespace wavehdnn::config
