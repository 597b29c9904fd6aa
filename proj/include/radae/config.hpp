#pragma once

// Flat key=value experiment configuration.
//
//   # comment
//   stream.mode = nonstationary
//   nn.widths = 32,32,32
//
// Keys carry a section prefix (stream., nn., rl., pool., midae., run.). Unknown
// keys, duplicate keys and malformed values are errors.

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "radae/harness.hpp"

namespace radae {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string source, std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

struct ConfigKey {
    std::string_view name;
    std::string_view description;
};

/// Every recognised key with a one-line description.
std::vector<ConfigKey> config_keys();

/// Applies `key = value` to `cfg`. Throws std::invalid_argument on an unknown key
/// or malformed value.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Parses a configuration over the defaults and validates it.
ExperimentConfig parse_config(std::istream& in, const std::string& source_name = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Renders every non-empty key with its current value in a form parse_config accepts.
std::string render_config(const ExperimentConfig& cfg);

}  // namespace radae
