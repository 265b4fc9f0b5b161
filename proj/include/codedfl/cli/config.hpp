#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codedfl/protocol.hpp"

namespace codedfl::cli {

/// Invalid configuration; the message names the offending key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Names accepted by preset().
std::vector<std::string> preset_names();

/**
 * Built-in configurations: "paper-v" (i.i.d.), "paper-v-5cls" and
 * "paper-v-1cl" (5 and 1 classes per client). M = 10, T = 20, I = 5,
 * b = 1024, eta = 0.01, B = 8, R = 0.6, SNR = 3 (linear), on the bundled
 * MNIST subset (2000 train / 1000 test).
 */
protocol::ExperimentConfig preset(std::string_view name);

/// Directory of the bundled MNIST subset.
std::filesystem::path bundled_mnist_dir();

/**
 * Overlays the TOML document at `path` on `base`. Sections: [experiment],
 * [channel], [quantizer], [code], [data]. Unknown sections or keys and
 * wrongly typed values raise ConfigError. A relative data.directory is
 * resolved against the file's directory.
 */
protocol::ExperimentConfig load_config_file(const std::filesystem::path& path,
                                            protocol::ExperimentConfig base = {});

/// Same, from TOML text; `origin` is used in messages and to resolve paths.
protocol::ExperimentConfig parse_config(std::string_view toml_text, const std::filesystem::path& origin,
                                        protocol::ExperimentConfig base = {});

/// Fully explicit JSON form with sorted keys; config_from_json inverts it.
nlohmann::json to_json(const protocol::ExperimentConfig& config);
protocol::ExperimentConfig config_from_json(const nlohmann::json& j);

/// SHA-256 (hex) of to_json(config).dump().
std::string config_hash(const protocol::ExperimentConfig& config);

}  // namespace codedfl::cli
