#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "codedfl/protocol.hpp"

namespace codedfl::cli {

inline constexpr const char* kMetricsHeader =
    "trial,round,method,test_accuracy,train_loss,decoded_count,retransmissions,wall_time_ms";

/// One row per record after kMetricsHeader. Reals use shortest round-trip form.
void write_metrics_csv(std::ostream& out, const std::vector<protocol::MetricRecord>& records);

/// Per (round, method): trial count, mean and standard error of accuracy and
/// loss, mean decoded count and retransmissions, failed rounds.
void write_summary_csv(std::ostream& out, const std::vector<protocol::MetricRecord>& records);

struct RunManifest {
    nlohmann::json config;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string tool_version;
    std::string timestamp;  ///< UTC, ISO 8601
    std::vector<std::string> outputs;

    nlohmann::json to_json() const;
    static RunManifest from_json(const nlohmann::json& j);
};

std::string utc_timestamp();

}  // namespace codedfl::cli
