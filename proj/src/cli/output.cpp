#include "codedfl/cli/output.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <map>
#include <tuple>

#include <fmt/format.h>

#include "codedfl/cli/config.hpp"

namespace codedfl::cli {

void write_metrics_csv(std::ostream& out, const std::vector<protocol::MetricRecord>& records) {
    out << kMetricsHeader << '\n';
    for (const auto& r : records) {
        out << fmt::format("{},{},{},{},{},{},{},{}\n", r.trial, r.round, protocol::to_string(r.method),
                           r.test_accuracy, r.train_loss, r.decoded_count, r.retransmissions, r.wall_time_ms);
    }
}

void write_summary_csv(std::ostream& out, const std::vector<protocol::MetricRecord>& records) {
    struct Acc {
        std::size_t n = 0;
        double acc = 0, acc2 = 0, loss = 0, loss2 = 0, decoded = 0, retrans = 0;
        std::size_t failed = 0;
    };
    std::map<std::tuple<std::size_t, protocol::Method>, Acc> groups;
    for (const auto& r : records) {
        Acc& a = groups[{r.round, r.method}];
        ++a.n;
        a.acc += r.test_accuracy;
        a.acc2 += r.test_accuracy * r.test_accuracy;
        a.loss += r.train_loss;
        a.loss2 += r.train_loss * r.train_loss;
        a.decoded += static_cast<double>(r.decoded_count);
        a.retrans += static_cast<double>(r.retransmissions);
        a.failed += r.failed ? 1 : 0;
    }
    auto stderr_of = [](double sum, double sum2, std::size_t n) {
        if (n < 2) {
            return 0.0;
        }
        const double nn = static_cast<double>(n);
        const double mean = sum / nn;
        return std::sqrt(std::max(0.0, (sum2 - nn * mean * mean) / (nn - 1.0)) / nn);
    };
    out << "round,method,trials,test_accuracy_mean,test_accuracy_stderr,train_loss_mean,train_loss_stderr,"
           "decoded_count_mean,retransmissions_mean,failed_rounds\n";
    for (const auto& [key, a] : groups) {
        const double n = static_cast<double>(a.n);
        out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", std::get<0>(key), protocol::to_string(std::get<1>(key)),
                           a.n, a.acc / n, stderr_of(a.acc, a.acc2, a.n), a.loss / n, stderr_of(a.loss, a.loss2, a.n),
                           a.decoded / n, a.retrans / n, a.failed);
    }
}

nlohmann::json RunManifest::to_json() const {
    return {{"config", config},   {"config_hash", config_hash}, {"seed", seed},
            {"tool_version", tool_version}, {"timestamp", timestamp}, {"outputs", outputs}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
    try {
        RunManifest m;
        m.config = j.at("config");
        m.config_hash = j.at("config_hash").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.tool_version = j.value("tool_version", "");
        m.timestamp = j.value("timestamp", "");
        m.outputs = j.value("outputs", std::vector<std::string>{});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("malformed manifest: {}", e.what()));
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                       tm.tm_hour, tm.tm_min, tm.tm_sec);
}

}  // namespace codedfl::cli
