#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "codedfl/channel.hpp"
#include "codedfl/dnc_code.hpp"
#include "codedfl/fl/dataset.hpp"
#include "codedfl/fl/model.hpp"
#include "codedfl/fl/training.hpp"
#include "codedfl/galois.hpp"
#include "codedfl/quantizer.hpp"

namespace codedfl::protocol {

enum class Method { proposed, qfl_ideal, anon, non_anon };

std::string_view to_string(Method method);
/// Throws std::invalid_argument for an unknown name.
Method method_from_string(std::string_view name);

struct DataConfig {
    enum class Source { synthetic, idx };
    Source source = Source::synthetic;
    std::string directory;            ///< idx: holds train-/t10k- image and label files
    std::size_t train_limit = 0;      ///< 0 = all
    std::size_t test_limit = 0;
    std::size_t classes_per_client = 0;  ///< 0 = i.i.d.
    // synthetic only
    std::size_t synthetic_train = 2000;
    std::size_t synthetic_test = 1000;
    std::size_t synthetic_features = 20;
    int synthetic_classes = 10;
    double synthetic_separation = 1.0;
};

struct ExperimentConfig {
    std::size_t clients = 10;
    fl::TrainingHyperparams training;
    std::size_t hidden = 32;
    channel::ChannelParams channel;
    std::optional<double> p_e_override;
    unsigned bits = 8;
    std::optional<double> quantizer_bound;  ///< symmetric [-c, c]; unset = dry-run estimate
    gf::FieldSpec field;
    std::vector<Method> methods{Method::proposed, Method::qfl_ideal, Method::anon, Method::non_anon};
    std::uint64_t seed = 1;
    std::size_t trials = 1;
    std::size_t retry_limit = 100;
    bool relaying = true;
    std::size_t threads = 0;  ///< 0 = hardware concurrency
    bool record_wall_time = false;
    DataConfig data;

    double p_e() const;
    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// What the PS holds after one transmission attempt.
struct Transmission {
    dnc::PrunedSystem system;
    gf::SymbolMatrix received;  ///< one row per column of system.columns
};

/**
 * Runs both stages of one attempt: slot-1 broadcast (direct uplink and D2D
 * overhearing), then every client masks its block by what it decoded and
 * sends its M-1 relay codewords. With `relaying` false no D2D reception and
 * no relay slot is used.
 */
Transmission transmit(const dnc::EncodingMatrix& code, const gf::GaloisField& field,
                      std::span<const dnc::Message> messages, const channel::ConnectivityRealization& links,
                      bool relaying = true);

/// PS-side system only, no payload. Same link semantics as transmit().
dnc::PrunedSystem transmit_structure(const dnc::EncodingMatrix& code, const channel::ConnectivityRealization& links,
                                     bool relaying = true);

enum class Path { direct, relay };

struct RoundOutcome {
    bool failed = false;                 ///< retry limit hit, round skipped
    std::vector<std::size_t> decoded;    ///< W_r of the successful attempt
    std::vector<Path> paths;             ///< per entry of `decoded`
    std::size_t retransmissions = 0;     ///< attempts - 1
    std::size_t first_attempt_visible = 0;  ///< |W| of attempt 0
    std::vector<quant::QuantizedUpdate> updates;  ///< decoded, aligned with `decoded`
};

class RoundFailure : public std::runtime_error {
public:
    explicit RoundFailure(std::size_t attempts);
    std::size_t attempts() const { return attempts_; }

private:
    std::size_t attempts_;
};

/// Connectivity of attempt `attempt` in round `round` of `trial`.
channel::ConnectivityRealization round_connectivity(const ExperimentConfig& config, std::size_t trial,
                                                    std::size_t round, std::size_t attempt);

/**
 * Communication and decoding of one round of the proposed scheme. Redraws
 * all links until the PS system is solvable (rank(A_bar) = |W|, W
 * non-empty) or `retry_limit` attempts fail, in which case the outcome is
 * marked failed.
 */
RoundOutcome communicate_round(const ExperimentConfig& config, const dnc::EncodingMatrix& code,
                               const gf::GaloisField& field, const quant::QuantizerSpec& spec,
                               std::span<const quant::QuantizedUpdate> updates, std::size_t trial, std::size_t round);

struct ExperimentData {
    fl::Dataset train;
    fl::Dataset test;
};

/// Loads or synthesises the train/test sets described by `config.data`.
ExperimentData load_data(const ExperimentConfig& config);

struct MetricRecord {
    std::size_t trial = 0;
    std::size_t round = 0;  ///< 1..T
    Method method = Method::proposed;
    double test_accuracy = 0.0;
    double train_loss = 0.0;
    std::size_t decoded_count = 0;
    std::size_t retransmissions = 0;
    double wall_time_ms = 0.0;
    bool failed = false;
};

/// Quantizer bound used in `trial`: config.quantizer_bound or the largest
/// absolute coordinate of a dry-run first-round update.
double quantizer_bound(const ExperimentConfig& config, const ExperimentData& data, std::size_t trial);

/**
 * T rounds of every configured method for every trial. Trials and methods
 * run on a worker pool; records come back sorted by (trial, round, method)
 * and do not depend on the number of threads.
 */
std::vector<MetricRecord> run_experiment(const ExperimentConfig& config, const ExperimentData& data);

/// Single-attempt Monte Carlo of whether the PS sees / can recover one client.
struct OutageEstimate {
    std::uint64_t trials = 0;
    std::uint64_t invisible = 0;      ///< client absent from W
    std::uint64_t unrecoverable = 0;  ///< client's message not in the column span
    double invisible_rate() const { return static_cast<double>(invisible) / static_cast<double>(trials); }
    double unrecoverable_rate() const { return static_cast<double>(unrecoverable) / static_cast<double>(trials); }
};

OutageEstimate estimate_client_outage(std::size_t clients, double p_e, std::size_t client, std::uint64_t trials,
                                      std::uint64_t seed, const gf::GaloisField& field);

}  // namespace codedfl::protocol
