#include "codedfl/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <map>
#include <numeric>
#include <tuple>
#include <thread>

#include <fmt/format.h>

#include "codedfl/random.hpp"

namespace codedfl::protocol {

namespace {

constexpr Method kAllMethods[] = {Method::proposed, Method::qfl_ideal, Method::anon, Method::non_anon};

struct PsSide {
    std::vector<dnc::MaskedBlock> masked;
    dnc::PrunedSystem system;
};

PsSide build_ps(const dnc::EncodingMatrix& code, const channel::ConnectivityRealization& links, bool relaying) {
    const std::size_t m = code.clients();
    if (links.clients() != m) {
        throw std::invalid_argument(
            fmt::format("connectivity for {} clients used with a {}-client code", links.clients(), m));
    }
    PsSide out;
    out.masked.reserve(m);
    std::vector<dnc::LinkVector> relay = links.relay;
    for (std::size_t k = 0; k < m; ++k) {
        dnc::LinkVector tau_in = links.d2d[k];
        if (!relaying) {
            std::fill(tau_in.begin(), tau_in.end(), 0);
            tau_in[k] = 1;
            std::fill(relay[k].begin(), relay[k].end(), 0);
        }
        out.masked.push_back(dnc::mask_client_block(code.block(k), k, tau_in));
    }
    out.system = dnc::prune(dnc::assemble_ps_matrix(out.masked, links.direct, relay));
    return out;
}

}  // namespace

std::string_view to_string(Method method) {
    switch (method) {
        case Method::proposed:
            return "proposed";
        case Method::qfl_ideal:
            return "qfl_ideal";
        case Method::anon:
            return "anon";
        case Method::non_anon:
            return "non_anon";
    }
    return "?";
}

Method method_from_string(std::string_view name) {
    for (Method m : kAllMethods) {
        if (to_string(m) == name) {
            return m;
        }
    }
    throw std::invalid_argument(
        fmt::format("unknown method '{}' (expected proposed, qfl_ideal, anon or non_anon)", name));
}

double ExperimentConfig::p_e() const {
    return p_e_override ? *p_e_override : channel::outage_probability(channel);
}

void ExperimentConfig::validate() const {
    if (clients < 1) {
        throw std::invalid_argument("experiment.clients must be at least 1");
    }
    training.validate();
    if (hidden < 1) {
        throw std::invalid_argument("experiment.hidden must be at least 1");
    }
    if (p_e_override) {
        if (!(*p_e_override >= 0.0 && *p_e_override < 1.0)) {
            throw std::invalid_argument(fmt::format("channel.p_e_override must lie in [0, 1), got {}", *p_e_override));
        }
    } else {
        channel.validate();
    }
    if (bits < 1 || bits > 32) {
        throw std::invalid_argument(fmt::format("quantizer.bits must be in 1..32, got {}", bits));
    }
    if (quantizer_bound && !(*quantizer_bound > 0.0 && std::isfinite(*quantizer_bound))) {
        throw std::invalid_argument(fmt::format("quantizer.bound must be positive, got {}", *quantizer_bound));
    }
    if (retry_limit < 1) {
        throw std::invalid_argument("experiment.retry_limit must be at least 1");
    }
    if (trials < 1) {
        throw std::invalid_argument("experiment.trials must be at least 1");
    }
    if (methods.empty()) {
        throw std::invalid_argument("experiment.methods must not be empty");
    }
    for (std::size_t i = 0; i < methods.size(); ++i) {
        for (std::size_t j = i + 1; j < methods.size(); ++j) {
            if (methods[i] == methods[j]) {
                throw std::invalid_argument(fmt::format("experiment.methods lists {} twice", to_string(methods[i])));
            }
        }
    }
}

dnc::PrunedSystem transmit_structure(const dnc::EncodingMatrix& code, const channel::ConnectivityRealization& links,
                                     bool relaying) {
    return build_ps(code, links, relaying).system;
}

Transmission transmit(const dnc::EncodingMatrix& code, const gf::GaloisField& field,
                      std::span<const dnc::Message> messages, const channel::ConnectivityRealization& links,
                      bool relaying) {
    const std::size_t m = code.clients();
    if (messages.size() != m) {
        throw std::invalid_argument(fmt::format("transmit: {} messages for {} clients", messages.size(), m));
    }
    PsSide ps = build_ps(code, links, relaying);
    const std::size_t length = m == 0 ? 0 : messages[0].symbols.size();

    Transmission out;
    out.received = gf::SymbolMatrix(ps.system.columns.size(), length);
    std::map<std::size_t, std::vector<dnc::Message>> relayed;
    for (std::size_t i = 0; i < ps.system.columns.size(); ++i) {
        const dnc::ColumnSource& src = ps.system.sources[i];
        const dnc::Message* payload = nullptr;
        if (src.is_direct()) {
            payload = &messages[src.client];
        } else {
            auto it = relayed.find(src.client);
            if (it == relayed.end()) {
                it = relayed.emplace(src.client, dnc::relay_codewords(ps.masked[src.client], messages, field)).first;
            }
            payload = &it->second[src.slot - 1];
        }
        if (payload->symbols.size() != length) {
            throw std::invalid_argument("transmit: messages differ in length");
        }
        std::copy(payload->symbols.begin(), payload->symbols.end(), out.received.row(i).begin());
    }
    out.system = std::move(ps.system);
    return out;
}

RoundFailure::RoundFailure(std::size_t attempts)
    : std::runtime_error(fmt::format("round undecodable after {} attempts", attempts)), attempts_(attempts) {}

channel::ConnectivityRealization round_connectivity(const ExperimentConfig& config, std::size_t trial,
                                                    std::size_t round, std::size_t attempt) {
    Rng rng = Rng::stream(config.seed, StreamKind::channel, {trial, round, attempt});
    return channel::sample_connectivity(config.clients, config.p_e(), rng);
}

RoundOutcome communicate_round(const ExperimentConfig& config, const dnc::EncodingMatrix& code,
                               const gf::GaloisField& field, const quant::QuantizerSpec& spec,
                               std::span<const quant::QuantizedUpdate> updates, std::size_t trial, std::size_t round) {
    std::vector<dnc::Message> messages;
    messages.reserve(updates.size());
    for (const auto& q : updates) {
        messages.push_back(quant::to_message(q, spec, field));
    }
    RoundOutcome outcome;
    for (std::size_t attempt = 0; attempt < config.retry_limit; ++attempt) {
        const auto links = round_connectivity(config, trial, round, attempt);
        const dnc::PrunedSystem structure = transmit_structure(code, links, config.relaying);
        if (attempt == 0) {
            outcome.first_attempt_visible = structure.clients.size();
        }
        if (!dnc::is_decodable(structure, field)) {
            continue;
        }
        const Transmission tx = transmit(code, field, messages, links, config.relaying);
        const auto decoded = dnc::decode_messages(tx.system, tx.received, field);
        outcome.retransmissions = attempt;
        for (const auto& [client, msg] : decoded) {
            quant::QuantizedUpdate q = quant::from_message(msg, spec, field);
            if (q != updates[client]) {
                throw std::logic_error(fmt::format("decoded update of client {} differs from the sent one", client));
            }
            outcome.decoded.push_back(client);
            outcome.paths.push_back(links.direct[client] ? Path::direct : Path::relay);
            outcome.updates.push_back(std::move(q));
        }
        return outcome;
    }
    outcome.failed = true;
    outcome.retransmissions = config.retry_limit - 1;
    return outcome;
}

ExperimentData load_data(const ExperimentConfig& config) {
    const DataConfig& dc = config.data;
    ExperimentData out;
    if (dc.source == DataConfig::Source::idx) {
        const std::filesystem::path dir(dc.directory);
        out.train = fl::load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", dc.train_limit);
        out.test = fl::load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", dc.test_limit);
        out.test.classes = out.train.classes = std::max(out.train.classes, out.test.classes);
        return out;
    }
    Rng rng = Rng::stream(config.seed, StreamKind::data);
    const std::size_t total = dc.synthetic_train + dc.synthetic_test;
    fl::Dataset all = fl::make_gaussian_mixture(total, dc.synthetic_features, dc.synthetic_classes,
                                                dc.synthetic_separation, rng);
    std::vector<std::size_t> train_idx(dc.synthetic_train), test_idx(dc.synthetic_test);
    std::iota(train_idx.begin(), train_idx.end(), std::size_t{0});
    std::iota(test_idx.begin(), test_idx.end(), dc.synthetic_train);
    out.train = fl::subset(all, train_idx);
    out.test = fl::subset(all, test_idx);
    return out;
}

namespace {

struct TrialSetup {
    fl::Partition partition;
    fl::Vector theta0;
    quant::QuantizerSpec spec;
};

fl::Partition trial_partition(const ExperimentConfig& config, const ExperimentData& data, std::size_t trial) {
    Rng rng = Rng::stream(config.seed, StreamKind::partition, {trial});
    return fl::partition_dataset(data.train, config.clients, config.data.classes_per_client, rng);
}

fl::Vector trial_init(const ExperimentConfig& config, const fl::Mlp& mlp, std::size_t trial) {
    Rng rng = Rng::stream(config.seed, StreamKind::model_init, {trial});
    return mlp.initialize(rng);
}

fl::Mlp make_model(const ExperimentConfig& config, const ExperimentData& data) {
    return fl::Mlp(data.train.features(), config.hidden, static_cast<std::size_t>(data.train.classes));
}

double dry_run_bound(const ExperimentConfig& config, const ExperimentData& data, const fl::Mlp& mlp,
                     const fl::Partition& partition, const fl::Vector& theta0, std::size_t trial) {
    double bound = 0.0;
    for (std::size_t m = 0; m < config.clients; ++m) {
        Rng rng = Rng::stream(config.seed, StreamKind::dry_run, {trial, m});
        const fl::Vector delta = fl::local_sgd(mlp, theta0, data.train, partition.shards[m], config.training, rng);
        bound = std::max(bound, delta.cwiseAbs().maxCoeff());
    }
    return bound > 0.0 ? bound : 1.0;
}

TrialSetup setup_trial(const ExperimentConfig& config, const ExperimentData& data, const fl::Mlp& mlp,
                       std::size_t trial) {
    TrialSetup s;
    s.partition = trial_partition(config, data, trial);
    s.theta0 = trial_init(config, mlp, trial);
    const double bound = config.quantizer_bound ? *config.quantizer_bound
                                                : dry_run_bound(config, data, mlp, s.partition, s.theta0, trial);
    s.spec = quant::QuantizerSpec::symmetric(mlp.dim(), bound, config.bits);
    return s;
}

std::vector<MetricRecord> run_method(const ExperimentConfig& config, const ExperimentData& data, const fl::Mlp& mlp,
                                     const TrialSetup& setup, const dnc::EncodingMatrix& code,
                                     const gf::GaloisField& field, std::size_t trial, Method method) {
    using Clock = std::chrono::steady_clock;
    std::vector<MetricRecord> records;
    fl::Vector theta = setup.theta0;
    const std::size_t m = config.clients;
    for (std::size_t round = 1; round <= config.training.rounds; ++round) {
        const auto start = Clock::now();
        std::vector<quant::QuantizedUpdate> updates(m);
        for (std::size_t k = 0; k < m; ++k) {
            Rng train_rng = Rng::stream(config.seed, StreamKind::training, {trial, round, k});
            const fl::Vector delta =
                fl::local_sgd(mlp, theta, data.train, setup.partition.shards[k], config.training, train_rng);
            Rng q_rng = Rng::stream(config.seed, StreamKind::quantize, {trial, round, k});
            updates[k] = quant::quantize(std::span<const double>(delta.data(), static_cast<std::size_t>(delta.size())),
                                         setup.spec, q_rng);
        }
        auto to_vector = [&](const quant::QuantizedUpdate& q) {
            const std::vector<double> v = quant::dequantize(q, setup.spec);
            return fl::Vector(Eigen::Map<const fl::Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
        };

        MetricRecord rec;
        rec.trial = trial;
        rec.round = round;
        rec.method = method;
        std::optional<fl::Vector> step;
        if (method == Method::proposed) {
            const RoundOutcome outcome = communicate_round(config, code, field, setup.spec, updates, trial, round);
            rec.retransmissions = outcome.retransmissions;
            rec.failed = outcome.failed;
            if (!outcome.failed) {
                fl::UpdateMap decoded;
                for (std::size_t i = 0; i < outcome.decoded.size(); ++i) {
                    decoded.emplace(outcome.decoded[i], to_vector(outcome.updates[i]));
                }
                rec.decoded_count = decoded.size();
                step = fl::aggregate_proposed(decoded);
            }
        } else {
            fl::UpdateMap arrived;
            const auto links = round_connectivity(config, trial, round, 0);
            for (std::size_t k = 0; k < m; ++k) {
                if (method == Method::qfl_ideal || links.direct[k] != 0) {
                    arrived.emplace(k, to_vector(updates[k]));
                }
            }
            rec.decoded_count = arrived.size();
            const auto kind = method == Method::qfl_ideal ? fl::Benchmark::qfl_ideal
                              : method == Method::anon    ? fl::Benchmark::anon
                                                          : fl::Benchmark::non_anon;
            step = fl::aggregate_benchmark(kind, arrived, m, mlp.dim());
        }
        if (step) {
            theta += *step;
        }
        rec.test_accuracy = mlp.evaluate(theta, data.test).accuracy;
        rec.train_loss = mlp.evaluate(theta, data.train).loss;
        if (config.record_wall_time) {
            rec.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
        }
        records.push_back(rec);
    }
    return records;
}

}  // namespace

double quantizer_bound(const ExperimentConfig& config, const ExperimentData& data, std::size_t trial) {
    if (config.quantizer_bound) {
        return *config.quantizer_bound;
    }
    const fl::Mlp mlp = make_model(config, data);
    const fl::Partition partition = trial_partition(config, data, trial);
    return dry_run_bound(config, data, mlp, partition, trial_init(config, mlp, trial), trial);
}

std::vector<MetricRecord> run_experiment(const ExperimentConfig& config, const ExperimentData& data) {
    config.validate();
    const gf::GaloisField field(config.field);
    const dnc::EncodingMatrix code = dnc::build_encoding_matrix(config.clients, field);
    const fl::Mlp mlp = make_model(config, data);

    std::vector<TrialSetup> setups(config.trials);
    std::vector<std::vector<MetricRecord>> results(config.trials * config.methods.size());
    std::vector<std::exception_ptr> errors(results.size());

    std::size_t threads = config.threads != 0 ? config.threads : std::max(1U, std::thread::hardware_concurrency());
    threads = std::min(threads, results.size());

    // Setups first (one task per trial), then one task per (trial, method).
    auto run_pool = [&](std::size_t tasks, auto&& body) {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            for (std::size_t t = next++; t < tasks; t = next++) {
                try {
                    body(t);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (std::size_t i = 1; i < std::min(threads, tasks); ++i) {
            pool.emplace_back(worker);
        }
        worker();
        for (auto& th : pool) {
            th.join();
        }
        for (std::size_t t = 0; t < tasks; ++t) {
            if (errors[t]) {
                std::rethrow_exception(errors[t]);
            }
        }
    };

    run_pool(config.trials, [&](std::size_t trial) { setups[trial] = setup_trial(config, data, mlp, trial); });
    run_pool(results.size(), [&](std::size_t t) {
        const std::size_t trial = t / config.methods.size();
        results[t] = run_method(config, data, mlp, setups[trial], code, field, trial,
                                config.methods[t % config.methods.size()]);
    });

    std::vector<MetricRecord> records;
    for (auto& r : results) {
        records.insert(records.end(), r.begin(), r.end());
    }
    std::sort(records.begin(), records.end(), [](const MetricRecord& a, const MetricRecord& b) {
        return std::tie(a.trial, a.round, a.method) < std::tie(b.trial, b.round, b.method);
    });
    return records;
}

OutageEstimate estimate_client_outage(std::size_t clients, double p_e, std::size_t client, std::uint64_t trials,
                                      std::uint64_t seed, const gf::GaloisField& field) {
    if (client >= clients) {
        throw std::invalid_argument(fmt::format("client {} out of range for {} clients", client, clients));
    }
    const dnc::EncodingMatrix code = dnc::build_encoding_matrix(clients, field);
    Rng rng = Rng::stream(seed, StreamKind::monte_carlo, {clients, client});
    OutageEstimate est;
    est.trials = trials;
    for (std::uint64_t t = 0; t < trials; ++t) {
        const auto links = channel::sample_connectivity(clients, p_e, rng);
        const dnc::PrunedSystem sys = transmit_structure(code, links);
        if (!std::binary_search(sys.clients.begin(), sys.clients.end(), client)) {
            ++est.invisible;
            ++est.unrecoverable;
            continue;
        }
        const auto ok = dnc::recoverable_clients(sys, field);
        if (!std::binary_search(ok.begin(), ok.end(), client)) {
            ++est.unrecoverable;
        }
    }
    return est;
}

}  // namespace codedfl::protocol
