#include "codedfl/fl/training.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include <fmt/format.h>

namespace codedfl::fl {

void TrainingHyperparams::validate() const {
    if (iterations == 0 || batch == 0 || rounds == 0 || !(eta > 0.0)) {
        throw std::invalid_argument(fmt::format("training needs I, b, T > 0 and eta > 0 (got {}, {}, {}, {})",
                                                iterations, batch, rounds, eta));
    }
}

Vector local_sgd(const Objective& objective, const Vector& theta, const Dataset& data,
                 std::span<const std::size_t> shard, const TrainingHyperparams& hp, Rng& rng) {
    if (shard.empty()) {
        throw std::invalid_argument("local_sgd: empty shard");
    }
    const std::size_t batch = std::min(hp.batch, shard.size());
    std::vector<std::size_t> order(shard.begin(), shard.end());
    shuffle(order, rng);
    std::size_t pos = 0;

    Vector current = theta;
    Vector grad(theta.size());
    for (std::size_t step = 0; step < hp.iterations; ++step) {
        if (pos + batch > order.size()) {
            shuffle(order, rng);
            pos = 0;
        }
        const double loss =
            objective.loss_and_gradient(current, data, std::span<const std::size_t>(order).subspan(pos, batch), grad);
        pos += batch;
        if (!std::isfinite(loss) || !grad.allFinite()) {
            throw NumericalDivergence(fmt::format("non-finite loss or gradient at local step {}", step));
        }
        current -= hp.eta * grad;
    }
    return current - theta;
}

Vector aggregate_proposed(const UpdateMap& decoded) {
    if (decoded.empty()) {
        throw std::invalid_argument("aggregate_proposed: no decoded updates");
    }
    Vector sum = Vector::Zero(decoded.begin()->second.size());
    for (const auto& [client, delta] : decoded) {
        sum += delta;
    }
    return sum / static_cast<double>(decoded.size());
}

std::string_view to_string(Benchmark kind) {
    switch (kind) {
        case Benchmark::qfl_ideal:
            return "qfl_ideal";
        case Benchmark::anon:
            return "anon";
        case Benchmark::non_anon:
            return "non_anon";
    }
    return "?";
}

Vector aggregate_benchmark(Benchmark kind, const UpdateMap& arrived, std::size_t clients, std::size_t dim) {
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& [client, delta] : arrived) {
        if (client >= clients || static_cast<std::size_t>(delta.size()) != dim) {
            throw std::invalid_argument(fmt::format("aggregate_benchmark: bad update from client {}", client));
        }
        sum += delta;
    }
    switch (kind) {
        case Benchmark::qfl_ideal:
            if (arrived.size() != clients) {
                throw std::invalid_argument(
                    fmt::format("qfl_ideal needs all {} clients, got {}", clients, arrived.size()));
            }
            return sum / static_cast<double>(clients);
        case Benchmark::anon:
            return sum / static_cast<double>(clients);
        case Benchmark::non_anon:
            return arrived.empty() ? sum : Vector(sum / static_cast<double>(arrived.size()));
    }
    return sum;
}

}  // namespace codedfl::fl
