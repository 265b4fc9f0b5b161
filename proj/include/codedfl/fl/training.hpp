#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string_view>

#include "codedfl/fl/dataset.hpp"
#include "codedfl/fl/model.hpp"
#include "codedfl/random.hpp"

namespace codedfl::fl {

struct TrainingHyperparams {
    std::size_t iterations = 5;  ///< I, local steps per round
    std::size_t batch = 1024;    ///< b
    double eta = 0.01;           ///< learning rate
    std::size_t rounds = 20;     ///< T

    /// Throws std::invalid_argument unless all fields are positive.
    void validate() const;
};

class NumericalDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * I steps of theta <- theta - eta * grad on batches of min(b, |shard|)
 * samples. Batches are consecutive slices of a shuffled copy of the shard;
 * when fewer than a batch remain the shard is reshuffled. Returns the final
 * parameters minus `theta`. Throws NumericalDivergence on a non-finite loss
 * or gradient.
 */
Vector local_sgd(const Objective& objective, const Vector& theta, const Dataset& data,
                 std::span<const std::size_t> shard, const TrainingHyperparams& hp, Rng& rng);

using UpdateMap = std::map<std::size_t, Vector>;

/// Mean of the decoded updates, (1/|W|) sum_{m in W} delta_m. Throws on an empty map.
Vector aggregate_proposed(const UpdateMap& decoded);

enum class Benchmark { qfl_ideal, anon, non_anon };

std::string_view to_string(Benchmark kind);

/**
 * qfl_ideal: (1/M) sum over all M clients (all must be present).
 * anon:      (1/M) sum over the arrived clients; missing ones are silently absent.
 * non_anon:  (1/|arrived|) sum over the arrived clients, zero when none arrived.
 * `dim` sizes the zero vector returned when nothing arrived.
 */
Vector aggregate_benchmark(Benchmark kind, const UpdateMap& arrived, std::size_t clients, std::size_t dim);

}  // namespace codedfl::fl
