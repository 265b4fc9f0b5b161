#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "codedfl/random.hpp"

namespace codedfl::fl {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Labelled samples, one row of `x` per sample.
struct Dataset {
    RowMatrix x;
    std::vector<int> y;
    int classes = 0;

    std::size_t size() const { return y.size(); }
    std::size_t features() const { return static_cast<std::size_t>(x.cols()); }
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Reads an IDX image/label file pair (magic 0x00000803 / 0x00000801,
 * big-endian dimensions). Pixels are scaled to [0, 1]. `limit` > 0 keeps
 * only the first `limit` samples. Throws DataError on malformed input.
 */
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t limit = 0);

/**
 * Isotropic Gaussian clusters: class c has a mean drawn uniformly from
 * [-separation, separation]^features and unit variance. Samples are
 * assigned classes round-robin.
 */
Dataset make_gaussian_mixture(std::size_t samples, std::size_t features, int classes, double separation, Rng& rng);

Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

/// Per-client sample indices into one dataset.
struct Partition {
    std::vector<std::vector<std::size_t>> shards;

    std::size_t clients() const { return shards.size(); }
};

/// Label counts per client, classes columns.
std::vector<std::vector<std::size_t>> label_histogram(const Dataset& data, const Partition& partition);

/**
 * Splits `data` across `clients` with equal shard sizes.
 *
 * classes_per_client == 0: shuffle and deal floor(n / M) samples each.
 * classes_per_client == k: each class is cut into M*k/C equal label shards
 * and client m receives the shards of classes (m*k + j) mod C, j < k, so it
 * holds exactly k distinct classes. Requires k <= C and C | M*k; samples
 * that do not fill a whole shard are dropped. Throws std::invalid_argument
 * when infeasible.
 */
Partition partition_dataset(const Dataset& data, std::size_t clients, std::size_t classes_per_client, Rng& rng);

}  // namespace codedfl::fl
