#include "codedfl/fl/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <fstream>

#include <fmt/format.h>

namespace codedfl::fl {

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw DataError(fmt::format("{}: truncated header", path.string()));
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
}

std::ifstream open_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(fmt::format("cannot open {}", path.string()));
    }
    return in;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels, std::size_t limit) {
    auto img = open_binary(images);
    auto lab = open_binary(labels);
    if (const auto magic = read_be32(img, images); magic != 0x803) {
        throw DataError(fmt::format("{}: magic {:#x}, expected 0x803", images.string(), magic));
    }
    if (const auto magic = read_be32(lab, labels); magic != 0x801) {
        throw DataError(fmt::format("{}: magic {:#x}, expected 0x801", labels.string(), magic));
    }
    const std::size_t count = read_be32(img, images);
    const std::size_t rows = read_be32(img, images);
    const std::size_t cols = read_be32(img, images);
    const std::size_t label_count = read_be32(lab, labels);
    if (count != label_count) {
        throw DataError(fmt::format("{} has {} images but {} has {} labels", images.string(), count, labels.string(), label_count));
    }
    const std::size_t n = limit > 0 ? std::min(limit, count) : count;
    const std::size_t features = rows * cols;

    Dataset data;
    data.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
    data.y.resize(n);
    std::vector<unsigned char> pixels(features);
    for (std::size_t i = 0; i < n; ++i) {
        if (!img.read(reinterpret_cast<char*>(pixels.data()), static_cast<std::streamsize>(features))) {
            throw DataError(fmt::format("{}: truncated at image {}", images.string(), i));
        }
        for (std::size_t j = 0; j < features; ++j) {
            data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pixels[j] / 255.0;
        }
    }
    std::vector<unsigned char> raw(n);
    if (!lab.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n))) {
        throw DataError(fmt::format("{}: truncated labels", labels.string()));
    }
    int max_label = 0;
    for (std::size_t i = 0; i < n; ++i) {
        data.y[i] = raw[i];
        max_label = std::max(max_label, data.y[i]);
    }
    data.classes = max_label + 1;
    return data;
}

Dataset make_gaussian_mixture(std::size_t samples, std::size_t features, int classes, double separation, Rng& rng) {
    if (classes < 1 || features == 0) {
        throw std::invalid_argument("gaussian mixture needs at least one class and one feature");
    }
    RowMatrix means(classes, static_cast<Eigen::Index>(features));
    for (Eigen::Index c = 0; c < means.rows(); ++c) {
        for (Eigen::Index j = 0; j < means.cols(); ++j) {
            means(c, j) = separation * (2.0 * rng.uniform() - 1.0);
        }
    }
    Dataset data;
    data.classes = classes;
    data.x.resize(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(features));
    data.y.resize(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const int c = static_cast<int>(i % static_cast<std::size_t>(classes));
        data.y[i] = c;
        for (std::size_t j = 0; j < features; ++j) {
            // Box-Muller from two portable uniforms.
            const double u1 = 1.0 - rng.uniform();
            const double u2 = rng.uniform();
            const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
            data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                means(c, static_cast<Eigen::Index>(j)) + z;
        }
    }
    return data;
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
    Dataset out;
    out.classes = data.classes;
    out.x.resize(static_cast<Eigen::Index>(indices.size()), data.x.cols());
    out.y.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = data.x.row(static_cast<Eigen::Index>(indices[i]));
        out.y[i] = data.y[indices[i]];
    }
    return out;
}

std::vector<std::vector<std::size_t>> label_histogram(const Dataset& data, const Partition& partition) {
    std::vector<std::vector<std::size_t>> hist(partition.clients(),
                                               std::vector<std::size_t>(static_cast<std::size_t>(data.classes), 0));
    for (std::size_t m = 0; m < partition.clients(); ++m) {
        for (std::size_t i : partition.shards[m]) {
            ++hist[m][static_cast<std::size_t>(data.y[i])];
        }
    }
    return hist;
}

Partition partition_dataset(const Dataset& data, std::size_t clients, std::size_t classes_per_client, Rng& rng) {
    if (clients == 0) {
        throw std::invalid_argument("partition needs at least one client");
    }
    Partition out;
    out.shards.resize(clients);
    if (classes_per_client == 0) {
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order, rng);
        const std::size_t each = data.size() / clients;
        if (each == 0) {
            throw std::invalid_argument(fmt::format("{} samples cannot cover {} clients", data.size(), clients));
        }
        for (std::size_t m = 0; m < clients; ++m) {
            out.shards[m].assign(order.begin() + static_cast<std::ptrdiff_t>(m * each),
                                 order.begin() + static_cast<std::ptrdiff_t>((m + 1) * each));
        }
        return out;
    }

    const auto classes = static_cast<std::size_t>(data.classes);
    const std::size_t k = classes_per_client;
    if (k > classes || (clients * k) % classes != 0) {
        throw std::invalid_argument(fmt::format(
            "cannot give {} clients {} classes each from {} classes: need k <= C and C | M*k", clients, k, classes));
    }
    const std::size_t shards_per_class = clients * k / classes;
    std::vector<std::vector<std::size_t>> by_class(classes);
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[static_cast<std::size_t>(data.y[i])].push_back(i);
    }
    std::size_t shard_size = data.size();
    for (auto& members : by_class) {
        shuffle(members, rng);
        shard_size = std::min(shard_size, members.size() / shards_per_class);
    }
    if (shard_size == 0) {
        throw std::invalid_argument("some class has fewer samples than label shards");
    }
    std::vector<std::size_t> next_shard(classes, 0);
    for (std::size_t m = 0; m < clients; ++m) {
        for (std::size_t j = 0; j < k; ++j) {
            const std::size_t c = (m * k + j) % classes;
            const std::size_t s = next_shard[c]++;
            const auto begin = by_class[c].begin() + static_cast<std::ptrdiff_t>(s * shard_size);
            out.shards[m].insert(out.shards[m].end(), begin, begin + static_cast<std::ptrdiff_t>(shard_size));
        }
    }
    return out;
}

}  // namespace codedfl::fl
