#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

namespace codedfl {

/// Purpose tag mixed into every derived stream so that, e.g., the channel
/// draws of round r never alias the quantizer draws of round r.
enum class StreamKind : std::uint64_t {
    model_init = 1,
    data = 2,
    partition = 3,
    training = 4,
    quantize = 5,
    channel = 6,
    dry_run = 7,
    monte_carlo = 8,
};

/**
 * Seeded random stream.
 *
 * Streams are addressed by (master seed, kind, tags...) through a SplitMix64
 * mixing chain, so a stream's contents depend only on its address and never
 * on the order in which other streams were consumed. Uniform and Bernoulli
 * draws are computed from raw 64-bit engine output and are therefore
 * identical on every platform.
 */
class Rng {
public:
    using engine_type = std::mt19937_64;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng stream(std::uint64_t master_seed, StreamKind kind,
                      std::initializer_list<std::uint64_t> tags = {}) {
        std::uint64_t state = mix(master_seed ^ 0x6a09e667f3bcc909ULL);
        state = mix(state ^ static_cast<std::uint64_t>(kind));
        for (std::uint64_t tag : tags) {
            state = mix(state + 0x9e3779b97f4a7c15ULL + tag);
        }
        return Rng(state);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// True with probability p.
    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) {
        // Lemire-style rejection keeps the draw exactly uniform.
        const std::uint64_t limit = (0 - n) % n;
        std::uint64_t x = engine_();
        while (x < limit) {
            x = engine_();
        }
        return x % n;
    }

    std::uint64_t next() { return engine_(); }

    engine_type& engine() { return engine_; }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    engine_type engine_;
};

/// Fisher-Yates shuffle driven by Rng::below, reproducible across standard
/// library implementations (std::shuffle is not).
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace codedfl
