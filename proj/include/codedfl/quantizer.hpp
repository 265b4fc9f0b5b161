#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "codedfl/dnc_code.hpp"
#include "codedfl/galois.hpp"
#include "codedfl/random.hpp"

namespace codedfl::quant {

/**
 * Uniform knob grid per coordinate: 2^bits levels lower + i * kappa,
 * i = 0 .. 2^bits - 1, with kappa = (upper - lower) / (2^bits - 1).
 */
struct QuantizerSpec {
    unsigned bits = 8;
    std::vector<double> lower;
    std::vector<double> upper;

    /// Same range [-bound, bound] on all `dim` coordinates.
    static QuantizerSpec symmetric(std::size_t dim, double bound, unsigned bits);

    std::size_t dim() const { return lower.size(); }
    std::uint64_t levels() const { return std::uint64_t{1} << bits; }
    double kappa(std::size_t j) const;

    /// Throws std::invalid_argument on bits outside 1..32, length mismatch,
    /// non-finite bounds or upper < lower.
    void validate() const;
};

struct QuantizedUpdate {
    std::vector<std::uint32_t> indices;

    friend bool operator==(const QuantizedUpdate&, const QuantizedUpdate&) = default;
};

/**
 * Stochastic rounding. Each coordinate is clipped to [lower, upper] and
 * rounded up to the next knob with probability equal to its fractional
 * position between knobs, so the reconstruction is unbiased for the clipped
 * value. Consumes exactly one draw per coordinate.
 */
QuantizedUpdate quantize(std::span<const double> values, const QuantizerSpec& spec, Rng& rng);

std::vector<double> dequantize(const QuantizedUpdate& q, const QuantizerSpec& spec);

/// Field symbols needed per coordinate: smallest n with order^n >= 2^bits.
std::size_t digits_per_coordinate(unsigned bits, const gf::GaloisField& field);

/// Writes each index as little-endian base-|field| digits.
dnc::Message to_message(const QuantizedUpdate& q, const QuantizerSpec& spec, const gf::GaloisField& field);

/// Inverse of to_message. Throws std::invalid_argument on a length mismatch
/// or a digit group that encodes an index >= 2^bits.
QuantizedUpdate from_message(const dnc::Message& msg, const QuantizerSpec& spec, const gf::GaloisField& field);

/// J^2 = delta^2 / (2^bits - 1)^2 with delta^2 = (1/4) sum_j (upper_j - lower_j)^2.
/// Bounds E||Q(x) - clip(x)||^2 for every x.
double variance_bound(const QuantizerSpec& spec);

}  // namespace codedfl::quant
