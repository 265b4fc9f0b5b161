#include "codedfl/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace codedfl::quant {

QuantizerSpec QuantizerSpec::symmetric(std::size_t dim, double bound, unsigned bits) {
    QuantizerSpec spec;
    spec.bits = bits;
    spec.lower.assign(dim, -bound);
    spec.upper.assign(dim, bound);
    spec.validate();
    return spec;
}

double QuantizerSpec::kappa(std::size_t j) const {
    return (upper[j] - lower[j]) / static_cast<double>(levels() - 1);
}

void QuantizerSpec::validate() const {
    if (bits < 1 || bits > 32) {
        throw std::invalid_argument(fmt::format("quantizer bits must be in 1..32, got {}", bits));
    }
    if (lower.size() != upper.size()) {
        throw std::invalid_argument(
            fmt::format("quantizer bounds differ in length ({} vs {})", lower.size(), upper.size()));
    }
    for (std::size_t j = 0; j < lower.size(); ++j) {
        if (!std::isfinite(lower[j]) || !std::isfinite(upper[j]) || upper[j] < lower[j]) {
            throw std::invalid_argument(
                fmt::format("quantizer range {} is [{}, {}]", j, lower[j], upper[j]));
        }
    }
}

QuantizedUpdate quantize(std::span<const double> values, const QuantizerSpec& spec, Rng& rng) {
    if (values.size() != spec.dim()) {
        throw std::invalid_argument(
            fmt::format("quantize: {} values for a {}-dimensional quantizer", values.size(), spec.dim()));
    }
    const auto top = static_cast<double>(spec.levels() - 1);
    QuantizedUpdate q;
    q.indices.resize(values.size());
    for (std::size_t j = 0; j < values.size(); ++j) {
        const double u = rng.uniform();
        const double k = spec.kappa(j);
        if (!(k > 0.0)) {
            q.indices[j] = 0;
            continue;
        }
        const double x = std::clamp(values[j], spec.lower[j], spec.upper[j]);
        const double t = std::min((x - spec.lower[j]) / k, top);
        const double floor_t = std::floor(t);
        const double frac = t - floor_t;
        q.indices[j] = static_cast<std::uint32_t>(floor_t) + (u < frac ? 1U : 0U);
    }
    return q;
}

std::vector<double> dequantize(const QuantizedUpdate& q, const QuantizerSpec& spec) {
    if (q.indices.size() != spec.dim()) {
        throw std::invalid_argument(
            fmt::format("dequantize: {} indices for a {}-dimensional quantizer", q.indices.size(), spec.dim()));
    }
    std::vector<double> out(q.indices.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = spec.lower[j] + static_cast<double>(q.indices[j]) * spec.kappa(j);
    }
    return out;
}

std::size_t digits_per_coordinate(unsigned bits, const gf::GaloisField& field) {
    const std::uint64_t needed = std::uint64_t{1} << bits;
    std::size_t n = 1;
    // order^n can exceed 64 bits only after it has passed `needed`.
    for (std::uint64_t reach = field.order(); reach < needed; reach *= field.order()) {
        ++n;
    }
    return n;
}

dnc::Message to_message(const QuantizedUpdate& q, const QuantizerSpec& spec, const gf::GaloisField& field) {
    const std::size_t per = digits_per_coordinate(spec.bits, field);
    const std::uint64_t base = field.order();
    dnc::Message msg;
    msg.symbols.reserve(q.indices.size() * per);
    for (std::uint32_t index : q.indices) {
        if (index >= spec.levels()) {
            throw std::invalid_argument(fmt::format("index {} exceeds {} levels", index, spec.levels()));
        }
        std::uint64_t rest = index;
        for (std::size_t i = 0; i < per; ++i) {
            msg.symbols.push_back(gf::Symbol(static_cast<std::uint32_t>(rest % base)));
            rest /= base;
        }
    }
    return msg;
}

QuantizedUpdate from_message(const dnc::Message& msg, const QuantizerSpec& spec, const gf::GaloisField& field) {
    const std::size_t per = digits_per_coordinate(spec.bits, field);
    if (msg.symbols.size() != spec.dim() * per) {
        throw std::invalid_argument(fmt::format("message has {} symbols, expected {} ({} per coordinate)",
                                                msg.symbols.size(), spec.dim() * per, per));
    }
    const std::uint64_t base = field.order();
    QuantizedUpdate q;
    q.indices.resize(spec.dim());
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        // Accumulate most significant digit first; stop early once past the level count.
        std::uint64_t value = 0;
        for (std::size_t i = per; i-- > 0;) {
            const gf::Symbol s = msg.symbols[j * per + i];
            if (!field.contains(s)) {
                throw std::invalid_argument(fmt::format("symbol {} is not in {}", s.value(), field.spec().describe()));
            }
            value = value * base + s.value();
            if (value >= spec.levels()) {
                throw std::invalid_argument(fmt::format("coordinate {} decodes past {} levels", j, spec.levels()));
            }
        }
        q.indices[j] = static_cast<std::uint32_t>(value);
    }
    return q;
}

double variance_bound(const QuantizerSpec& spec) {
    spec.validate();
    double delta2 = 0.0;
    for (std::size_t j = 0; j < spec.dim(); ++j) {
        const double range = spec.upper[j] - spec.lower[j];
        delta2 += range * range;
    }
    delta2 /= 4.0;
    const auto intervals = static_cast<double>(spec.levels() - 1);
    return delta2 / (intervals * intervals);
}

}  // namespace codedfl::quant
