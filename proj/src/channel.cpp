#include "codedfl/channel.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace codedfl::channel {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

ChannelParams ChannelParams::from_snr_db(double snr_db, double rate, double sigma2) {
    return ChannelParams{db_to_linear(snr_db), rate, sigma2};
}

void ChannelParams::validate() const {
    if (!(snr > 0.0) || !(rate >= 0.0) || !(sigma2 > 0.0) || !std::isfinite(snr) || !std::isfinite(rate) ||
        !std::isfinite(sigma2)) {
        throw std::invalid_argument(
            fmt::format("channel parameters need snr > 0, rate >= 0, sigma2 > 0 (got {}, {}, {})", snr, rate, sigma2));
    }
}

double ChannelParams::threshold() const { return (std::exp2(2.0 * rate) - 1.0) / snr; }

double outage_probability(const ChannelParams& params) {
    params.validate();
    return -std::expm1(-params.threshold() / (2.0 * params.sigma2));
}

ConnectivityRealization sample_connectivity(std::size_t clients, double p_e, Rng& rng) {
    if (!(p_e >= 0.0 && p_e < 1.0)) {
        throw std::invalid_argument(fmt::format("outage probability must lie in [0, 1), got {}", p_e));
    }
    ConnectivityRealization out;
    out.d2d.assign(clients, dnc::LinkVector(clients, 1));
    for (std::size_t k = 0; k < clients; ++k) {
        for (std::size_t m = 0; m < clients; ++m) {
            if (k != m) {
                out.d2d[k][m] = rng.bernoulli(p_e) ? 0 : 1;
            }
        }
    }
    out.direct.resize(clients);
    for (auto& d : out.direct) {
        d = rng.bernoulli(p_e) ? 0 : 1;
    }
    const std::size_t width = clients == 0 ? 0 : clients - 1;
    out.relay.assign(clients, dnc::LinkVector(width));
    for (auto& slots : out.relay) {
        for (auto& s : slots) {
            s = rng.bernoulli(p_e) ? 0 : 1;
        }
    }
    return out;
}

ConnectivityRealization full_connectivity(std::size_t clients) {
    ConnectivityRealization out;
    out.d2d.assign(clients, dnc::LinkVector(clients, 1));
    out.direct.assign(clients, 1);
    out.relay.assign(clients, dnc::LinkVector(clients == 0 ? 0 : clients - 1, 1));
    return out;
}

}  // namespace codedfl::channel
