#pragma once

#include <cstddef>
#include <vector>

#include "codedfl/dnc_code.hpp"
#include "codedfl/random.hpp"

namespace codedfl::channel {

/// Rayleigh block-fading link: a transmission at rate R fails when the
/// channel gain drops below g = (2^{2R} - 1) / SNR.
struct ChannelParams {
    double snr = 3.0;  ///< linear power ratio
    double rate = 0.6; ///< bits per channel use
    double sigma2 = 1.0;

    static ChannelParams from_snr_db(double snr_db, double rate, double sigma2 = 1.0);

    /// Throws std::invalid_argument unless snr > 0, rate >= 0, sigma2 > 0.
    void validate() const;
    double threshold() const;
};

double db_to_linear(double db);

/// 1 - exp(-g / (2 sigma^2)).
double outage_probability(const ChannelParams& params);

/// One round's link draws, 1 = delivered.
struct ConnectivityRealization {
    std::vector<dnc::LinkVector> d2d;    ///< d2d[k][m]: client k decoded client m's slot-1 broadcast; diagonal 1
    dnc::LinkVector direct;              ///< slot-1 uplink of each client
    std::vector<dnc::LinkVector> relay; ///< relay[m][s]: relay codeword s of client m reached the PS

    std::size_t clients() const { return direct.size(); }
};

/**
 * Draws every off-diagonal D2D link, every direct uplink and every relay
 * uplink as an independent Bernoulli(1 - p_e). Order of draws: d2d row by
 * row, then direct, then relay client by client.
 */
ConnectivityRealization sample_connectivity(std::size_t clients, double p_e, Rng& rng);

/// Realization with every link up.
ConnectivityRealization full_connectivity(std::size_t clients);

}  // namespace codedfl::channel
