#include <gtest/gtest.h>

#include <cmath>

#include "codedfl/channel.hpp"
#include "codedfl/random.hpp"

using namespace codedfl;
using channel::ChannelParams;

TEST(Outage, DefaultOperatingPoint) {
    // g = (2^1.2 - 1) / 3 and P_e = 1 - exp(-g / 2), evaluated at 50 digits.
    const ChannelParams params{};
    EXPECT_NEAR(params.threshold(), 0.432465569998, 1e-12);
    EXPECT_NEAR(channel::outage_probability(params), 0.194452239389, 1e-12);
}

TEST(Outage, Limits) {
    EXPECT_GT(channel::outage_probability(ChannelParams{1e300, 0.6, 1.0}), 0.0);
    EXPECT_LT(channel::outage_probability(ChannelParams{1e300, 0.6, 1.0}), 1e-299);
    EXPECT_EQ(channel::outage_probability(ChannelParams{3.0, 0.0, 1.0}), 0.0);
    EXPECT_EQ(channel::outage_probability(ChannelParams{1e-300, 0.6, 1.0}), 1.0);
    double previous = 0.0;
    for (double snr = 100.0; snr > 0.01; snr /= 2.0) {
        const double p = channel::outage_probability(ChannelParams{snr, 0.6, 1.0});
        EXPECT_GT(p, previous);
        previous = p;
    }
}

TEST(Outage, SmallThresholdKeepsPrecision) {
    // 1 - exp(-x) ~ x for tiny x; a naive subtraction would return 0.
    const double p = channel::outage_probability(ChannelParams{1e12, 0.5, 1.0});
    EXPECT_NEAR(p / (1.0 / 1e12 / 2.0), 1.0, 1e-9);
}

TEST(Outage, DecibelConversion) {
    EXPECT_NEAR(channel::db_to_linear(3.0), 1.995262314969, 1e-12);
    EXPECT_DOUBLE_EQ(channel::db_to_linear(0.0), 1.0);
    EXPECT_DOUBLE_EQ(channel::db_to_linear(10.0), 10.0);
    const auto params = ChannelParams::from_snr_db(10.0, 0.6);
    EXPECT_DOUBLE_EQ(params.snr, 10.0);
}

TEST(Outage, InvalidParameters) {
    EXPECT_THROW(channel::outage_probability(ChannelParams{0.0, 0.6, 1.0}), std::invalid_argument);
    EXPECT_THROW(channel::outage_probability(ChannelParams{-1.0, 0.6, 1.0}), std::invalid_argument);
    EXPECT_THROW(channel::outage_probability(ChannelParams{3.0, -0.1, 1.0}), std::invalid_argument);
    EXPECT_THROW(channel::outage_probability(ChannelParams{3.0, 0.6, 0.0}), std::invalid_argument);
    EXPECT_THROW(channel::outage_probability(ChannelParams{std::nan(""), 0.6, 1.0}), std::invalid_argument);
}

TEST(Connectivity, NoOutageIsAllOnes) {
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const auto links = channel::sample_connectivity(5, 0.0, rng);
        const auto full = channel::full_connectivity(5);
        EXPECT_EQ(links.d2d, full.d2d);
        EXPECT_EQ(links.direct, full.direct);
        EXPECT_EQ(links.relay, full.relay);
    }
}

TEST(Connectivity, NearCertainOutageKeepsOnlyDiagonal) {
    Rng rng(2);
    const auto links = channel::sample_connectivity(6, 1.0 - 1e-9, rng);
    for (std::size_t k = 0; k < 6; ++k) {
        for (std::size_t m = 0; m < 6; ++m) {
            EXPECT_EQ(links.d2d[k][m], k == m ? 1 : 0);
        }
        EXPECT_EQ(links.direct[k], 0);
        EXPECT_EQ(links.relay[k], dnc::LinkVector(5, 0));
    }
}

TEST(Connectivity, RejectsInvalidProbability) {
    Rng rng(3);
    EXPECT_THROW(channel::sample_connectivity(3, 1.0, rng), std::invalid_argument);
    EXPECT_THROW(channel::sample_connectivity(3, -0.1, rng), std::invalid_argument);
}

TEST(Connectivity, Shapes) {
    Rng rng(4);
    const auto links = channel::sample_connectivity(4, 0.3, rng);
    EXPECT_EQ(links.clients(), 4u);
    ASSERT_EQ(links.d2d.size(), 4u);
    ASSERT_EQ(links.relay.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(links.d2d[k].size(), 4u);
        EXPECT_EQ(links.relay[k].size(), 3u);
    }
}

TEST(Connectivity, SameSeedSameSequence) {
    Rng a = Rng::stream(9, StreamKind::channel, {1, 2, 3});
    Rng b = Rng::stream(9, StreamKind::channel, {1, 2, 3});
    Rng c = Rng::stream(9, StreamKind::channel, {1, 2, 4});
    bool any_difference = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = channel::sample_connectivity(4, 0.4, a);
        const auto y = channel::sample_connectivity(4, 0.4, b);
        const auto z = channel::sample_connectivity(4, 0.4, c);
        EXPECT_EQ(x.d2d, y.d2d);
        EXPECT_EQ(x.direct, y.direct);
        EXPECT_EQ(x.relay, y.relay);
        any_difference = any_difference || x.d2d != z.d2d || x.direct != z.direct || x.relay != z.relay;
    }
    EXPECT_TRUE(any_difference);
}

namespace {

// All random entries of a realization flattened: 12 off-diagonal d2d,
// 4 direct, 12 relay for M = 4.
std::vector<int> flatten(const channel::ConnectivityRealization& links) {
    std::vector<int> out;
    for (std::size_t k = 0; k < links.clients(); ++k) {
        for (std::size_t m = 0; m < links.clients(); ++m) {
            if (k != m) {
                out.push_back(links.d2d[k][m]);
            }
        }
    }
    for (auto d : links.direct) {
        out.push_back(d);
    }
    for (const auto& r : links.relay) {
        for (auto s : r) {
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace

TEST(Connectivity, BernoulliFrequencies) {
    constexpr std::size_t kDraws = 100000;
    constexpr double p = 0.5;
    Rng rng = Rng::stream(17, StreamKind::monte_carlo);
    std::vector<double> mean(28, 0.0);
    for (std::size_t i = 0; i < kDraws; ++i) {
        const auto s = flatten(channel::sample_connectivity(4, p, rng));
        ASSERT_EQ(s.size(), 28u);
        for (std::size_t j = 0; j < s.size(); ++j) {
            mean[j] += s[j];
        }
    }
    for (std::size_t j = 0; j < mean.size(); ++j) {
        mean[j] /= kDraws;
    }
    for (std::size_t j = 0; j < 12; ++j) {
        EXPECT_NEAR(mean[j], 1.0 - p, 0.005) << "d2d entry " << j;
    }
    // Pooled per entry class: d2d, direct, relay.
    const double sd = std::sqrt(p * (1 - p) / kDraws);
    const std::size_t ranges[4] = {0, 12, 16, 28};
    for (int cls = 0; cls < 3; ++cls) {
        double sum = 0.0;
        for (std::size_t j = ranges[cls]; j < ranges[cls + 1]; ++j) {
            sum += mean[j];
        }
        const double count = static_cast<double>(ranges[cls + 1] - ranges[cls]);
        EXPECT_NEAR(sum / count, 1.0 - p, 3.0 * sd / std::sqrt(count)) << "class " << cls;
    }
}

TEST(Connectivity, EntriesPairwiseUncorrelated) {
    // 378 pairs: with 10^6 draws the sampling error of a correlation is
    // about 0.001, so a 0.01 threshold only trips on real dependence.
    constexpr std::size_t kDraws = 1000000;
    constexpr std::size_t n = 28;
    Rng rng = Rng::stream(19, StreamKind::monte_carlo);
    std::vector<double> sum(n, 0.0);
    std::vector<double> joint(n * n, 0.0);
    for (std::size_t i = 0; i < kDraws; ++i) {
        const auto s = flatten(channel::sample_connectivity(4, 0.3, rng));
        for (std::size_t a = 0; a < n; ++a) {
            if (!s[a]) {
                continue;
            }
            sum[a] += 1;
            for (std::size_t b = a + 1; b < n; ++b) {
                joint[a * n + b] += s[b];
            }
        }
    }
    double worst = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            const double pa = sum[a] / kDraws;
            const double pb = sum[b] / kDraws;
            const double cov = joint[a * n + b] / kDraws - pa * pb;
            worst = std::max(worst, std::abs(cov / std::sqrt(pa * (1 - pa) * pb * (1 - pb))));
        }
    }
    EXPECT_LT(worst, 0.01);
}

TEST(Connectivity, FrequencyAtDefaultOutage) {
    const double p = channel::outage_probability(ChannelParams{});
    constexpr std::size_t kDraws = 100000;
    Rng rng = Rng::stream(18, StreamKind::monte_carlo);
    double d2d = 0, direct = 0, relay = 0;
    for (std::size_t i = 0; i < kDraws; ++i) {
        const auto links = channel::sample_connectivity(3, p, rng);
        d2d += links.d2d[0][1];
        direct += links.direct[2];
        relay += links.relay[1][0];
    }
    const double sd = std::sqrt(p * (1 - p) / kDraws);
    EXPECT_NEAR(d2d / kDraws, 1 - p, 3 * sd);
    EXPECT_NEAR(direct / kDraws, 1 - p, 3 * sd);
    EXPECT_NEAR(relay / kDraws, 1 - p, 3 * sd);
}
