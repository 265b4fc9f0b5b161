#include "codedfl/theory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace codedfl::theory {

namespace {

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p < 1.0)) {
        throw std::invalid_argument(fmt::format("{} must lie in [0, 1), got {}", name, p));
    }
}

void check_clients(std::size_t clients, std::size_t max) {
    if (clients < 1 || clients > max) {
        throw std::invalid_argument(fmt::format("client count must be in 1..{}, got {}", max, clients));
    }
}

}  // namespace

double client_outage_dominant(std::size_t clients, double p_e) {
    check_clients(clients, 1U << 20);
    check_probability(p_e, "p_e");
    return std::pow(p_e, static_cast<double>(2 * clients - 1));
}

double client_visibility_outage(std::size_t clients, double p_e) {
    check_clients(clients, 1U << 20);
    check_probability(p_e, "p_e");
    const auto m = static_cast<double>(clients);
    const double relay_lost = p_e + (1.0 - p_e) * std::pow(p_e, m - 1.0);
    return std::pow(p_e, m) * std::pow(relay_lost, m - 1.0);
}

std::uint64_t binomial(unsigned n, unsigned k) {
    if (n > 64) {
        throw std::invalid_argument(fmt::format("binomial: n = {} exceeds 64", n));
    }
    if (k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    std::uint64_t result = 1;
    for (unsigned i = 1; i <= k; ++i) {
        // result * (n - k + i) is divisible by i; split the gcd to stay in range.
        const std::uint64_t g = std::gcd(result, std::uint64_t{i});
        result = (result / g) * ((n - k + i) / (i / g));
    }
    return result;
}

long double kbar_inverse(std::size_t clients, long double q) {
    check_clients(clients, 64);
    check_probability(static_cast<double>(q), "q");
    const auto m = static_cast<unsigned>(clients);
    long double sum = 0.0L;
    for (unsigned v = 1; v <= m; ++v) {
        sum += static_cast<long double>(binomial(m, v)) * std::pow(1.0L - q, static_cast<long double>(v)) *
               std::pow(q, static_cast<long double>(m - v)) / static_cast<long double>(v);
    }
    return sum / (1.0L - std::pow(q, static_cast<long double>(m)));
}

long double kbar_inverse_enumerated(std::size_t clients, long double q) {
    check_clients(clients, 24);
    check_probability(static_cast<double>(q), "q");
    long double num = 0.0L;
    long double den = 0.0L;
    for (std::uint32_t set = 1; set < (std::uint32_t{1} << clients); ++set) {
        long double prob = 1.0L;
        for (std::size_t m = 0; m < clients; ++m) {
            prob *= ((set >> m) & 1U) != 0 ? 1.0L - q : q;
        }
        num += prob / static_cast<long double>(std::popcount(set));
        den += prob;
    }
    return num / den;
}

long double alpha_bar(std::size_t clients, long double q) {
    return kbar_inverse(clients, q) / static_cast<long double>(clients);
}

long double kstar(std::size_t clients, long double p_e) {
    check_clients(clients, 1U << 20);
    check_probability(static_cast<double>(p_e), "p_e");
    const auto m = static_cast<long double>(clients);
    return (m + 1.0L) * (1.0L - std::pow(p_e, 2.0L * m - 1.0L)) * (1.0L - std::pow(p_e, m * (2.0L * m - 1.0L))) /
           2.0L;
}

long double kbar_inverse_upper(std::size_t clients, long double q) {
    check_clients(clients, 1U << 20);
    check_probability(static_cast<double>(q), "q");
    const auto m = static_cast<long double>(clients);
    return 2.0L / ((m + 1.0L) * (1.0L - q) * (1.0L - std::pow(q, m)));
}

ConditionViolated::ConditionViolated(double lhs, double rhs)
    : std::domain_error(fmt::format("step-size condition I <= (TI)^(1/4) / K*^(3/4) fails: {} > {}", lhs, rhs)),
      lhs_(lhs),
      rhs_(rhs) {}

double theorem1_step_size(const AssumptionConstants& c, double kstar_value) {
    return kstar_value / std::sqrt(8.0 * c.L * c.T * c.I);
}

BoundValue theorem1_bound(const AssumptionConstants& c, double kstar_value, ConditionPolicy policy) {
    if (!(c.L > 0.0) || c.sigma2 < 0.0 || c.gap < 0.0 || !(c.b > 0.0) || !(c.I > 0.0) || !(c.T > 0.0) ||
        c.j2_sum < 0.0 || !(kstar_value > 0.0) || c.D.empty()) {
        throw std::invalid_argument("theorem1_bound: constants must be non-negative with L, b, I, T, K* > 0 and D non-empty");
    }
    const double ti = c.T * c.I;
    const double tik = ti * kstar_value;
    const double rhs = std::pow(ti, 0.25) / std::pow(kstar_value, 0.75);

    BoundValue out;
    out.condition_holds = c.I <= rhs;
    if (!out.condition_holds && policy == ConditionPolicy::enforce) {
        throw ConditionViolated(c.I, rhs);
    }

    double d2 = 0.0;
    for (double d : c.D) {
        if (d < 0.0) {
            throw std::invalid_argument("theorem1_bound: negative dissimilarity");
        }
        d2 += d * d;
    }
    d2 /= static_cast<double>(c.D.size());

    const double sqrt_tik = std::sqrt(tik);
    const double tik34 = std::pow(tik, 0.75);
    out.terms.optimality_gap = 496.0 * c.L / (11.0 * sqrt_tik) * c.gap;
    out.terms.quantization =
        31.0 / (88.0 * std::pow(ti, 1.5) * std::sqrt(kstar_value)) * c.j2_sum / static_cast<double>(c.D.size());
    out.terms.gradient_noise = (39.0 / (88.0 * sqrt_tik) + 1.0 / (88.0 * tik34)) * c.sigma2 / c.b;
    out.terms.dissimilarity = (4.0 / (11.0 * sqrt_tik) + 1.0 / (22.0 * tik34) +
                               31.0 / (22.0 * std::pow(ti, 0.25) * std::pow(kstar_value, 1.25))) *
                              d2;
    out.value = out.terms.optimality_gap + out.terms.quantization + out.terms.gradient_noise + out.terms.dissimilarity;
    return out;
}

ParticipationEstimate participation_monte_carlo(const std::vector<std::vector<double>>& deltas, double q,
                                                std::uint64_t draws, Rng& rng) {
    check_probability(q, "q");
    const std::size_t m = deltas.size();
    if (m == 0) {
        throw std::invalid_argument("participation_monte_carlo: no clients");
    }
    const std::size_t d = deltas.front().size();
    for (const auto& row : deltas) {
        if (row.size() != d) {
            throw std::invalid_argument("participation_monte_carlo: rows differ in length");
        }
    }
    std::vector<double> sum1(d, 0.0), sq1(d, 0.0), sum2(d, 0.0), sq2(d, 0.0);
    std::vector<double> v1(d), v2(d);
    std::vector<std::size_t> present;
    for (std::uint64_t n = 0; n < draws;) {
        present.clear();
        for (std::size_t i = 0; i < m; ++i) {
            if (!rng.bernoulli(q)) {
                present.push_back(i);
            }
        }
        if (present.empty()) {
            continue;
        }
        ++n;
        const auto w = static_cast<double>(present.size());
        std::fill(v1.begin(), v1.end(), 0.0);
        for (std::size_t i : present) {
            for (std::size_t j = 0; j < d; ++j) {
                v1[j] += deltas[i][j];
            }
        }
        for (std::size_t j = 0; j < d; ++j) {
            v2[j] = v1[j] / (w * w);
            v1[j] /= w;
            sum1[j] += v1[j];
            sq1[j] += v1[j] * v1[j];
            sum2[j] += v2[j];
            sq2[j] += v2[j] * v2[j];
        }
    }
    ParticipationEstimate out;
    out.draws = draws;
    const auto finish = [&](const std::vector<double>& s, const std::vector<double>& sq, VectorEstimate& e) {
        const auto n = static_cast<double>(draws);
        e.mean.resize(d);
        e.std_error.resize(d);
        for (std::size_t j = 0; j < d; ++j) {
            const double mean = s[j] / n;
            const double var = n > 1 ? std::max(0.0, (sq[j] - n * mean * mean) / (n - 1.0)) : 0.0;
            e.mean[j] = mean;
            e.std_error[j] = std::sqrt(var / n);
        }
    };
    finish(sum1, sq1, out.inverse);
    finish(sum2, sq2, out.inverse_square);
    return out;
}

}  // namespace codedfl::theory
