#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "codedfl/random.hpp"

namespace codedfl::theory {

/// p_e^{2M-1}: leading-order probability that the PS cannot see a client.
double client_outage_dominant(std::size_t clients, double p_e);

/**
 * Exact single-attempt probability that client m contributes no nonzero
 * entry to the PS-side matrix: its direct link and its own M-1 relay slots
 * fail, and each other client either missed m's broadcast or lost all of
 * its relay slots.
 *
 *   p^M * (p + (1 - p) p^{M-1})^{M-1}
 */
double client_visibility_outage(std::size_t clients, double p_e);

/// Binomial coefficient, exact for n <= 64.
std::uint64_t binomial(unsigned n, unsigned k);

/// E[1/|W| | W != {}] when each of M clients is absent independently with probability q.
long double kbar_inverse(std::size_t clients, long double q);

/// Same quantity by enumerating all 2^M - 1 non-empty subsets. M <= 24.
long double kbar_inverse_enumerated(std::size_t clients, long double q);

/// kbar_inverse / M.
long double alpha_bar(std::size_t clients, long double q);

/// (M + 1)(1 - p^{2M-1})(1 - p^{M(2M-1)}) / 2.
long double kstar(std::size_t clients, long double p_e);

/// 2 / ((M + 1)(1 - q)(1 - q^M)), an upper bound on kbar_inverse.
long double kbar_inverse_upper(std::size_t clients, long double q);

struct AssumptionConstants {
    double L = 1.0;             ///< smoothness
    double sigma2 = 0.0;        ///< stochastic-gradient variance
    double gap = 0.0;           ///< E[F(theta_0)] - F*
    std::vector<double> D;      ///< per-client dissimilarity D_m, length M
    double b = 1.0;             ///< batch size
    double I = 1.0;             ///< local iterations
    double T = 1.0;             ///< rounds
    /// Sum over rounds and clients of J^2_{m,r}. Use quantization_sum() for a
    /// fixed quantizer.
    double j2_sum = 0.0;

    std::size_t clients() const { return D.size(); }
    /// T * M * j2 for a quantizer with the same J^2 every round.
    static double quantization_sum(double T, std::size_t clients, double j2) {
        return T * static_cast<double>(clients) * j2;
    }
};

struct BoundTerms {
    double optimality_gap = 0.0;
    double quantization = 0.0;
    double gradient_noise = 0.0;
    double dissimilarity = 0.0;
};

struct BoundValue {
    double value = 0.0;
    BoundTerms terms;
    bool condition_holds = true;  ///< I <= (T I)^{1/4} / K*^{3/4}
};

class ConditionViolated : public std::domain_error {
public:
    ConditionViolated(double lhs, double rhs);
    double lhs() const { return lhs_; }
    double rhs() const { return rhs_; }

private:
    double lhs_;
    double rhs_;
};

enum class ConditionPolicy { enforce, report };

/**
 * Convergence bound on (1/T) sum_r E||grad F(theta_r)||^2 for the step size
 * eta = K* / sqrt(8 L T I). The bound only holds when
 * I <= (T I)^{1/4} / K*^{3/4}: under `enforce` a violation throws
 * ConditionViolated, under `report` the value is returned with
 * condition_holds = false.
 */
BoundValue theorem1_bound(const AssumptionConstants& c, double kstar_value,
                          ConditionPolicy policy = ConditionPolicy::enforce);

/// Step size the bound assumes: K* / sqrt(8 L T I).
double theorem1_step_size(const AssumptionConstants& c, double kstar_value);

/// Monte Carlo estimate of one vector quantity: per-coordinate mean and standard error.
struct VectorEstimate {
    std::vector<double> mean;
    std::vector<double> std_error;
};

struct ParticipationEstimate {
    VectorEstimate inverse;         ///< sum_{m in W} delta_m / |W|
    VectorEstimate inverse_square;  ///< sum_{m in W} delta_m / |W|^2
    std::uint64_t draws = 0;        ///< conditioned draws (W non-empty)
};

/**
 * Draws W by removing each client independently with probability q,
 * rejects empty sets, and averages both participation-weighted sums of the
 * rows of `deltas` (M rows of equal length) over `draws` accepted draws.
 */
ParticipationEstimate participation_monte_carlo(const std::vector<std::vector<double>>& deltas, double q,
                                                std::uint64_t draws, Rng& rng);

}  // namespace codedfl::theory
