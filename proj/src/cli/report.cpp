#include "codedfl/cli/report.hpp"

#include <cmath>

#include <fmt/format.h>

#include "codedfl/dnc_code.hpp"
#include "codedfl/protocol.hpp"
#include "codedfl/random.hpp"

namespace codedfl::cli {

std::vector<TheoryRow> theory_table(const std::vector<std::size_t>& clients, const std::vector<double>& p_es,
                                    const theory::AssumptionConstants& constants) {
    std::vector<TheoryRow> rows;
    for (std::size_t m : clients) {
        for (double p : p_es) {
            TheoryRow row;
            row.clients = m;
            row.p_e = p;
            row.dominant_outage = theory::client_outage_dominant(m, p);
            row.visibility_outage = theory::client_visibility_outage(m, p);
            row.kbar_inverse = static_cast<double>(theory::kbar_inverse(m, row.dominant_outage));
            row.kstar = static_cast<double>(theory::kstar(m, p));
            theory::AssumptionConstants c = constants;
            c.D.resize(m, c.D.empty() ? 0.0 : c.D.back());
            row.bound = theory::theorem1_bound(c, row.kstar, theory::ConditionPolicy::report);
            rows.push_back(row);
        }
    }
    return rows;
}

void write_theory_table(std::ostream& out, const std::vector<TheoryRow>& rows) {
    out << "M,p_e,dominant_outage,visibility_outage,kbar_inverse,kstar,bound,bound_condition\n";
    for (const auto& r : rows) {
        out << fmt::format("{},{},{:.6e},{:.6e},{:.10f},{:.10f},{:.6e},{}\n", r.clients, r.p_e, r.dominant_outage,
                           r.visibility_outage, r.kbar_inverse, r.kstar, r.bound.value,
                           r.bound.condition_holds ? "holds" : "violated");
    }
}

std::vector<CheckResult> run_verification(const VerifyOptions& options) {
    std::vector<CheckResult> out;
    const gf::GaloisField field(options.field);

    for (std::size_t m = 2; m <= 10 && m * m <= field.order(); ++m) {
        const auto code = dnc::build_encoding_matrix(m, field);
        const auto v = dnc::verify_mds(code, field, options.mds_budget, options.seed);
        out.push_back({fmt::format("mds M={}", m), v.pass,
                       fmt::format("{} subsets{}", v.subsets_checked, v.exhaustive ? " (exhaustive)" : " (sampled)")});
    }
    for (std::size_t m = 2; m <= 3 && m * m <= field.order(); ++m) {
        const auto code = dnc::build_encoding_matrix(m, field);
        const auto v = dnc::check_mask_genericity(code, field);
        out.push_back({fmt::format("mask-genericity M={}", m), v.singular == 0,
                       fmt::format("{} singular of {} masked minors", v.singular, v.minors_checked)});
    }

    for (std::size_t m = 2; m <= 8; ++m) {
        for (double q : {0.1, 0.3, 0.6}) {
            Rng rng = Rng::stream(options.seed, StreamKind::monte_carlo, {m, static_cast<std::uint64_t>(q * 1000)});
            std::vector<std::vector<double>> deltas(m, std::vector<double>(3));
            for (auto& row : deltas) {
                for (double& x : row) {
                    x = 2.0 * rng.uniform() - 1.0;
                }
            }
            const auto est = theory::participation_monte_carlo(deltas, q, options.participation_draws, rng);
            const double abar = static_cast<double>(theory::alpha_bar(m, q));
            double worst = 0.0;
            for (std::size_t j = 0; j < 3; ++j) {
                double sum = 0.0;
                for (const auto& row : deltas) {
                    sum += row[j];
                }
                worst = std::max(worst, std::abs(est.inverse.mean[j] - sum / static_cast<double>(m)) /
                                            est.inverse.std_error[j]);
                worst = std::max(worst, std::abs(est.inverse_square.mean[j] - abar * sum) /
                                            est.inverse_square.std_error[j]);
            }
            out.push_back({fmt::format("participation M={} q={}", m, q), worst <= 3.0,
                           fmt::format("max deviation {:.2f} standard errors", worst)});
        }
    }
    for (std::size_t m = 1; m <= 12; ++m) {
        double worst = 0.0;
        for (double q : {0.0, 0.05, 0.3, 0.6, 0.9}) {
            worst = std::max(worst, static_cast<double>(std::abs(theory::kbar_inverse(m, q) -
                                                                  theory::kbar_inverse_enumerated(m, q))));
        }
        out.push_back({fmt::format("kbar enumeration M={}", m), worst <= 1e-12, fmt::format("max |diff| {:.3e}", worst)});
    }

    for (std::size_t m : {2, 3}) {
        for (double p : {0.2, 0.3}) {
            const auto est = protocol::estimate_client_outage(m, p, 0, options.outage_trials, options.seed, field);
            const double lo = theory::client_outage_dominant(m, p);
            const double rate = est.invisible_rate();
            out.push_back({fmt::format("outage M={} p_e={}", m, p), rate >= lo && rate <= 2.0 * lo,
                           fmt::format("empirical {:.5f} in [{:.5f}, {:.5f}] over {} trials", rate, lo, 2.0 * lo,
                                       est.trials)});
        }
    }
    return out;
}

}  // namespace codedfl::cli
