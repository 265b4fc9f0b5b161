#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "codedfl/galois.hpp"
#include "codedfl/theory.hpp"

namespace codedfl::cli {

struct TheoryRow {
    std::size_t clients = 0;
    double p_e = 0.0;
    double dominant_outage = 0.0;    ///< p_e^{2M-1}
    double visibility_outage = 0.0;  ///< exact single-attempt probability
    double kbar_inverse = 0.0;       ///< at q = p_e^{2M-1}
    double kstar = 0.0;
    theory::BoundValue bound;
};

/// One row per (M, p_e); the bound uses `constants` with D resized to M and
/// is reported even when its step-size condition fails.
std::vector<TheoryRow> theory_table(const std::vector<std::size_t>& clients, const std::vector<double>& p_es,
                                    const theory::AssumptionConstants& constants);

void write_theory_table(std::ostream& out, const std::vector<TheoryRow>& rows);

struct VerifyOptions {
    std::uint64_t seed = 1;
    std::uint64_t mds_budget = 10'000;
    std::uint64_t participation_draws = 100'000;
    std::uint64_t outage_trials = 200'000;
    gf::FieldSpec field;
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// MDS property, mask genericity, participation identities and outage dominance.
std::vector<CheckResult> run_verification(const VerifyOptions& options);

}  // namespace codedfl::cli
