#ifndef NUDGE_ORACLE_HPP
#define NUDGE_ORACLE_HPP

// Exact population quantities of a validated scenario, by enumeration over
// discrete U or piecewise Gauss-Legendre quadrature over continuous U, summed
// over covariate strata. These are the ground truth for estimator tests.

#include "nudge/functional.hpp"
#include "nudge/glim.hpp"

#include <map>
#include <optional>
#include <string>

namespace nudge {

// Which units a target averages over.
enum class Population { All, Treated, Compliers, Nudgeable };

enum class TargetKind {
    MeanContrast,        // E(Y^1 - Y^0 | population)
    CounterfactualMean,  // E(Y^a | population)
    Quantile,            // q-quantile of Y^a | population
    QuantileContrast,    // difference of arm quantiles
    RiskRatio,           // E(Y^1 | .) / E(Y^0 | .)
    OddsRatio,
};

struct CausalTarget {
    TargetKind kind = TargetKind::MeanContrast;
    Population population = Population::Nudgeable;
    int arm = 1;
    double q = 0.5;
    std::optional<std::string> stratum;  // V = L when set, V = {} otherwise

    static CausalTarget make(TargetKind kind, Population pop, int arm = 1, double q = 0.5) {
        return {kind, pop, arm, q, std::nullopt};
    }
    static CausalTarget late() { return make(TargetKind::MeanContrast, Population::Compliers); }
    static CausalTarget nate() { return make(TargetKind::MeanContrast, Population::Nudgeable); }
    static CausalTarget ate() { return make(TargetKind::MeanContrast, Population::All); }
    static CausalTarget att() { return make(TargetKind::MeanContrast, Population::Treated); }
    static CausalTarget mean(int arm, Population pop) { return make(TargetKind::CounterfactualMean, pop, arm); }
    static CausalTarget quantile(int arm, double q, Population pop = Population::Nudgeable) {
        return make(TargetKind::Quantile, pop, arm, q);
    }
    static CausalTarget median_contrast(Population pop = Population::Nudgeable) {
        return make(TargetKind::QuantileContrast, pop);
    }
    static CausalTarget risk_ratio(Population pop = Population::Nudgeable) { return make(TargetKind::RiskRatio, pop); }
    static CausalTarget odds_ratio(Population pop = Population::Nudgeable) { return make(TargetKind::OddsRatio, pop); }

    CausalTarget given(std::string label) const {
        CausalTarget t = *this;
        t.stratum = std::move(label);
        return t;
    }

    // late, nate, ate, att, mean:A[:POP], quantile:A:Q[:POP], median-nte[:POP],
    // risk-ratio[:POP], odds-ratio[:POP]; POP in all|treated|compliers|nudgeable.
    static CausalTarget parse(const std::string& text);
    std::string label() const;
};

std::string_view to_string(Population pop);

// Conditioning level: a stratum label, or the whole population.
using Conditioning = std::optional<std::string>;

double true_target(const ValidatedScenario& s, const CausalTarget& target);

// Population Wald ratio from model primitives.
double exact_wald(const ValidatedScenario& s, const Conditioning& v = std::nullopt);

// Population arm-a Wald ratio
//   [E I(A^1=a) h(Y^a) - E I(A^0=a) h(Y^a)] / [Pr(A^1=a) - Pr(A^0=a)].
double exact_arm_wald(const ValidatedScenario& s, int arm, const Functional& h,
                      const Conditioning& v = std::nullopt);

// E[h(Y^a) | population, v].
double population_mean(const ValidatedScenario& s, int arm, const Functional& h, Population pop,
                       const Conditioning& v = std::nullopt);

struct ConditionReport {
    double null_cov = 0.0;     // COV(Delta_y, pi | N = 1, v)
    double bcs_max_dev = 0.0;  // max |pi(u,l) - N-weighted mean of pi within l|
    bool relevance_ok = true;  // Pr(A^1=1|u,l) != Pr(A^0=1|u,l) at every node
    double nudge_share = 0.0;
    double complier_share = 0.0;
    double defier_share = 0.0;
};

ConditionReport check_conditions(const ValidatedScenario& s, const Conditioning& v = std::nullopt);

// The intent-to-treat difference and its split into a covariance part and a
// NATE part: itt = 2 cov Pr(N=1|v) + nate (co - de).
struct WaldDecomposition {
    double itt = 0.0;  // E(Y^{z=1}|v) - E(Y^{z=0}|v), from E(Y^z|u,l) directly
    double null_cov = 0.0;
    double nudge_share = 0.0;
    double nate = 0.0;
    double complier_share = 0.0;
    double defier_share = 0.0;
    double first_stage = 0.0;  // Pr(A^1=1|v) - Pr(A^0=1|v)

    double covariance_term() const { return 2.0 * null_cov * nudge_share; }
    double nate_term() const { return nate * (complier_share - defier_share); }
};

WaldDecomposition wald_decomposition(const ValidatedScenario& s, const Conditioning& v = std::nullopt);

// |identified estimand - true target|, where the identified estimand is the
// Wald ratio for mean contrasts and the arm-specific Wald functional (or its
// moment-equation root for quantiles) otherwise.
double identified_value(const ValidatedScenario& s, const CausalTarget& target);
double identification_gap(const ValidatedScenario& s, const CausalTarget& target);

}  // namespace nudge

#endif  // NUDGE_ORACLE_HPP
