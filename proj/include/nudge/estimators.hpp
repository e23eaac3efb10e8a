#ifndef NUDGE_ESTIMATORS_HPP
#define NUDGE_ESTIMATORS_HPP

// Plug-in estimators of Wald-type functionals from observed (Z, A, Y, L).
// Covariate adjustment is exact stratification: E(f^z | V = v) is the mean of
// f among Z = z rows in each L-cell, averaged over the empirical law of L
// given V = v (the g-formula with empirical means).

#include "nudge/dataset.hpp"
#include "nudge/functional.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nudge {

struct EstimatorOptions {
    double floor = 1e-8;            // |first stage| below this is an error
    double weak_threshold = 0.01;   // ... below this, a warning
};

struct StratumEstimate {
    double point = std::numeric_limits<double>::quiet_NaN();
    double first_stage = std::numeric_limits<double>::quiet_NaN();
    Eigen::Index n = 0;
};

struct BootstrapSummary {
    std::size_t replicates = 0;
    std::size_t failures = 0;
    std::uint64_t seed = 0;
    double ci_level = 0.95;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct EstimateReport {
    std::string estimand;
    double point = std::numeric_limits<double>::quiet_NaN();
    double first_stage = std::numeric_limits<double>::quiet_NaN();
    Eigen::Index n = 0;
    std::map<std::string, StratumEstimate> per_stratum;
    std::vector<std::string> warnings;
    std::optional<BootstrapSummary> bootstrap;
};

// Fréchet-Hoeffding bounds on compliance shares given the margins
// pi1 = Pr(A^1 = 1 | v) and pi0 = Pr(A^0 = 1 | v).
struct ShareBounds {
    double complier_lo = 0.0, complier_hi = 0.0;
    double defier_lo = 0.0, defier_hi = 0.0;
    double nudge_lo = 0.0, nudge_hi = 0.0;
    double pi1 = 0.0, pi0 = 0.0;
};

ShareBounds frechet_from_margins(double pi1, double pi0);

struct BoundsReport {
    Eigen::Index n = 0;
    std::map<std::string, ShareBounds> levels;  // "marginal" plus one entry per v
};

struct FirstStageDiagnostic {
    double pi1 = std::numeric_limits<double>::quiet_NaN();
    double pi0 = std::numeric_limits<double>::quiet_NaN();
    double denominator = std::numeric_limits<double>::quiet_NaN();
    Eigen::Index n = 0, n1 = 0, n0 = 0;
    bool weak = true;
};

// Label used for the unconditional level in per-level maps.
inline const std::string kMarginal = "marginal";

EstimateReport wald_marginal(const ObservedDataset& data, const EstimatorOptions& opts = {});

EstimateReport wald_conditional(const ObservedDataset& data, const std::vector<std::string>& v,
                                const EstimatorOptions& opts = {});

EstimateReport arm_wald(const ObservedDataset& data, int arm, const Functional& h,
                        const std::vector<std::string>& v = {}, const EstimatorOptions& opts = {});

enum class ContrastScale { Difference, Ratio, OddsRatio };

std::string_view to_string(ContrastScale scale);

EstimateReport effect_contrast(const ObservedDataset& data, ContrastScale scale,
                               const std::vector<std::string>& v = {}, const EstimatorOptions& opts = {});

// Median of Y^a among the nudge-able: the smallest observed y where the
// plug-in moment arm_wald(a, I(y <= c)) - 1/2 crosses from negative to
// nonnegative.
EstimateReport arm_median(const ObservedDataset& data, int arm, const std::vector<std::string>& v = {},
                          const EstimatorOptions& opts = {});

// arm_median(1) - arm_median(0).
EstimateReport median_nte(const ObservedDataset& data, const std::vector<std::string>& v = {},
                          const EstimatorOptions& opts = {});

BoundsReport frechet_bounds(const ObservedDataset& data, const std::vector<std::string>& v = {});

// Unadjusted first-stage strength per level of V ("marginal" always present).
std::map<std::string, FirstStageDiagnostic> first_stage_diagnostics(const ObservedDataset& data,
                                                                    const std::vector<std::string>& v = {},
                                                                    const EstimatorOptions& opts = {});

inline constexpr std::size_t kMaxMedianGrid = 1'000'000;

enum class Estimand { WaldMarginal, Wald, ArmWald, ArmMedian, MedianNte, Contrast };

std::string_view to_string(Estimand e);

struct EstimatorSpec {
    Estimand estimand = Estimand::Wald;
    int arm = 1;
    Functional h = Functional::identity();
    std::vector<std::string> v;
    ContrastScale scale = ContrastScale::Difference;
    EstimatorOptions options;

    std::string label() const;
};

EstimateReport estimate(const ObservedDataset& data, const EstimatorSpec& spec);

}  // namespace nudge

#endif  // NUDGE_ESTIMATORS_HPP
