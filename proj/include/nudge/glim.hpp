#ifndef NUDGE_GLIM_HPP
#define NUDGE_GLIM_HPP

// Generalized latent index (GLIM) treatment-selection scenarios:
//
//   A^z = I(h(z, U) >= eps_z),  h(z, u) = p(z) + u  or  p(z) * u,
//
// with eps_z degenerate at one, Uniform(0,1) or Logistic(0,1), plus an outcome
// model Y^a = m_a(U, L) + noise. Scenarios are validated once and then used by
// the simulator and the oracle.

#include "nudge/dataset.hpp"
#include "nudge/polynomial.hpp"
#include "nudge/quadrature.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nudge {

enum class ThresholdKind { DegenerateOne, Uniform01, Logistic01 };
enum class Coupling { Independent, Common };
enum class LinkKind { Additive, Multiplicative };

struct ThresholdLaw {
    ThresholdKind kind = ThresholdKind::Logistic01;
    Coupling coupling = Coupling::Independent;
};

// p(0), p(1) and Pr(Z = 1) within one covariate stratum.
struct StratumPropensity {
    double p0 = 0.0;
    double p1 = 0.0;
    double assign_prob = 0.5;
};

struct SupportPoint {
    double value = 0.0;
    double prob = 0.0;
};

// Law of the unmeasured confounder U (independent of L).
struct ConfounderLaw {
    enum class Kind { Discrete, UniformInterval };
    Kind kind = Kind::Discrete;
    std::vector<SupportPoint> support;
    double lo = 0.0;
    double hi = 1.0;

    static ConfounderLaw discrete(std::vector<SupportPoint> support) {
        return {Kind::Discrete, std::move(support), 0.0, 1.0};
    }
    static ConfounderLaw uniform(double lo, double hi) { return {Kind::UniformInterval, {}, lo, hi}; }

    // Smallest and largest supported u.
    std::pair<double, double> range() const;
};

struct Stratum {
    std::string label;
    double prob = 1.0;
};

struct GlimSpec {
    ThresholdLaw threshold;
    LinkKind link = LinkKind::Additive;
    std::vector<StratumPropensity> propensity;  // aligned with covariate_law
    ConfounderLaw confounder;
    std::vector<Stratum> covariate_law{{"all", 1.0}};
};

// m_a(u, l) are polynomials in u, one per stratum. In binary mode m_a is
// Pr(Y^a = 1 | u, l) and the noise must be zero.
struct OutcomeSpec {
    std::vector<Polynomial> m0;
    std::vector<Polynomial> m1;
    double noise_sd = 0.0;
    bool binary_mode = false;

    double mean(int arm, double u, std::size_t stratum) const {
        return arm == 1 ? m1[stratum](u) : m0[stratum](u);
    }
};

struct ScenarioSpec {
    std::string name;
    GlimSpec glim;
    OutcomeSpec outcome;

    std::size_t stratum_index(const std::string& label) const;
};

class ValidatedScenario;
ValidatedScenario validate_spec(ScenarioSpec spec);

// A scenario whose invariants have been checked. Only validate_spec makes one.
class ValidatedScenario {
public:
    const ScenarioSpec& spec() const { return spec_; }
    const ScenarioSpec* operator->() const { return &spec_; }
    std::size_t strata() const { return spec_.glim.covariate_law.size(); }

    // h(z, u) within the stratum.
    double index(int z, double u, std::size_t stratum) const;

    // Quadrature points for U in one stratum: the discrete support, or Gauss
    // nodes cut at every u where a potential-treatment probability has a kink
    // or jump. `extra_breaks` adds further cut points.
    WeightedPoints confounder_nodes(std::size_t stratum, std::span<const double> extra_breaks = {}) const;

private:
    explicit ValidatedScenario(ScenarioSpec spec) : spec_(std::move(spec)) {}
    friend ValidatedScenario validate_spec(ScenarioSpec spec);

    ScenarioSpec spec_;
};

// Pr(eps <= h) for the threshold law.
double threshold_cdf(ThresholdKind kind, double h);

double potential_treatment_prob(const ValidatedScenario& s, int z, double u, std::size_t stratum);

struct ComplianceProbs {
    double nt = 0.0;
    double at = 0.0;
    double de = 0.0;
    double co = 0.0;

    double nudge() const { return co + de; }
};

ComplianceProbs compliance_distribution(const ValidatedScenario& s, double u, std::size_t stratum);

enum class ComplianceType : std::uint8_t { NeverTaker, AlwaysTaker, Defier, Complier };

constexpr ComplianceType compliance_type(int a0, int a1) {
    if (a0 == a1) return a0 == 0 ? ComplianceType::NeverTaker : ComplianceType::AlwaysTaker;
    return a0 == 1 ? ComplianceType::Defier : ComplianceType::Complier;
}

std::string_view to_string(ComplianceType type);
std::optional<ComplianceType> parse_compliance_type(std::string_view text);

struct PanelRow {
    double u = 0.0;
    std::size_t stratum = 0;
    int z = 0;
    int a0 = 0;
    int a1 = 0;
    double y0 = 0.0;
    double y1 = 0.0;
    ComplianceType ctype = ComplianceType::NeverTaker;
    bool nudge = false;

    friend bool operator==(const PanelRow&, const PanelRow&) = default;
};

struct CounterfactualPanel {
    std::vector<std::string> strata;  // labels indexed by PanelRow::stratum
    std::vector<PanelRow> rows;

    friend bool operator==(const CounterfactualPanel&, const CounterfactualPanel&) = default;
};

// n i.i.d. units. Row i draws from its own stream derived from (seed, i), so
// the panel does not depend on `workers`.
CounterfactualPanel simulate_panel(const ValidatedScenario& s, std::size_t n, std::uint64_t seed,
                                   std::size_t workers = 1);

// Applies A = Z a1 + (1 - Z) a0 and Y = A y1 + (1 - A) y0 and drops latent
// columns. The stratum becomes covariate column "l".
ObservedDataset observe(const CounterfactualPanel& panel);

}  // namespace nudge

#endif  // NUDGE_GLIM_HPP
