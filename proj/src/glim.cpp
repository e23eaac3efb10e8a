#include "nudge/glim.hpp"

#include "nudge/error.hpp"
#include "nudge/math.hpp"
#include "nudge/parallel.hpp"
#include "nudge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace nudge {

std::string_view to_string(ComplianceType type) {
    switch (type) {
        case ComplianceType::NeverTaker: return "nt";
        case ComplianceType::AlwaysTaker: return "at";
        case ComplianceType::Defier: return "de";
        case ComplianceType::Complier: return "co";
    }
    return "?";
}

std::optional<ComplianceType> parse_compliance_type(std::string_view text) {
    if (text == "nt") return ComplianceType::NeverTaker;
    if (text == "at") return ComplianceType::AlwaysTaker;
    if (text == "de") return ComplianceType::Defier;
    if (text == "co") return ComplianceType::Complier;
    return std::nullopt;
}

std::pair<double, double> ConfounderLaw::range() const {
    if (kind == Kind::UniformInterval) return {lo, hi};
    double mn = support.front().value, mx = mn;
    for (const auto& s : support) {
        mn = std::min(mn, s.value);
        mx = std::max(mx, s.value);
    }
    return {mn, mx};
}

std::size_t ScenarioSpec::stratum_index(const std::string& label) const {
    const auto& law = glim.covariate_law;
    for (std::size_t k = 0; k < law.size(); ++k)
        if (law[k].label == label) return k;
    throw Error(ErrorKind::UndefinedTarget, "no stratum labelled '" + label + "'", label);
}

double threshold_cdf(ThresholdKind kind, double h) {
    switch (kind) {
        case ThresholdKind::DegenerateOne: return h >= 1.0 ? 1.0 : 0.0;
        case ThresholdKind::Uniform01: return std::clamp(h, 0.0, 1.0);
        case ThresholdKind::Logistic01: return expit(h);
    }
    return 0.0;
}

double ValidatedScenario::index(int z, double u, std::size_t stratum) const {
    const auto& p = spec_.glim.propensity[stratum];
    const double pz = z == 1 ? p.p1 : p.p0;
    return spec_.glim.link == LinkKind::Additive ? pz + u : pz * u;
}

WeightedPoints ValidatedScenario::confounder_nodes(std::size_t stratum,
                                                   std::span<const double> extra_breaks) const {
    const auto& law = spec_.glim.confounder;
    if (law.kind == ConfounderLaw::Kind::Discrete) {
        WeightedPoints out;
        for (const auto& s : law.support) {
            out.points.push_back(s.value);
            out.weights.push_back(s.prob);
        }
        return out;
    }
    // u where h(z, u) hits 0 or 1 (clamp kinks and the degenerate jump), and
    // u = 0 where multiplicative indices cross.
    std::vector<double> breaks(extra_breaks.begin(), extra_breaks.end());
    const auto& p = spec_.glim.propensity[stratum];
    for (double pz : {p.p0, p.p1}) {
        if (spec_.glim.link == LinkKind::Additive) {
            breaks.push_back(-pz);
            breaks.push_back(1.0 - pz);
        } else {
            breaks.push_back(0.0);
            if (pz != 0.0) breaks.push_back(1.0 / pz);
        }
    }
    return uniform_nodes(law.lo, law.hi, breaks);
}

double potential_treatment_prob(const ValidatedScenario& s, int z, double u, std::size_t stratum) {
    return threshold_cdf(s->glim.threshold.kind, s.index(z, u, stratum));
}

ComplianceProbs compliance_distribution(const ValidatedScenario& s, double u, std::size_t stratum) {
    const double f0 = potential_treatment_prob(s, 0, u, stratum);
    const double f1 = potential_treatment_prob(s, 1, u, stratum);
    if (s->glim.threshold.coupling == Coupling::Independent)
        return {(1.0 - f0) * (1.0 - f1), f0 * f1, f0 * (1.0 - f1), (1.0 - f0) * f1};
    // One shared threshold: A^0 = 0, A^1 = 1 iff h(0,u) < eps <= h(1,u).
    return {1.0 - std::max(f0, f1), std::min(f0, f1), std::max(0.0, f0 - f1), std::max(0.0, f1 - f0)};
}

namespace {

bool finite(double x) { return std::isfinite(x); }

void check_probability_vector(double sum, const std::string& path, ErrorKind kind) {
    if (std::abs(sum - 1.0) > 1e-12)
        throw Error(kind, "probabilities sum to " + std::to_string(sum) + ", not 1", path);
}

// Range of a polynomial over the confounder support.
std::pair<double, double> polynomial_range(const Polynomial& m, const ConfounderLaw& law) {
    std::vector<double> at;
    if (law.kind == ConfounderLaw::Kind::Discrete) {
        for (const auto& s : law.support) at.push_back(m(s.value));
    } else {
        at = {m(law.lo), m(law.hi)};
        for (double c : m.critical_points(law.lo, law.hi)) at.push_back(m(c));
    }
    const auto [mn, mx] = std::minmax_element(at.begin(), at.end());
    return {*mn, *mx};
}

}  // namespace

ValidatedScenario validate_spec(ScenarioSpec spec) {
    auto& glim = spec.glim;
    auto& law = glim.covariate_law;
    if (law.empty()) throw Error(ErrorKind::InvalidSpec, "covariate law is empty", "/glim/covariate_law");
    {
        double total = 0.0;
        std::set<std::string> seen;
        for (std::size_t k = 0; k < law.size(); ++k) {
            const std::string path = "/glim/covariate_law/" + std::to_string(k);
            if (law[k].label.empty()) throw Error(ErrorKind::InvalidSpec, "empty stratum label", path);
            if (!seen.insert(law[k].label).second)
                throw Error(ErrorKind::InvalidSpec, "duplicate stratum label '" + law[k].label + "'", path);
            if (!finite(law[k].prob) || law[k].prob < 0.0)
                throw Error(ErrorKind::InvalidSpec, "stratum probability must be >= 0", path + "/prob");
            total += law[k].prob;
        }
        check_probability_vector(total, "/glim/covariate_law", ErrorKind::InvalidSpec);
    }

    const std::size_t strata = law.size();
    if (glim.propensity.size() != strata)
        throw Error(ErrorKind::InvalidSpec, "propensity must give one entry per stratum", "/glim/propensity");
    for (std::size_t k = 0; k < strata; ++k) {
        const auto& p = glim.propensity[k];
        const std::string path = "/glim/propensity";
        if (!finite(p.p0)) throw Error(ErrorKind::InvalidSpec, "p0 must be finite", path + "/p0");
        if (!finite(p.p1)) throw Error(ErrorKind::InvalidSpec, "p1 must be finite", path + "/p1");
        if (!(p.assign_prob > 0.0 && p.assign_prob < 1.0))
            throw Error(ErrorKind::InvalidSpec, "assign_prob must lie in (0, 1) in stratum '" + law[k].label + "'",
                        path + "/assign_prob");
    }

    auto& u_law = glim.confounder;
    if (u_law.kind == ConfounderLaw::Kind::Discrete) {
        if (u_law.support.empty())
            throw Error(ErrorKind::DegenerateConfounder, "discrete support is empty", "/glim/confounder/support");
        double total = 0.0;
        for (std::size_t k = 0; k < u_law.support.size(); ++k) {
            const auto& s = u_law.support[k];
            const std::string path = "/glim/confounder/support/" + std::to_string(k);
            if (!finite(s.value)) throw Error(ErrorKind::InvalidSpec, "support value must be finite", path);
            if (!finite(s.prob) || s.prob < 0.0)
                throw Error(ErrorKind::DegenerateConfounder, "support probability must be >= 0", path);
            total += s.prob;
        }
        check_probability_vector(total, "/glim/confounder/support", ErrorKind::DegenerateConfounder);
    } else if (!(finite(u_law.lo) && finite(u_law.hi) && u_law.lo < u_law.hi)) {
        throw Error(ErrorKind::DegenerateConfounder, "uniform bounds need lo < hi", "/glim/confounder/bounds");
    }

    auto& out = spec.outcome;
    if (out.m0.size() != strata || out.m1.size() != strata)
        throw Error(ErrorKind::InvalidSpec, "outcome means must cover every stratum", "/outcome");
    if (!finite(out.noise_sd) || out.noise_sd < 0.0)
        throw Error(ErrorKind::InvalidSpec, "noise_sd must be finite and >= 0", "/outcome/noise_sd");
    for (std::size_t k = 0; k < strata; ++k)
        for (const auto* m : {&out.m0[k], &out.m1[k]})
            for (Eigen::Index j = 0; j < m->coefficients().size(); ++j)
                if (!finite(m->coefficients()(j)))
                    throw Error(ErrorKind::InvalidSpec, "outcome coefficients must be finite",
                                m == &out.m0[k] ? "/outcome/m0" : "/outcome/m1");
    if (out.binary_mode) {
        if (out.noise_sd != 0.0)
            throw Error(ErrorKind::InvalidSpec, "binary_mode requires noise_sd = 0", "/outcome/noise_sd");
        for (std::size_t k = 0; k < strata; ++k) {
            for (int arm : {0, 1}) {
                const auto [mn, mx] = polynomial_range(arm == 1 ? out.m1[k] : out.m0[k], u_law);
                if (mn < 0.0 || mx > 1.0)
                    throw Error(ErrorKind::RangeViolation,
                                "binary_mode needs m" + std::to_string(arm) + " in [0, 1] on the support",
                                "/outcome/m" + std::to_string(arm));
            }
        }
    }

    // The degenerate threshold is the same draw in both arms.
    if (glim.threshold.kind == ThresholdKind::DegenerateOne) glim.threshold.coupling = Coupling::Common;

    const auto [u_min, u_max] = u_law.range();
    // Additive-uniform and multiplicative rows need h(z, u) in [0, 1].
    const bool needs_unit_range = glim.link == LinkKind::Multiplicative ||
                                  glim.threshold.kind == ThresholdKind::Uniform01;
    for (std::size_t k = 0; k < strata; ++k) {
        const auto& p = glim.propensity[k];
        if (needs_unit_range) {
            for (int z : {0, 1}) {
                const double pz = z == 1 ? p.p1 : p.p0;
                for (double u : {u_min, u_max}) {
                    const double h = glim.link == LinkKind::Additive ? pz + u : pz * u;
                    if (h < 0.0 || h > 1.0)
                        throw Error(ErrorKind::RangeViolation,
                                    "h(" + std::to_string(z) + ", " + std::to_string(u) + ") = " + std::to_string(h) +
                                        " leaves [0, 1] in stratum '" + law[k].label + "'",
                                    "/glim/propensity/p" + std::to_string(z));
                }
            }
        }
        if (p.p0 == p.p1)
            throw Error(ErrorKind::RelevanceViolation, "p0 equals p1 in stratum '" + law[k].label + "'",
                        "/glim/propensity/p1");
    }

    ValidatedScenario valid(std::move(spec));
    // Per-(u, l) relevance. Under the degenerate threshold the potential
    // treatments are deterministic in u, so relevance is required of the
    // stratum as a whole instead.
    for (std::size_t k = 0; k < strata; ++k) {
        const auto nodes = valid.confounder_nodes(k);
        double first_stage = 0.0;
        for (std::size_t i = 0; i < nodes.points.size(); ++i) {
            const double u = nodes.points[i];
            const double diff = potential_treatment_prob(valid, 1, u, k) - potential_treatment_prob(valid, 0, u, k);
            first_stage += nodes.weights[i] * diff;
            if (valid->glim.threshold.kind != ThresholdKind::DegenerateOne && std::abs(diff) <= 1e-14)
                throw Error(ErrorKind::RelevanceViolation,
                            "Pr(A^1=1|u,l) equals Pr(A^0=1|u,l) at u = " + std::to_string(u) + " in stratum '" +
                                law[k].label + "'",
                            "/glim/propensity");
        }
        if (std::abs(first_stage) <= 1e-12)
            throw Error(ErrorKind::RelevanceViolation, "no first stage in stratum '" + law[k].label + "'",
                        "/glim/propensity");
    }
    return valid;
}

namespace {

std::size_t draw_index(Stream& rng, const std::vector<double>& cumulative) {
    const double v = rng.uniform() * cumulative.back();
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), v);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

double draw_threshold(Stream& rng, ThresholdKind kind) {
    switch (kind) {
        case ThresholdKind::DegenerateOne: return 1.0;
        case ThresholdKind::Uniform01: return rng.uniform();
        case ThresholdKind::Logistic01: return logit(rng.uniform());
    }
    return 1.0;
}

}  // namespace

CounterfactualPanel simulate_panel(const ValidatedScenario& s, std::size_t n, std::uint64_t seed,
                                   std::size_t workers) {
    if (n == 0) throw Error(ErrorKind::EmptyPanel, "n must be at least 1");
    const auto& glim = s->glim;
    const auto& outcome = s->outcome;

    std::vector<double> strata_cdf, support_cdf;
    double acc = 0.0;
    for (const auto& st : glim.covariate_law) strata_cdf.push_back(acc += st.prob);
    acc = 0.0;
    for (const auto& sp : glim.confounder.support) support_cdf.push_back(acc += sp.prob);

    CounterfactualPanel panel;
    for (const auto& st : glim.covariate_law) panel.strata.push_back(st.label);
    panel.rows.resize(n);

    parallel_for(n, workers, [&](std::size_t i) {
        Stream rng(derive_seed(seed, i));
        PanelRow& row = panel.rows[i];
        row.stratum = draw_index(rng, strata_cdf);
        if (glim.confounder.kind == ConfounderLaw::Kind::Discrete)
            row.u = glim.confounder.support[draw_index(rng, support_cdf)].value;
        else
            row.u = glim.confounder.lo + (glim.confounder.hi - glim.confounder.lo) * rng.uniform();

        const double eps0 = draw_threshold(rng, glim.threshold.kind);
        const double eps1 =
            glim.threshold.coupling == Coupling::Common ? eps0 : draw_threshold(rng, glim.threshold.kind);
        row.a0 = s.index(0, row.u, row.stratum) >= eps0 ? 1 : 0;
        row.a1 = s.index(1, row.u, row.stratum) >= eps1 ? 1 : 0;
        row.z = rng.uniform() < glim.propensity[row.stratum].assign_prob ? 1 : 0;

        const double m0 = outcome.mean(0, row.u, row.stratum);
        const double m1 = outcome.mean(1, row.u, row.stratum);
        if (outcome.binary_mode) {
            const double v = rng.uniform();
            row.y0 = v < m0 ? 1.0 : 0.0;
            row.y1 = v < m1 ? 1.0 : 0.0;
        } else {
            // One noise draw shared by both arms.
            std::normal_distribution<double> gauss(0.0, 1.0);
            const double noise = outcome.noise_sd > 0.0 ? outcome.noise_sd * gauss(rng) : 0.0;
            row.y0 = m0 + noise;
            row.y1 = m1 + noise;
        }
        row.ctype = compliance_type(row.a0, row.a1);
        row.nudge = row.a0 != row.a1;
    });
    return panel;
}

ObservedDataset observe(const CounterfactualPanel& panel) {
    const auto n = static_cast<Eigen::Index>(panel.rows.size());
    if (n == 0) throw Error(ErrorKind::EmptyPanel, "panel has no rows");
    ObservedDataset data;
    data.z.resize(n);
    data.a.resize(n);
    data.y.resize(n);
    std::vector<std::string> labels(panel.rows.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = panel.rows[static_cast<std::size_t>(i)];
        data.z(i) = r.z;
        data.a(i) = r.z * r.a1 + (1 - r.z) * r.a0;
        data.y(i) = data.a(i) == 1 ? r.y1 : r.y0;
        labels[static_cast<std::size_t>(i)] = panel.strata.at(r.stratum);
    }
    data.covariates.push_back(Covariate::from_labels("l", labels));
    return data;
}

}  // namespace nudge
