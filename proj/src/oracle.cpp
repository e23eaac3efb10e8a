#include "nudge/oracle.hpp"

#include "nudge/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace nudge {

namespace {

constexpr double kZeroDenominator = 1e-12;
constexpr double kEmptyWeight = 1e-15;
constexpr double kQuantileTolerance = 1e-10;

struct Node {
    std::size_t stratum = 0;
    double u = 0.0;
    double w = 0.0;   // probability weight, summing to one over the conditioning set
    double p0 = 0.0;  // Pr(A^0 = 1 | u, l)
    double p1 = 0.0;
    ComplianceProbs c;
    double m0 = 0.0;
    double m1 = 0.0;
};

std::vector<std::size_t> strata_for(const ValidatedScenario& s, const Conditioning& v) {
    if (v) return {s->stratum_index(*v)};
    std::vector<std::size_t> all(s.strata());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return all;
}

// u where E[h(Y^a) | u, l] jumps or kinks: only when the outcome has no noise
// and h itself has breakpoints.
std::vector<double> outcome_breaks(const ValidatedScenario& s, std::size_t stratum, int arm,
                                   const Functional& h) {
    const auto& out = s->outcome;
    const auto& law = s->glim.confounder;
    std::vector<double> breaks;
    if (out.noise_sd != 0.0 || out.binary_mode || law.kind != ConfounderLaw::Kind::UniformInterval) return breaks;
    const Polynomial& m = arm == 1 ? out.m1[stratum] : out.m0[stratum];
    for (double level : h.breakpoints())
        for (double r : m.solve_in(level, law.lo, law.hi)) breaks.push_back(r);
    return breaks;
}

std::vector<Node> build_nodes(const ValidatedScenario& s, const Conditioning& v,
                              const std::function<std::vector<double>(std::size_t)>& extra = {}) {
    const auto strata = strata_for(s, v);
    double mass = 0.0;
    for (std::size_t k : strata) mass += s->glim.covariate_law[k].prob;
    if (mass <= 0.0)
        throw Error(ErrorKind::UndefinedTarget, "conditioning stratum has probability zero", v.value_or(""));

    std::vector<Node> nodes;
    for (std::size_t k : strata) {
        const double pl = s->glim.covariate_law[k].prob / mass;
        if (pl == 0.0) continue;
        const std::vector<double> breaks = extra ? extra(k) : std::vector<double>{};
        const auto grid = s.confounder_nodes(k, breaks);
        for (std::size_t i = 0; i < grid.points.size(); ++i) {
            const double u = grid.points[i];
            Node n;
            n.stratum = k;
            n.u = u;
            n.w = pl * grid.weights[i];
            n.p0 = potential_treatment_prob(s, 0, u, k);
            n.p1 = potential_treatment_prob(s, 1, u, k);
            n.c = compliance_distribution(s, u, k);
            n.m0 = s->outcome.mean(0, u, k);
            n.m1 = s->outcome.mean(1, u, k);
            nodes.push_back(n);
        }
    }
    return nodes;
}

double population_weight(const ValidatedScenario& s, const Node& n, Population pop) {
    switch (pop) {
        case Population::All: return 1.0;
        case Population::Treated: {
            const double q = s->glim.propensity[n.stratum].assign_prob;
            return q * n.p1 + (1.0 - q) * n.p0;
        }
        case Population::Compliers: return n.c.co;
        case Population::Nudgeable: return n.c.nudge();
    }
    return 0.0;
}

double arm_expectation(const OutcomeSpec& out, const Functional& h, double mean) {
    if (out.binary_mode) return mean * h(1.0) + (1.0 - mean) * h(0.0);
    return h.gaussian_expectation(mean, out.noise_sd);
}

// Smallest c with cdf(c) >= q, to kQuantileTolerance, for a nondecreasing cdf.
double solve_quantile(const std::function<double(double)>& cdf, double q, double center, double width) {
    if (!(width > 0.0)) width = 1.0;
    double lo = center - width, hi = center + width;
    for (int k = 0; k < 64 && cdf(lo) >= q; ++k) lo -= width * std::ldexp(1.0, k);
    for (int k = 0; k < 64 && cdf(hi) < q; ++k) hi += width * std::ldexp(1.0, k);
    if (cdf(lo) >= q || cdf(hi) < q)
        throw Error(ErrorKind::UndefinedTarget, "could not bracket the quantile");
    while (hi - lo > kQuantileTolerance) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (cdf(mid) >= q ? hi : lo) = mid;
    }
    return hi;
}

// Bracket centre and half-width: mean +- 10 (noise_sd + range of m_a).
std::pair<double, double> quantile_bracket(const ValidatedScenario& s, int arm, Population pop,
                                           const Conditioning& v) {
    const auto nodes = build_nodes(s, v);
    double total = 0.0, mean = 0.0;
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (const auto& n : nodes) {
        const double w = n.w * population_weight(s, n, pop);
        if (w <= 0.0) continue;
        const double m = arm == 1 ? n.m1 : n.m0;
        total += w;
        mean += w * m;
        mn = std::min(mn, m);
        mx = std::max(mx, m);
    }
    if (total < kEmptyWeight) throw Error(ErrorKind::UndefinedTarget, "population has probability zero");
    const double spread = s->outcome.noise_sd + (mx - mn) + (s->outcome.binary_mode ? 1.0 : 0.0);
    return {mean / total, 10.0 * spread};
}

double check_ratio_means(double mu1, double mu0, TargetKind kind) {
    if (kind == TargetKind::RiskRatio) {
        if (mu0 == 0.0) throw Error(ErrorKind::UndefinedTarget, "risk ratio with zero control mean");
        return mu1 / mu0;
    }
    if (!(mu1 > 0.0 && mu1 < 1.0 && mu0 > 0.0 && mu0 < 1.0))
        throw Error(ErrorKind::UndefinedTarget, "odds ratio needs both means in (0, 1)");
    return (mu1 / (1.0 - mu1)) / (mu0 / (1.0 - mu0));
}

Population parse_population(const std::string& text) {
    if (text == "all") return Population::All;
    if (text == "treated") return Population::Treated;
    if (text == "compliers") return Population::Compliers;
    if (text == "nudgeable") return Population::Nudgeable;
    throw Error(ErrorKind::SchemaError, "unknown population '" + text + "'", "--target");
}

double parse_double(const std::string& text) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) throw Error(ErrorKind::SchemaError, "bad number '" + text + "'", "--target");
    return value;
}

int parse_arm(const std::string& text) {
    if (text == "0") return 0;
    if (text == "1") return 1;
    throw Error(ErrorKind::SchemaError, "arm must be 0 or 1, got '" + text + "'", "--target");
}

}  // namespace

std::string_view to_string(Population pop) {
    switch (pop) {
        case Population::All: return "all";
        case Population::Treated: return "treated";
        case Population::Compliers: return "compliers";
        case Population::Nudgeable: return "nudgeable";
    }
    return "?";
}

CausalTarget CausalTarget::parse(const std::string& text) {
    std::string body = text;
    std::optional<std::string> stratum;
    if (const auto at = body.find('@'); at != std::string::npos) {
        stratum = body.substr(at + 1);
        body = body.substr(0, at);
    }
    std::vector<std::string> parts;
    std::stringstream ss(body);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.empty()) throw Error(ErrorKind::SchemaError, "empty target", "--target");

    CausalTarget t;
    const std::string& head = parts[0];
    auto pop_at = [&](std::size_t k, Population fallback) {
        return parts.size() > k ? parse_population(parts[k]) : fallback;
    };
    if (head == "late") t = late();
    else if (head == "nate") t = nate();
    else if (head == "ate") t = ate();
    else if (head == "att") t = att();
    else if (head == "mean" && parts.size() >= 2) t = mean(parse_arm(parts[1]), pop_at(2, Population::Nudgeable));
    else if (head == "quantile" && parts.size() >= 3)
        t = quantile(parse_arm(parts[1]), parse_double(parts[2]), pop_at(3, Population::Nudgeable));
    else if (head == "median-nte") t = median_contrast(pop_at(1, Population::Nudgeable));
    else if (head == "risk-ratio") t = risk_ratio(pop_at(1, Population::Nudgeable));
    else if (head == "odds-ratio") t = odds_ratio(pop_at(1, Population::Nudgeable));
    else throw Error(ErrorKind::SchemaError, "unknown target '" + text + "'", "--target");
    if ((t.kind == TargetKind::Quantile) && !(t.q > 0.0 && t.q < 1.0))
        throw Error(ErrorKind::SchemaError, "quantile level must lie in (0, 1)", "--target");
    t.stratum = stratum;
    return t;
}

std::string CausalTarget::label() const {
    std::string out;
    const std::string pop(to_string(population));
    switch (kind) {
        case TargetKind::MeanContrast:
            out = population == Population::Compliers ? "late"
                  : population == Population::Nudgeable ? "nate"
                  : population == Population::All       ? "ate"
                                                         : "att";
            break;
        case TargetKind::CounterfactualMean: out = "mean:" + std::to_string(arm) + ":" + pop; break;
        case TargetKind::Quantile: {
            std::ostringstream q_text;
            q_text << q;
            out = "quantile:" + std::to_string(arm) + ":" + q_text.str() + ":" + pop;
            break;
        }
        case TargetKind::QuantileContrast: out = "median-nte:" + pop; break;
        case TargetKind::RiskRatio: out = "risk-ratio:" + pop; break;
        case TargetKind::OddsRatio: out = "odds-ratio:" + pop; break;
    }
    if (stratum) out += "@" + *stratum;
    return out;
}

double population_mean(const ValidatedScenario& s, int arm, const Functional& h, Population pop,
                       const Conditioning& v) {
    const auto nodes = build_nodes(s, v, [&](std::size_t k) { return outcome_breaks(s, k, arm, h); });
    double num = 0.0, den = 0.0;
    for (const auto& n : nodes) {
        const double w = n.w * population_weight(s, n, pop);
        if (w == 0.0) continue;
        num += w * arm_expectation(s->outcome, h, arm == 1 ? n.m1 : n.m0);
        den += w;
    }
    if (den < kEmptyWeight)
        throw Error(ErrorKind::UndefinedTarget, "population '" + std::string(to_string(pop)) + "' has probability zero",
                    v.value_or(""));
    return num / den;
}

double true_target(const ValidatedScenario& s, const CausalTarget& t) {
    switch (t.kind) {
        case TargetKind::MeanContrast: {
            const auto nodes = build_nodes(s, t.stratum);
            double num = 0.0, den = 0.0;
            for (const auto& n : nodes) {
                const double w = n.w * population_weight(s, n, t.population);
                num += w * (n.m1 - n.m0);
                den += w;
            }
            if (den < kEmptyWeight) throw Error(ErrorKind::UndefinedTarget, "population has probability zero");
            return num / den;
        }
        case TargetKind::CounterfactualMean:
            return population_mean(s, t.arm, Functional::identity(), t.population, t.stratum);
        case TargetKind::Quantile: {
            const auto [center, width] = quantile_bracket(s, t.arm, t.population, t.stratum);
            return solve_quantile(
                [&](double c) {
                    return population_mean(s, t.arm, Functional::indicator_leq(c), t.population, t.stratum);
                },
                t.q, center, width);
        }
        case TargetKind::QuantileContrast: {
            CausalTarget arm = t;
            arm.kind = TargetKind::Quantile;
            arm.arm = 1;
            const double q1 = true_target(s, arm);
            arm.arm = 0;
            return q1 - true_target(s, arm);
        }
        case TargetKind::RiskRatio:
        case TargetKind::OddsRatio: {
            const double mu1 = population_mean(s, 1, Functional::identity(), t.population, t.stratum);
            const double mu0 = population_mean(s, 0, Functional::identity(), t.population, t.stratum);
            return check_ratio_means(mu1, mu0, t.kind);
        }
    }
    return 0.0;
}

double exact_wald(const ValidatedScenario& s, const Conditioning& v) {
    const auto nodes = build_nodes(s, v);
    double num = 0.0, den = 0.0;
    for (const auto& n : nodes) {
        num += n.w * (n.m1 - n.m0) * (n.p1 - n.p0);
        den += n.w * (n.p1 - n.p0);
    }
    if (std::abs(den) <= kZeroDenominator)
        throw Error(ErrorKind::ZeroDenominator, "Pr(A^1=1|v) - Pr(A^0=1|v) is zero", v.value_or(""));
    return num / den;
}

double exact_arm_wald(const ValidatedScenario& s, int arm, const Functional& h, const Conditioning& v) {
    const auto nodes = build_nodes(s, v, [&](std::size_t k) { return outcome_breaks(s, k, arm, h); });
    double num = 0.0, den = 0.0;
    for (const auto& n : nodes) {
        // Pr(A^1 = a) - Pr(A^0 = a)
        const double diff = arm == 1 ? n.p1 - n.p0 : n.p0 - n.p1;
        num += n.w * diff * arm_expectation(s->outcome, h, arm == 1 ? n.m1 : n.m0);
        den += n.w * diff;
    }
    if (std::abs(den) <= kZeroDenominator)
        throw Error(ErrorKind::ZeroDenominator, "Pr(A^1=a|v) - Pr(A^0=a|v) is zero", v.value_or(""));
    return num / den;
}

ConditionReport check_conditions(const ValidatedScenario& s, const Conditioning& v) {
    const auto nodes = build_nodes(s, v);
    ConditionReport r;
    double mean_delta = 0.0, mean_pi = 0.0;
    std::vector<double> stratum_mass(s.strata(), 0.0), stratum_pi(s.strata(), 0.0);
    for (const auto& n : nodes) {
        const double nudge = n.c.nudge();
        r.nudge_share += n.w * nudge;
        r.complier_share += n.w * n.c.co;
        r.defier_share += n.w * n.c.de;
        if (std::abs(n.p1 - n.p0) <= 1e-14) r.relevance_ok = false;
        if (nudge <= 0.0) continue;
        const double pi = n.c.co / nudge;
        mean_delta += n.w * nudge * (n.m1 - n.m0);
        mean_pi += n.w * nudge * pi;
        stratum_mass[n.stratum] += n.w * nudge;
        stratum_pi[n.stratum] += n.w * nudge * pi;
    }
    if (r.nudge_share <= 0.0) return r;
    mean_delta /= r.nudge_share;
    mean_pi /= r.nudge_share;
    for (std::size_t k = 0; k < s.strata(); ++k)
        if (stratum_mass[k] > 0.0) stratum_pi[k] /= stratum_mass[k];

    double cov = 0.0;
    for (const auto& n : nodes) {
        const double nudge = n.c.nudge();
        if (nudge <= 0.0) continue;
        const double pi = n.c.co / nudge;
        cov += n.w * nudge * ((n.m1 - n.m0) - mean_delta) * (pi - mean_pi);
        r.bcs_max_dev = std::max(r.bcs_max_dev, std::abs(pi - stratum_pi[n.stratum]));
    }
    r.null_cov = cov / r.nudge_share;
    return r;
}

WaldDecomposition wald_decomposition(const ValidatedScenario& s, const Conditioning& v) {
    const auto nodes = build_nodes(s, v);
    WaldDecomposition d;
    for (const auto& n : nodes) {
        const double ey1 = n.p1 * n.m1 + (1.0 - n.p1) * n.m0;  // E(Y^{z=1} | u, l)
        const double ey0 = n.p0 * n.m1 + (1.0 - n.p0) * n.m0;
        d.itt += n.w * (ey1 - ey0);
        d.first_stage += n.w * (n.p1 - n.p0);
    }
    const auto cond = check_conditions(s, v);
    d.null_cov = cond.null_cov;
    d.nudge_share = cond.nudge_share;
    d.complier_share = cond.complier_share;
    d.defier_share = cond.defier_share;
    d.nate = true_target(s, v ? CausalTarget::nate().given(*v) : CausalTarget::nate());
    return d;
}

double identified_value(const ValidatedScenario& s, const CausalTarget& t) {
    switch (t.kind) {
        case TargetKind::MeanContrast: return exact_wald(s, t.stratum);
        case TargetKind::CounterfactualMean: return exact_arm_wald(s, t.arm, Functional::identity(), t.stratum);
        case TargetKind::Quantile: {
            const auto [center, width] = quantile_bracket(s, t.arm, Population::All, t.stratum);
            return solve_quantile(
                [&](double c) { return exact_arm_wald(s, t.arm, Functional::indicator_leq(c), t.stratum); }, t.q,
                center, width);
        }
        case TargetKind::QuantileContrast: {
            CausalTarget arm = t;
            arm.kind = TargetKind::Quantile;
            arm.arm = 1;
            const double q1 = identified_value(s, arm);
            arm.arm = 0;
            return q1 - identified_value(s, arm);
        }
        case TargetKind::RiskRatio:
        case TargetKind::OddsRatio: {
            const double mu1 = exact_arm_wald(s, 1, Functional::identity(), t.stratum);
            const double mu0 = exact_arm_wald(s, 0, Functional::identity(), t.stratum);
            return check_ratio_means(mu1, mu0, t.kind);
        }
    }
    return 0.0;
}

double identification_gap(const ValidatedScenario& s, const CausalTarget& t) {
    return std::abs(identified_value(s, t) - true_target(s, t));
}

}  // namespace nudge
