#include "common.hpp"

#include "nudge/glim.hpp"
#include "nudge/math.hpp"

#include <doctest.h>

using namespace nudge;
using nudge::test::fixture;
using nudge::test::parse_fixture;

namespace {

ScenarioSpec logistic_spec(double p0, double p1, std::vector<SupportPoint> support) {
    ScenarioSpec s;
    s.name = "logistic";
    s.glim.threshold = {ThresholdKind::Logistic01, Coupling::Independent};
    s.glim.link = LinkKind::Additive;
    s.glim.propensity = {{p0, p1, 0.5}};
    s.glim.confounder = ConfounderLaw::discrete(std::move(support));
    s.outcome.m0 = {Polynomial{0.0, 1.0}};
    s.outcome.m1 = {Polynomial{1.0, 2.0}};
    s.outcome.noise_sd = 0.5;
    return s;
}

ErrorKind kind_of(const ScenarioSpec& spec) {
    try {
        validate_spec(spec);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("spec was accepted");
    return ErrorKind::InvalidSpec;
}

}  // namespace

TEST_CASE("compliance probabilities for the logistic fixture") {
    const auto s = fixture("s2_logistic.json");
    // Independent thresholds: co = F1 (1 - F0), de = F0 (1 - F1), F_z = expit(p_z + u).
    for (double u : {-1.0, 1.0}) {
        const double f1 = 1.0 / (1.0 + std::exp(-(1.0 + u)));
        const double f0 = 1.0 / (1.0 + std::exp(-(0.0 + u)));
        const auto c = compliance_distribution(s, u, 0);
        CHECK(c.co == doctest::Approx(f1 * (1 - f0)).epsilon(1e-14));
        CHECK(c.de == doctest::Approx(f0 * (1 - f1)).epsilon(1e-14));
        CHECK(c.at == doctest::Approx(f0 * f1).epsilon(1e-14));
        CHECK(c.nt + c.at + c.co + c.de == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(compliance_distribution(s, 1.0, 0).nudge() == doctest::Approx(0.32403).epsilon(2e-5));
    CHECK(compliance_distribution(s, -1.0, 0).nudge() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(compliance_distribution(s, -1.0, 0).co == doctest::Approx(0.36553).epsilon(2e-5));
}

TEST_CASE("common coupling orders the two thresholds") {
    auto spec = parse_fixture("s3_additive.json");
    spec.glim.threshold.coupling = Coupling::Common;
    const auto s = validate_spec(spec);
    const auto c = compliance_distribution(s, 0.25, 0);
    CHECK(c.de == 0.0);
    CHECK(c.co == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(c.at == doctest::Approx(0.45).epsilon(1e-14));
    CHECK(c.nt == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("monotone fixture: compliers are exactly u in [1 - p1, 1 - p0)") {
    const auto s = fixture("s1_monotone.json");
    CHECK(s->glim.threshold.coupling == Coupling::Common);
    for (double u : {0.1, 0.39, 0.41, 0.5, 0.69, 0.71, 0.95}) {
        const auto c = compliance_distribution(s, u, 0);
        const bool complier = u >= 0.4 && u < 0.7;
        CHECK(c.co == (complier ? 1.0 : 0.0));
        CHECK(c.de == 0.0);
        CHECK(c.at == (u >= 0.7 ? 1.0 : 0.0));
    }
}

TEST_CASE("logistic thresholds give a complier share free of u") {
    const auto s = validate_spec(logistic_spec(-0.7, 1.3, {{-2.0, 0.2}, {0.0, 0.3}, {0.5, 0.1}, {3.0, 0.4}}));
    for (double u : {-2.0, 0.0, 0.5, 3.0}) {
        const auto c = compliance_distribution(s, u, 0);
        CHECK(c.co / c.nudge() == doctest::Approx(expit(2.0)).epsilon(1e-13));
    }
}

TEST_CASE("validation rejects broken scenarios") {
    auto base = logistic_spec(0.0, 1.0, {{-1.0, 0.5}, {1.0, 0.5}});
    CHECK_NOTHROW(validate_spec(base));

    auto same = base;
    same.glim.propensity[0].p1 = 0.0;
    CHECK(kind_of(same) == ErrorKind::RelevanceViolation);

    auto sum = base;
    sum.glim.confounder.support[0].prob = 0.6;
    CHECK(kind_of(sum) == ErrorKind::DegenerateConfounder);

    auto empty = base;
    empty.glim.confounder.support.clear();
    CHECK(kind_of(empty) == ErrorKind::DegenerateConfounder);

    auto assign = base;
    assign.glim.propensity[0].assign_prob = 1.0;
    CHECK(kind_of(assign) == ErrorKind::InvalidSpec);

    auto interval = base;
    interval.glim.confounder = ConfounderLaw::uniform(1.0, 1.0);
    CHECK(kind_of(interval) == ErrorKind::DegenerateConfounder);

    auto binary = base;
    binary.outcome.binary_mode = true;
    CHECK(kind_of(binary) != ErrorKind::RangeViolation);  // noise_sd = 0.5 is rejected first
    binary.outcome.noise_sd = 0.0;
    CHECK(kind_of(binary) == ErrorKind::RangeViolation);  // m1 = 1 + 2u leaves [0, 1]

    auto mult = parse_fixture("s4_multiplicative.json");
    mult.glim.propensity[0].p1 = 1.2;
    CHECK(kind_of(mult) == ErrorKind::RangeViolation);

    auto additive = parse_fixture("s3_additive.json");
    additive.glim.propensity[0].p1 = 0.6;  // 0.6 + 0.5 > 1
    CHECK(kind_of(additive) == ErrorKind::RangeViolation);

    auto labels = base;
    labels.glim.covariate_law = {{"x", 0.5}, {"x", 0.5}};
    labels.glim.propensity = {base.glim.propensity[0], base.glim.propensity[0]};
    labels.outcome.m0 = {base.outcome.m0[0], base.outcome.m0[0]};
    labels.outcome.m1 = {base.outcome.m1[0], base.outcome.m1[0]};
    CHECK(kind_of(labels) == ErrorKind::InvalidSpec);
}

TEST_CASE("degenerate thresholds force common coupling") {
    auto spec = parse_fixture("s1_monotone.json");
    spec.glim.threshold.coupling = Coupling::Independent;
    CHECK(validate_spec(spec)->glim.threshold.coupling == Coupling::Common);
}

TEST_CASE("simulation is a pure function of the seed") {
    const auto s = fixture("s2_two_strata.json");
    const auto one = simulate_panel(s, 5000, 42, 1);
    CHECK(one == simulate_panel(s, 5000, 42, 4));
    CHECK(one == simulate_panel(s, 5000, 42, 3));
    CHECK_FALSE(one == simulate_panel(s, 5000, 43, 1));
    CHECK_THROWS_AS(simulate_panel(s, 0, 1), Error);
}

TEST_CASE("panel rows satisfy the consistency identities") {
    const auto s = fixture("s4_multiplicative.json");
    const auto panel = simulate_panel(s, 2000, 5);
    const auto data = observe(panel);
    REQUIRE(data.size() == 2000);
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
        const auto& r = panel.rows[i];
        const auto k = static_cast<Eigen::Index>(i);
        CHECK(data.a(k) == (r.z ? r.a1 : r.a0));
        CHECK(data.y(k) == (data.a(k) ? r.y1 : r.y0));
        CHECK(r.ctype == compliance_type(r.a0, r.a1));
        CHECK(r.nudge == (r.a0 != r.a1));
    }
}

TEST_CASE("empirical complier share at u = -1 matches the model") {
    const auto s = fixture("s2_logistic.json");
    const auto panel = simulate_panel(s, 100000, 2024);
    double n_u = 0, co = 0;
    for (const auto& r : panel.rows) {
        if (r.u != -1.0) continue;
        ++n_u;
        co += r.ctype == ComplianceType::Complier;
    }
    const double p = 0.5 * (1.0 - expit(-1.0));
    CHECK(std::abs(co / n_u - p) <= 4.0 * std::sqrt(p * (1 - p) / n_u));
}

TEST_CASE("simulated strata follow the covariate law") {
    const auto s = fixture("s2_two_strata.json");
    const auto panel = simulate_panel(s, 50000, 8);
    double b = 0, z1_in_b = 0;
    for (const auto& r : panel.rows) {
        if (panel.strata[r.stratum] != "b") continue;
        ++b;
        z1_in_b += r.z;
    }
    CHECK(std::abs(b / 50000 - 0.6) <= 4.0 * std::sqrt(0.24 / 50000));
    CHECK(std::abs(z1_in_b / b - 0.3) <= 4.0 * std::sqrt(0.21 / b));
}
