// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "nudge/cli.hpp"
#include "nudge/error.hpp"
#include "nudge/estimators.hpp"
#include "nudge/inference.hpp"
#include "nudge/io.hpp"
#include "nudge/math.hpp"
#include "nudge/oracle.hpp"
#include "nudge/parallel.hpp"
#include "nudge/rng.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace nudge;

namespace {

constexpr std::uint64_t kSeed = 20261019;

std::string fixture_path(const std::string& name) { return std::string(NUDGE_FIXTURE_DIR) + "/" + name; }
ValidatedScenario fixture(const std::string& name) { return load_scenario(fixture_path(name)); }

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

struct Criterion {
    int id;
    std::string title;
    double budget_seconds;
    std::function<Verdict()> body;
};

// --- 1 ---------------------------------------------------------------------

Verdict identification() {
    Verdict v;
    const std::vector<std::pair<std::string, CausalTarget>> rows{
        {"s1_monotone.json", CausalTarget::late()},
        {"s3_additive.json", CausalTarget::mean(0, Population::All)},
        {"s3_additive.json", CausalTarget::mean(1, Population::All)},
        {"s4_multiplicative.json", CausalTarget::mean(0, Population::Treated)},
        {"s2_logistic.json", CausalTarget::mean(0, Population::Nudgeable)},
        {"s2_logistic.json", CausalTarget::mean(1, Population::Nudgeable)},
    };
    double worst = 0.0;
    for (const auto& [name, target] : rows) {
        const double gap = identification_gap(fixture(name), target);
        worst = std::max(worst, gap);
        v.require(gap <= 1e-9, name + " " + target.label() + " gap " + sci(gap));
    }
    v.note("max gap " + sci(worst) + " over " + std::to_string(rows.size()) + " rows");
    return v;
}

// --- 2 ---------------------------------------------------------------------

Verdict logistic_share() {
    Verdict v;
    Stream rng(derive_seed(kSeed, 2));
    double worst_pi = 0.0, worst_cov = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        double p0 = 0, p1 = 0;
        do {
            p0 = -2.0 + 4.0 * rng.uniform();
            p1 = -2.0 + 4.0 * rng.uniform();
        } while (std::abs(p1 - p0) < 0.1);
        const std::size_t size = 1 + rng.below(5);
        std::vector<SupportPoint> support;
        double total = 0.0;
        for (std::size_t k = 0; k < size; ++k) {
            support.push_back({-3.0 + 6.0 * rng.uniform(), 0.05 + rng.uniform()});
            total += support.back().prob;
        }
        for (auto& p : support) p.prob /= total;

        ScenarioSpec spec;
        spec.name = "random-logistic";
        spec.glim.threshold = {ThresholdKind::Logistic01, Coupling::Independent};
        spec.glim.propensity = {{p0, p1, 0.2 + 0.6 * rng.uniform()}};
        spec.glim.confounder = ConfounderLaw::discrete(support);
        spec.outcome.m0 = {Polynomial{0.3, -1.0, 0.5}};
        spec.outcome.m1 = {Polynomial{1.0, 2.0, 0.25}};
        spec.outcome.noise_sd = 1.0;
        const auto s = validate_spec(spec);

        for (const auto& p : support) {
            const auto c = compliance_distribution(s, p.value, 0);
            worst_pi = std::max(worst_pi, std::abs(c.co / c.nudge() - expit(p1 - p0)));
        }
        worst_cov = std::max(worst_cov, std::abs(check_conditions(s).null_cov));
    }
    v.require(worst_pi <= 1e-12, "pi deviation " + sci(worst_pi));
    v.require(worst_cov <= 1e-12, "null_cov " + sci(worst_cov));
    v.note("20 specs, max |pi - expit(p1 - p0)| " + sci(worst_pi) + ", max |null_cov| " + sci(worst_cov));
    return v;
}

// --- 3 ---------------------------------------------------------------------

const std::vector<std::string> kAllFixtures{"s1_monotone.json",    "s1_noise_free.json",      "s2_logistic.json",
                                            "s2_location_shift.json", "s2_binary.json",       "s2_two_strata.json",
                                            "s3_additive.json",    "s3_additive_hetero.json", "s4_multiplicative.json"};

Verdict decomposition() {
    Verdict v;
    double worst = 0.0;
    std::size_t checks = 0;
    for (const auto& name : kAllFixtures) {
        const auto s = fixture(name);
        std::vector<Conditioning> levels{std::nullopt};
        for (const auto& st : s->glim.covariate_law)
            if (s->glim.covariate_law.size() > 1) levels.emplace_back(st.label);
        for (const auto& level : levels) {
            const auto d = wald_decomposition(s, level);
            const double err = std::abs(d.itt - (d.covariance_term() + d.nate_term()));
            worst = std::max(worst, err);
            ++checks;
            v.require(err <= 1e-9, name + (level ? "@" + *level : "") + " residual " + sci(err));
        }
    }
    v.note(std::to_string(checks) + " fixture levels, max residual " + sci(worst));
    return v;
}

// --- 4 ---------------------------------------------------------------------

Verdict negative_control() {
    Verdict v;
    const auto s = fixture("s3_additive_hetero.json");
    const double nate_gap = identification_gap(s, CausalTarget::nate());
    const double ate_gap = identification_gap(s, CausalTarget::ate());
    const double cov = check_conditions(s).null_cov;
    v.require(nate_gap > 0.01, "NATE gap " + sci(nate_gap));
    v.require(ate_gap <= 1e-9, "ATE gap " + sci(ate_gap));
    v.require(std::abs(cov) > 0.0, "null_cov is zero");
    v.note("NATE gap " + sci(nate_gap) + ", ATE gap " + sci(ate_gap) + ", null_cov " + sci(cov));
    return v;
}

// --- 5 ---------------------------------------------------------------------

struct Pair {
    std::string fixture;
    EstimatorSpec spec;
    CausalTarget target;
};

EstimatorSpec arm_spec(int arm) {
    EstimatorSpec e;
    e.estimand = Estimand::ArmWald;
    e.arm = arm;
    return e;
}

EstimatorSpec marginal_spec() {
    EstimatorSpec e;
    e.estimand = Estimand::WaldMarginal;
    return e;
}

Verdict consistency() {
    Verdict v;
    const std::vector<Pair> pairs{
        {"s1_monotone.json", marginal_spec(), CausalTarget::late()},
        {"s2_logistic.json", marginal_spec(), CausalTarget::nate()},
        {"s2_logistic.json", arm_spec(1), CausalTarget::mean(1, Population::Nudgeable)},
        {"s3_additive.json", arm_spec(0), CausalTarget::mean(0, Population::All)},
        {"s3_additive.json", arm_spec(1), CausalTarget::mean(1, Population::All)},
        {"s4_multiplicative.json", arm_spec(0), CausalTarget::mean(0, Population::Treated)},
    };
    std::size_t k = 0;
    double worst_z = 0.0;
    for (const auto& p : pairs) {
        const auto s = fixture(p.fixture);
        const double truth = true_target(s, p.target);
        const std::uint64_t seed = derive_seed(kSeed, 5, k++);
        const auto small = observe(simulate_panel(s, 1000, derive_seed(seed, 0)));
        const auto large = observe(simulate_panel(s, 100000, derive_seed(seed, 1)));
        BootstrapConfig cfg;
        cfg.B = 200;
        cfg.seed = derive_seed(seed, 2);
        const auto report = estimate_with_bootstrap(large, p.spec, cfg, worker_count());
        const double err_large = std::abs(report.point - truth);
        const double err_small = std::abs(estimate(small, p.spec).point - truth);
        const double z = err_large / report.bootstrap->se;
        worst_z = std::max(worst_z, z);
        const std::string tag = p.fixture + " " + p.spec.label();
        v.require(z <= 5.0, tag + " off by " + sci(z) + " SEs");
        v.require(err_large < err_small, tag + " error " + sci(err_large) + " at 1e5 vs " + sci(err_small) + " at 1e3");
    }
    v.note(std::to_string(pairs.size()) + " pairs, max |error| / SE at n = 1e5: " + sci(worst_z));
    return v;
}

// --- 6 ---------------------------------------------------------------------

Verdict algebraic_identities() {
    Verdict v;
    Stream rng(derive_seed(kSeed, 6));
    double worst = 0.0;
    int accepted = 0;
    while (accepted < 100) {
        const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.below(47));
        ObservedDataset d;
        d.z.resize(n);
        d.a.resize(n);
        d.y.resize(n);
        const double lift = rng.uniform();
        for (Eigen::Index i = 0; i < n; ++i) {
            d.z(i) = static_cast<int>(rng.below(2));
            d.a(i) = rng.uniform() < (d.z(i) ? 0.2 + 0.8 * lift : 0.2);
            d.y(i) = std::round((rng.uniform() * 20.0 - 5.0) * 1000.0) / 1000.0;
        }
        const bool both_arms = (d.z.array() == 1).any() && (d.z.array() == 0).any();
        if (!both_arms) continue;
        double den = 0.0;
        try {
            den = wald_marginal(d, {0.0, 0.0}).first_stage;
        } catch (const Error&) {
            continue;
        }
        if (std::abs(den) < 1e-9) continue;
        ++accepted;
        const EstimatorOptions loose{1e-12, 0.0};
        const double w = wald_marginal(d, loose).point;
        const double a1 = arm_wald(d, 1, Functional::identity(), {}, loose).point;
        const double a0 = arm_wald(d, 0, Functional::identity(), {}, loose).point;
        const double one1 = arm_wald(d, 1, Functional::one(), {}, loose).point;
        const double one0 = arm_wald(d, 0, Functional::one(), {}, loose).point;
        const double scale = std::max(1.0, std::abs(w));
        worst = std::max({worst, std::abs(a1 - a0 - w) / scale, std::abs(one1 - 1.0), std::abs(one0 - 1.0)});
    }
    v.require(worst <= 1e-12, "max deviation " + sci(worst));
    v.note("100 datasets, max deviation " + sci(worst));
    return v;
}

// --- 7 ---------------------------------------------------------------------

Verdict coverage() {
    Verdict v;
    BootstrapConfig cfg;
    cfg.B = 500;
    std::size_t k = 0;
    for (const auto& [name, target] : std::vector<std::pair<std::string, CausalTarget>>{
             {"s1_monotone.json", CausalTarget::late()}, {"s2_logistic.json", CausalTarget::nate()}}) {
        cfg.seed = derive_seed(kSeed, 7, k++);
        McStudyOptions opts;
        opts.workers = worker_count();
        const auto r = mc_study(fixture(name), marginal_spec(), target, 2000, 500, cfg, opts);
        v.require(r.coverage >= 0.92 && r.coverage <= 0.98, name + " coverage " + sci(r.coverage));
        v.note(name + " coverage " + sci(r.coverage) + ", bias " + sci(r.bias) + " (3 sd/sqrt(R) = " +
               sci(3.0 * r.sd / std::sqrt(500.0)) + "), failures " + std::to_string(r.failures));
    }
    return v;
}

// --- 8 ---------------------------------------------------------------------

// Pr(A^z = 1) by the oracle's quadrature nodes.
std::pair<double, double> margins(const ValidatedScenario& s) {
    double pi1 = 0.0, pi0 = 0.0;
    for (std::size_t l = 0; l < s.strata(); ++l) {
        const double w_l = s->glim.covariate_law[l].prob;
        const auto nodes = s.confounder_nodes(l, {});
        for (std::size_t k = 0; k < nodes.points.size(); ++k) {
            pi1 += w_l * nodes.weights[k] * potential_treatment_prob(s, 1, nodes.points[k], l);
            pi0 += w_l * nodes.weights[k] * potential_treatment_prob(s, 0, nodes.points[k], l);
        }
    }
    return {pi1, pi0};
}

Verdict bounds() {
    Verdict v;
    {
        const auto s = fixture("s1_monotone.json");
        const auto [pi1, pi0] = margins(s);
        const auto population = frechet_from_margins(pi1, pi0);
        const double share = check_conditions(s).complier_share;
        const double gap = std::abs(share - population.complier_lo);
        v.require(gap <= 1e-9, "S1 complier share off the lower bound by " + sci(gap));
        v.note("S1 complier share " + sci(share) + " = lower bound " + sci(population.complier_lo));
    }
    constexpr std::size_t R = 500;
    std::size_t k = 0;
    for (const auto& name : kAllFixtures) {
        const auto s = fixture(name);
        const auto truth = check_conditions(s);
        std::vector<int> inside(R * 3, 0);
        const std::uint64_t seed = derive_seed(kSeed, 8, k++);
        parallel_for(R, worker_count(), [&](std::size_t r) {
            const auto data = observe(simulate_panel(s, 10000, derive_seed(seed, r)));
            const auto b = frechet_bounds(data).levels.at(kMarginal);
            inside[3 * r + 0] = b.complier_lo <= truth.complier_share && truth.complier_share <= b.complier_hi;
            inside[3 * r + 1] = b.defier_lo <= truth.defier_share && truth.defier_share <= b.defier_hi;
            inside[3 * r + 2] = b.nudge_lo <= truth.nudge_share && truth.nudge_share <= b.nudge_hi;
        });
        const char* share_names[] = {"complier", "defier", "nudge-able"};
        std::string rates;
        for (int j = 0; j < 3; ++j) {
            std::size_t hits = 0;
            for (std::size_t r = 0; r < R; ++r) hits += static_cast<std::size_t>(inside[3 * r + j]);
            const double rate = static_cast<double>(hits) / R;
            rates += std::string(j ? " " : "") + share_names[j] + "=" + sci(rate);
            v.require(rate >= 0.99, name + " " + share_names[j] + " containment " + sci(rate));
        }
        v.note(name + " " + rates);
    }
    return v;
}

// --- 9 ---------------------------------------------------------------------

Verdict median() {
    Verdict v;
    EstimatorSpec median_spec;
    median_spec.estimand = Estimand::MedianNte;
    BootstrapConfig cfg;
    cfg.B = 200;
    {
        const auto s = fixture("s1_noise_free.json");
        const double truth = true_target(s, CausalTarget::median_contrast());
        const auto data = observe(simulate_panel(s, 100000, derive_seed(kSeed, 9, 0)));
        cfg.seed = derive_seed(kSeed, 9, 1);
        const auto r = estimate_with_bootstrap(data, median_spec, cfg, worker_count());
        const double z = std::abs(r.point - truth) / r.bootstrap->se;
        v.require(z <= 5.0, "noise-free S1 off by " + sci(z) + " SEs");
        v.note("noise-free S1: estimate " + sci(r.point) + " vs oracle " + sci(truth) + " (" + sci(z) + " SEs)");
    }
    {
        const auto s = fixture("s2_location_shift.json");
        const auto data = observe(simulate_panel(s, 100000, derive_seed(kSeed, 9, 2)));
        cfg.seed = derive_seed(kSeed, 9, 3);
        const auto m = estimate_with_bootstrap(data, median_spec, cfg, worker_count());
        const auto w = estimate_with_bootstrap(data, marginal_spec(), cfg, worker_count());
        const double se = std::max(m.bootstrap->se, w.bootstrap->se);
        const double z = std::abs(m.point - w.point) / se;
        v.require(z <= 5.0, "location shift: median and Wald differ by " + sci(z) + " SEs");
        v.note("location shift: median " + sci(m.point) + ", Wald " + sci(w.point) + " (" + sci(z) + " SEs)");
    }
    return v;
}

// --- 10 --------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

Verdict reproducibility() {
    Verdict v;
    const auto root = std::filesystem::temp_directory_path() / "nudge_iv_acceptance";
    std::filesystem::remove_all(root);
    std::filesystem::create_directories(root);

    // Each workflow writes its files into one directory; stdout is kept too.
    auto workflows = [&](const std::filesystem::path& dir) {
        std::filesystem::create_directories(dir);
        const std::string d = dir.string() + "/";
        const std::vector<std::vector<std::string>> runs{
            {"simulate", "--scenario", fixture_path("s2_two_strata.json"), "--n", "5000", "--seed", "31", "--out",
             d + "sim"},
            {"estimate", "--data", d + "sim.observed.csv", "--estimand", "wald", "--v", "l", "--bootstrap", "200",
             "--seed", "9", "--out", d + "estimate.json"},
            {"estimate", "--data", d + "sim.observed.csv", "--estimand", "median-nte", "--bootstrap", "50", "--seed",
             "9", "--out", d + "median.json"},
            {"oracle", "--scenario", fixture_path("s2_two_strata.json"), "--target", "nate", "--stratum", "b", "--out",
             d + "oracle.json"},
            {"check", "--scenario", fixture_path("s3_additive_hetero.json"), "--out", d + "check.json"},
            {"bounds", "--data", d + "sim.observed.csv", "--v", "l", "--out", d + "bounds.json"},
            {"mc-study", "--scenario", fixture_path("s2_logistic.json"), "--estimand", "wald-marginal", "--n", "500",
             "--reps", "40", "--bootstrap", "100", "--seed", "5", "--out", d + "mc.json", "--quiet"},
        };
        std::string transcript;
        for (const auto& args : runs) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            std::string text = out.str();
            for (auto at = text.find(d); at != std::string::npos; at = text.find(d)) text.replace(at, d.size(), "DIR/");
            transcript += args[0] + " exit " + std::to_string(code) + "\n" + text;
            if (code != cli::kOk) v.require(false, args[0] + " exited with " + std::to_string(code) + ": " + err.str());
        }
        std::ofstream(dir / "stdout.txt", std::ios::binary) << transcript;
    };

    std::vector<std::filesystem::path> dirs;
    for (const char* threads : {"1", "2", "4"}) {
        setenv("NUDGE_IV_THREADS", threads, 1);
        for (const char* pass : {"a", "b"}) {
            dirs.push_back(root / (std::string("t") + threads + pass));
            workflows(dirs.back());
        }
    }
    unsetenv("NUDGE_IV_THREADS");

    std::size_t files = 0;
    for (const auto& entry : std::filesystem::directory_iterator(dirs.front())) {
        const auto name = entry.path().filename();
        const std::string reference = slurp(entry.path());
        ++files;
        for (std::size_t k = 1; k < dirs.size(); ++k) {
            v.require(slurp(dirs[k] / name) == reference, name.string() + " differs in " + dirs[k].filename().string());
        }
    }
    v.note(std::to_string(files) + " output files identical across 2 runs x {1, 2, 4} threads");
    return v;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "identification on the fixtures", 1.0, identification},
        {2, "logistic complier share", 1.0, logistic_share},
        {3, "Wald decomposition identity", 0.0, decomposition},
        {4, "negative control", 0.0, negative_control},
        {5, "estimator consistency", 30.0, consistency},
        {6, "finite-dataset identities", 0.0, algebraic_identities},
        {7, "bootstrap coverage", 600.0, coverage},
        {8, "bounds", 0.0, bounds},
        {9, "median NTE", 0.0, median},
        {10, "CLI reproducibility", 0.0, reproducibility},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.body();
        } catch (const std::exception& e) {
            v.require(false, std::string("threw: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.budget_seconds > 0.0) v.require(seconds < c.budget_seconds, "runtime over " + sci(c.budget_seconds) + " s");
        failed += v.pass ? 0 : 1;
        std::printf("criterion %2d %-34s %s  (%.2f s) %s\n", c.id, c.title.c_str(), v.pass ? "PASS" : "FAIL", seconds,
                    v.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
