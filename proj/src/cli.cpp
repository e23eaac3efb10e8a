#include "nudge/cli.hpp"

#include "nudge/error.hpp"
#include "nudge/estimators.hpp"
#include "nudge/inference.hpp"
#include "nudge/io.hpp"
#include "nudge/oracle.hpp"
#include "nudge/parallel.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace nudge::cli {

namespace {

// Bad flag values detected after CLI11 has accepted the command line.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename F>
auto flag_value(const std::string& flag, F parse) {
    try {
        return parse();
    } catch (const Error& e) {
        throw UsageError(flag + ": " + e.what());
    }
}

struct Globals {
    std::uint64_t seed = 0;
    std::string out;
    bool quiet = false;
    std::size_t workers = 1;
};

struct Options {
    std::string scenario;
    std::string data;
    std::string estimand = "wald";
    int arm = 1;
    std::string h = "identity";
    std::vector<std::string> v;
    std::size_t bootstrap = 0;
    double ci_level = 0.95;
    std::string scale = "difference";
    std::string target;
    std::string stratum;
    std::size_t n = 0;
    std::size_t reps = 0;
};

using Table = std::vector<std::pair<std::string, std::string>>;

std::string num(double x) { return format_double(x); }

void print_table(std::ostream& out, const Table& rows) {
    std::size_t width = 0;
    for (const auto& [k, v] : rows) width = std::max(width, k.size());
    for (const auto& [k, v] : rows) out << std::left << std::setw(static_cast<int>(width) + 2) << k << v << '\n';
}

// Reports go to --out when given (with a table on stdout), else to stdout as JSON.
void emit(const Json& report, const Table& table, const Globals& g, std::ostream& out) {
    if (g.out.empty()) {
        out << render_report(report);
        return;
    }
    write_report(report, g.out);
    if (!g.quiet) print_table(out, table);
}

EstimatorSpec estimator_spec(const Options& o) {
    EstimatorSpec spec;
    const std::string& e = o.estimand;
    if (e == "wald") spec.estimand = Estimand::Wald;
    else if (e == "wald-marginal") spec.estimand = Estimand::WaldMarginal;
    else if (e == "arm-wald") spec.estimand = Estimand::ArmWald;
    else if (e == "arm-median") spec.estimand = Estimand::ArmMedian;
    else if (e == "median-nte") spec.estimand = Estimand::MedianNte;
    else if (e == "contrast") spec.estimand = Estimand::Contrast;
    else throw UsageError("--estimand: unknown estimand '" + e + "'");
    spec.arm = o.arm;
    spec.h = flag_value("--h", [&] { return Functional::parse(o.h); });
    spec.v = o.v;
    if (o.scale == "difference") spec.scale = ContrastScale::Difference;
    else if (o.scale == "ratio") spec.scale = ContrastScale::Ratio;
    else if (o.scale == "odds-ratio") spec.scale = ContrastScale::OddsRatio;
    else throw UsageError("--scale: unknown scale '" + o.scale + "'");
    return spec;
}

BootstrapConfig bootstrap_config(const Options& o, const Globals& g, std::size_t default_b) {
    BootstrapConfig cfg;
    cfg.B = o.bootstrap ? o.bootstrap : default_b;
    cfg.seed = g.seed;
    cfg.ci_level = o.ci_level;
    flag_value("--bootstrap", [&] {
        cfg.check();
        return 0;
    });
    return cfg;
}

ValidatedScenario scenario_at(const std::string& path) { return load_scenario(path); }

void do_simulate(const Options& o, const Globals& g, std::ostream& out) {
    if (g.out.empty()) throw UsageError("simulate needs --out PREFIX");
    const auto s = scenario_at(o.scenario);
    const auto panel = simulate_panel(s, o.n, g.seed, g.workers);
    const auto data = observe(panel);
    const std::string panel_path = g.out + ".panel.csv";
    const std::string observed_path = g.out + ".observed.csv";
    write_panel(panel, panel_path);
    write_dataset(data, observed_path);
    if (g.quiet) return;
    std::size_t nudge = 0;
    for (const auto& r : panel.rows) nudge += r.nudge ? 1 : 0;
    print_table(out, {{"scenario", s->name},
                      {"rows", std::to_string(panel.rows.size())},
                      {"seed", std::to_string(g.seed)},
                      {"nudge-able rows", std::to_string(nudge)},
                      {"panel", panel_path},
                      {"observed", observed_path}});
}

void do_estimate(const Options& o, const Globals& g, std::ostream& out, std::ostream& err) {
    const auto spec = estimator_spec(o);
    const auto data = read_dataset(o.data, {}, g.quiet ? nullptr : &err);
    EstimateReport report = o.bootstrap ? estimate_with_bootstrap(data, spec, bootstrap_config(o, g, 0), g.workers)
                                        : estimate(data, spec);
    Json j = to_json(report);
    j["first_stage_diagnostics"] = to_json(first_stage_diagnostics(data, spec.v, spec.options));
    Table t{{"estimand", report.estimand}, {"n", std::to_string(report.n)}, {"point", num(report.point)},
            {"first stage", num(report.first_stage)}};
    if (report.bootstrap) {
        t.emplace_back("bootstrap se", num(report.bootstrap->se));
        t.emplace_back("ci", "[" + num(report.bootstrap->ci_lo) + ", " + num(report.bootstrap->ci_hi) + "]");
    }
    for (const auto& w : report.warnings) t.emplace_back("warning", w);
    emit(j, t, g, out);
}

void do_oracle(const Options& o, const Globals& g, std::ostream& out) {
    const auto s = scenario_at(o.scenario);
    CausalTarget target = flag_value("--target", [&] { return CausalTarget::parse(o.target); });
    if (!o.stratum.empty()) target = target.given(o.stratum);
    const Conditioning v = target.stratum;
    const double truth = true_target(s, target);
    const double identified = identified_value(s, target);
    const double wald = exact_wald(s, v);
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["scenario"] = s->name;
    j["target"] = target.label();
    j["truth"] = truth;
    j["identified"] = identified;
    j["gap"] = std::abs(identified - truth);
    j["wald"] = wald;
    emit(j,
         {{"scenario", s->name},
          {"target", target.label()},
          {"truth", num(truth)},
          {"identified", num(identified)},
          {"gap", num(std::abs(identified - truth))},
          {"wald", num(wald)}},
         g, out);
}

void do_check(const Options& o, const Globals& g, std::ostream& out) {
    const auto s = scenario_at(o.scenario);
    Conditioning v;
    if (!o.stratum.empty()) {
        flag_value("--stratum", [&] { return s->stratum_index(o.stratum); });
        v = o.stratum;
    }
    const auto report = check_conditions(s, v);
    const auto decomposition = wald_decomposition(s, v);
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["scenario"] = s->name;
    j["stratum"] = v ? Json(*v) : Json(nullptr);
    j["conditions"] = to_json(report);
    j["decomposition"] = to_json(decomposition);
    emit(j,
         {{"scenario", s->name},
          {"null_cov", num(report.null_cov)},
          {"bcs_max_dev", num(report.bcs_max_dev)},
          {"relevance_ok", report.relevance_ok ? "true" : "false"},
          {"nudge share", num(report.nudge_share)},
          {"complier share", num(report.complier_share)},
          {"defier share", num(report.defier_share)}},
         g, out);
}

void do_bounds(const Options& o, const Globals& g, std::ostream& out, std::ostream& err) {
    const auto data = read_dataset(o.data, {}, g.quiet ? nullptr : &err);
    const auto report = frechet_bounds(data, o.v);
    Json j = to_json(report);
    j["first_stage_diagnostics"] = to_json(first_stage_diagnostics(data, o.v));
    Table t;
    for (const auto& [label, b] : report.levels) {
        t.emplace_back(label + " complier", "[" + num(b.complier_lo) + ", " + num(b.complier_hi) + "]");
        t.emplace_back(label + " defier", "[" + num(b.defier_lo) + ", " + num(b.defier_hi) + "]");
        t.emplace_back(label + " nudge-able", "[" + num(b.nudge_lo) + ", " + num(b.nudge_hi) + "]");
    }
    emit(j, t, g, out);
}

void do_mc_study(const Options& o, const Globals& g, std::ostream& out, std::ostream& err) {
    const auto spec = estimator_spec(o);
    const auto s = scenario_at(o.scenario);
    CausalTarget target = o.target.empty() ? flag_value("--estimand", [&] { return default_target(spec); })
                                           : flag_value("--target", [&] { return CausalTarget::parse(o.target); });
    const auto cfg = bootstrap_config(o, g, 1000);
    McStudyOptions opts;
    opts.workers = g.workers;
    opts.progress = g.quiet ? nullptr : &err;
    const auto result = mc_study(s, spec, target, o.n, o.reps, cfg, opts);
    emit(to_json(result),
         {{"estimator", result.estimator},
          {"target", result.target},
          {"truth", num(result.truth)},
          {"replications", std::to_string(result.replications)},
          {"failures", std::to_string(result.failures)},
          {"bias", num(result.bias)},
          {"sd", num(result.sd)},
          {"rmse", num(result.rmse)},
          {"coverage", num(result.coverage)},
          {"mean ci width", num(result.mean_ci_width)}},
         g, out);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Instrumental-variable estimands under generalized latent index models", "nudge-iv"};
    app.set_help_flag("--help", "Print this help message and exit");
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    Options o;
    auto* seed_opt = app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--out", g.out, "Report file (simulate: output prefix)");
    app.add_flag("--quiet", g.quiet, "No table or progress output");

    auto* simulate = app.add_subcommand("simulate", "Simulate a counterfactual panel and its observed data");
    simulate->add_option("--scenario", o.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    simulate->add_option("--n", o.n, "Rows")->required();

    auto add_estimator_flags = [&](CLI::App* cmd) {
        cmd->add_option("--estimand", o.estimand,
                        "wald | wald-marginal | arm-wald | arm-median | median-nte | contrast")
            ->required();
        cmd->add_option("--arm", o.arm, "Treatment arm for arm-specific estimands")->check(CLI::Range(0, 1));
        cmd->add_option("--h", o.h, "identity | square | one | const:C | leq:C | table:X=Y,...");
        cmd->add_option("--v", o.v, "Conditioning covariate columns")->delimiter(',');
        cmd->add_option("--scale", o.scale, "difference | ratio | odds-ratio");
        cmd->add_option("--ci-level", o.ci_level, "Bootstrap confidence level");
    };

    auto* est = app.add_subcommand("estimate", "Estimate from an observed CSV");
    est->add_option("--data", o.data, "Observed CSV")->required()->check(CLI::ExistingFile);
    add_estimator_flags(est);
    est->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates");

    auto* oracle = app.add_subcommand("oracle", "Exact value of a causal target");
    oracle->add_option("--scenario", o.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    oracle->add_option("--target", o.target, "late | nate | ate | att | mean:A[:POP] | quantile:A:Q[:POP] | ...")
        ->required();
    oracle->add_option("--stratum", o.stratum, "Condition on this covariate stratum");

    auto* check = app.add_subcommand("check", "Identification conditions of a scenario");
    check->add_option("--scenario", o.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    check->add_option("--stratum", o.stratum, "Condition on this covariate stratum");

    auto* bounds = app.add_subcommand("bounds", "Bounds on compliance shares");
    bounds->add_option("--data", o.data, "Observed CSV")->required()->check(CLI::ExistingFile);
    bounds->add_option("--v", o.v, "Conditioning covariate columns")->delimiter(',');

    auto* mc = app.add_subcommand("mc-study", "Monte Carlo study against the oracle");
    mc->add_option("--scenario", o.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    add_estimator_flags(mc);
    mc->add_option("--n", o.n, "Rows per replication")->required();
    mc->add_option("--reps", o.reps, "Replications")->required();
    mc->add_option("--bootstrap", o.bootstrap, "Bootstrap replicates (default 1000)");
    mc->add_option("--target", o.target, "Target (default: the estimator's natural target)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
        if ((simulate->parsed() || mc->parsed()) && seed_opt->count() == 0)
            throw UsageError("--seed is required by simulate and mc-study");
        const auto workers = threads_from_env();
        if (!workers) throw UsageError("NUDGE_IV_THREADS must be a positive integer");
        g.workers = *workers;

        if (simulate->parsed()) do_simulate(o, g, out);
        else if (est->parsed()) do_estimate(o, g, out, err);
        else if (oracle->parsed()) do_oracle(o, g, out);
        else if (check->parsed()) do_check(o, g, out);
        else if (bounds->parsed()) do_bounds(o, g, out, err);
        else if (mc->parsed()) do_mc_study(o, g, out, err);
        return kOk;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kUsageError;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return kUsageError;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kDomainError;
    }
}

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace nudge::cli
