#include "nudge/inference.hpp"

#include "nudge/error.hpp"
#include "nudge/parallel.hpp"
#include "nudge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>

namespace nudge {

namespace {

constexpr std::uint64_t kBootstrapSalt = 0xb0075742a9ULL;

double order_statistic(const std::vector<double>& sorted, double rank) {
    // rank is 1-based; clamp into the sample.
    const auto k = static_cast<std::size_t>(std::clamp(std::ceil(rank - 1e-9), 1.0, static_cast<double>(sorted.size())));
    return sorted[k - 1];
}

bool too_many(std::size_t failures, std::size_t total) {
    return static_cast<double>(failures) > kMaxFailureShare * static_cast<double>(total);
}

}  // namespace

void BootstrapConfig::check() const {
    if (B < 2) throw Error(ErrorKind::InvalidConfig, "need at least 2 bootstrap replicates", "B");
    if (!(ci_level > 0.0 && ci_level < 1.0))
        throw Error(ErrorKind::InvalidConfig, "ci_level must lie strictly between 0 and 1", "ci_level");
}

BootstrapSummary bootstrap(const ObservedDataset& data, const EstimatorSpec& spec, const BootstrapConfig& cfg,
                           std::size_t workers) {
    cfg.check();
    estimate(data, spec);  // base-estimate errors propagate

    const auto n = static_cast<std::uint64_t>(data.size());
    std::vector<double> points(cfg.B, std::numeric_limits<double>::quiet_NaN());
    std::vector<char> ok(cfg.B, 0);
    parallel_for(cfg.B, workers, [&](std::size_t b) {
        Stream rng(derive_seed(cfg.seed, b));
        std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
        for (auto& r : rows) r = static_cast<Eigen::Index>(rng.below(n));
        try {
            const double p = estimate(data.take(rows), spec).point;
            if (std::isfinite(p)) {
                points[b] = p;
                ok[b] = 1;
            }
        } catch (const Error&) {
        }
    });

    BootstrapSummary out;
    out.replicates = cfg.B;
    out.seed = cfg.seed;
    out.ci_level = cfg.ci_level;
    std::vector<double> good;
    for (std::size_t b = 0; b < cfg.B; ++b)
        if (ok[b]) good.push_back(points[b]);
    out.failures = cfg.B - good.size();
    if (too_many(out.failures, cfg.B) || good.size() < 2)
        throw Error(ErrorKind::TooManyFailures,
                    std::to_string(out.failures) + " of " + std::to_string(cfg.B) + " bootstrap replicates failed");

    double mean = 0.0;
    for (double p : good) mean += p;
    mean /= static_cast<double>(good.size());
    double ss = 0.0;
    for (double p : good) ss += (p - mean) * (p - mean);
    out.se = std::sqrt(ss / static_cast<double>(good.size() - 1));

    std::sort(good.begin(), good.end());
    const double alpha = 1.0 - cfg.ci_level;
    const auto m = static_cast<double>(good.size());
    out.ci_lo = order_statistic(good, m * alpha / 2.0);
    out.ci_hi = order_statistic(good, m * (1.0 - alpha / 2.0));
    return out;
}

EstimateReport estimate_with_bootstrap(const ObservedDataset& data, const EstimatorSpec& spec,
                                       const BootstrapConfig& cfg, std::size_t workers) {
    EstimateReport report = estimate(data, spec);
    report.bootstrap = bootstrap(data, spec, cfg, workers);
    return report;
}

McStudyResult mc_study(const ValidatedScenario& s, const EstimatorSpec& spec, const CausalTarget& target,
                       std::size_t n, std::size_t R, const BootstrapConfig& cfg, const McStudyOptions& opts) {
    cfg.check();
    if (R == 0) throw Error(ErrorKind::InvalidConfig, "need at least one replication", "R");
    if (n == 0) throw Error(ErrorKind::EmptyPanel, "replications need at least one row", "n");

    McStudyResult out;
    out.estimator = spec.label();
    out.target = target.label();
    out.truth = true_target(s, target);
    out.n = n;

    struct Cycle {
        bool ok = false;
        double point = 0.0, lo = 0.0, hi = 0.0;
    };
    std::vector<Cycle> cycles(R);
    std::mutex progress_lock;
    std::size_t done = 0, reported = 0;

    parallel_for(R, opts.workers, [&](std::size_t r) {
        Cycle c;
        try {
            const std::uint64_t seed = derive_seed(cfg.seed, r);
            const ObservedDataset data = observe(simulate_panel(s, n, seed));
            BootstrapConfig inner = cfg;
            inner.seed = derive_seed(cfg.seed, r, kBootstrapSalt);
            const EstimateReport rep = estimate_with_bootstrap(data, spec, inner, 1);
            c.point = rep.point;
            c.lo = rep.bootstrap->ci_lo;
            c.hi = rep.bootstrap->ci_hi;
            c.ok = std::isfinite(c.point);
        } catch (const Error&) {
        }
        cycles[r] = c;
        if (opts.progress) {
            std::lock_guard lock(progress_lock);
            ++done;
            const std::size_t decile = done * 10 / R;
            if (decile > reported) {
                reported = decile;
                *opts.progress << "mc-study: " << decile * 10 << "% (" << done << "/" << R << ")\n";
            }
        }
    });

    std::size_t good = 0, covered = 0;
    double sum = 0.0, width = 0.0;
    for (const auto& c : cycles) {
        if (!c.ok) continue;
        ++good;
        sum += c.point;
        width += c.hi - c.lo;
        if (c.lo <= out.truth && out.truth <= c.hi) ++covered;
    }
    out.replications = good;
    out.failures = R - good;
    if (too_many(out.failures, R) || good == 0)
        throw Error(ErrorKind::TooManyFailures,
                    std::to_string(out.failures) + " of " + std::to_string(R) + " replications failed");

    const double m = static_cast<double>(good);
    const double mean = sum / m;
    double ss = 0.0;
    for (const auto& c : cycles)
        if (c.ok) ss += (c.point - mean) * (c.point - mean);
    out.bias = mean - out.truth;
    out.sd = std::sqrt(ss / m);
    out.rmse = std::sqrt(out.bias * out.bias + out.sd * out.sd);
    out.coverage = static_cast<double>(covered) / m;
    out.mean_ci_width = width / m;
    return out;
}

CausalTarget default_target(const EstimatorSpec& spec) {
    switch (spec.estimand) {
        case Estimand::WaldMarginal:
        case Estimand::Wald: return CausalTarget::nate();
        case Estimand::ArmWald:
            if (spec.h.kind != Functional::Kind::Identity)
                throw Error(ErrorKind::UndefinedTarget, "no default target for arm-wald with h = " + spec.h.description());
            return CausalTarget::mean(spec.arm, Population::Nudgeable);
        case Estimand::ArmMedian: return CausalTarget::quantile(spec.arm, 0.5);
        case Estimand::MedianNte: return CausalTarget::median_contrast();
        case Estimand::Contrast:
            switch (spec.scale) {
                case ContrastScale::Difference: return CausalTarget::nate();
                case ContrastScale::Ratio: return CausalTarget::risk_ratio();
                case ContrastScale::OddsRatio: return CausalTarget::odds_ratio();
            }
    }
    throw Error(ErrorKind::UndefinedTarget, "no default target");
}

}  // namespace nudge
