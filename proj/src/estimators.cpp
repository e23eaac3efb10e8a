#include "nudge/estimators.hpp"

#include "nudge/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>

namespace nudge {

namespace {

constexpr int kAllLevels = -1;

std::string join_level(const std::vector<const Covariate*>& cols, const std::vector<int>& codes) {
    std::string out;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (j) out += ',';
        out += cols[j]->name + "=" + cols[j]->levels[static_cast<std::size_t>(codes[j])];
    }
    return out;
}

// Dense ids for the distinct combinations of `cols`, in label order.
struct Cells {
    std::vector<int> of_row;
    std::vector<std::vector<int>> codes;  // per cell, one code per column
};

Cells make_cells(const ObservedDataset& data, const std::vector<const Covariate*>& cols) {
    const auto n = static_cast<std::size_t>(data.size());
    Cells cells;
    cells.of_row.assign(n, 0);
    if (cols.empty()) {
        cells.codes.emplace_back();
        return cells;
    }
    // Mixed-radix key, first column most significant, so key order is label order.
    std::vector<std::uint64_t> keys(n, 0);
    for (const auto* c : cols) {
        const auto radix = static_cast<std::uint64_t>(c->levels.size());
        for (std::size_t i = 0; i < n; ++i)
            keys[i] = keys[i] * radix + static_cast<std::uint64_t>(c->codes(static_cast<Eigen::Index>(i)));
    }
    std::vector<std::uint64_t> unique = keys;
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (std::size_t i = 0; i < n; ++i)
        cells.of_row[i] = static_cast<int>(std::lower_bound(unique.begin(), unique.end(), keys[i]) - unique.begin());
    cells.codes.assign(unique.size(), std::vector<int>(cols.size(), 0));
    for (std::size_t i = 0; i < n; ++i) {
        auto& codes = cells.codes[static_cast<std::size_t>(cells.of_row[i])];
        for (std::size_t j = 0; j < cols.size(); ++j) codes[j] = cols[j]->codes(static_cast<Eigen::Index>(i));
    }
    return cells;
}

std::vector<const Covariate*> resolve(const ObservedDataset& data, const std::vector<std::string>& names) {
    std::vector<const Covariate*> out;
    for (const auto& name : names) out.push_back(&data.covariate(name));
    return out;
}

// Stratified (g-formula) weights. For a level v of V and arm z, the weights
// w_i satisfy sum_i w_i f_i = sum_{l in v} (n_l / n_v) * mean(f | Z = z, L = l).
class Stratification {
public:
    Stratification(const ObservedDataset& data, bool adjust, const std::vector<std::string>& v)
        : data_(data), adjust_(adjust) {
        const auto v_cols = resolve(data, v);
        std::vector<const Covariate*> l_cols;
        if (adjust) {
            for (const auto& c : data.covariates) l_cols.push_back(&c);
        }
        for (const auto* c : v_cols)
            if (adjust && std::find(l_cols.begin(), l_cols.end(), c) == l_cols.end())
                throw Error(ErrorKind::SchemaError, "V must be a subset of the covariates", c->name);

        l_cells_ = make_cells(data, l_cols);
        const Cells v_cells = make_cells(data, v_cols);
        l_cols_ = l_cols;
        for (const auto& codes : v_cells.codes) v_labels_.push_back(join_level(v_cols, codes));
        v_of_row_ = v_cells.of_row;

        const std::size_t cells = l_cells_.codes.size();
        count_.assign(cells, {0, 0});
        v_of_cell_.assign(cells, 0);
        for (std::size_t i = 0; i < v_of_row_.size(); ++i) {
            const auto c = static_cast<std::size_t>(l_cells_.of_row[i]);
            ++count_[c][static_cast<std::size_t>(data.z(static_cast<Eigen::Index>(i)))];
            v_of_cell_[c] = v_of_row_[i];
        }
        level_n_.assign(v_labels_.size(), 0);
        for (int v_id : v_of_row_) ++level_n_[static_cast<std::size_t>(v_id)];
    }

    int levels() const { return static_cast<int>(v_labels_.size()); }
    const std::string& label(int level) const { return v_labels_[static_cast<std::size_t>(level)]; }
    Eigen::Index size(int level) const {
        return level == kAllLevels ? data_.size() : level_n_[static_cast<std::size_t>(level)];
    }

    // Throws when an L-cell inside the level is missing an arm.
    void require_arms(int level) const {
        for (std::size_t c = 0; c < count_.size(); ++c) {
            if (level != kAllLevels && v_of_cell_[c] != level) continue;
            for (int z : {0, 1}) {
                if (count_[c][static_cast<std::size_t>(z)] > 0) continue;
                if (!adjust_ || l_cols_.empty())
                    throw Error(ErrorKind::MissingArm, "no rows with Z = " + std::to_string(z),
                                level == kAllLevels ? "" : label(level));
                throw Error(ErrorKind::EmptyStratum, "no rows with Z = " + std::to_string(z),
                            join_level(l_cols_, l_cells_.codes[c]));
            }
        }
    }

    // Standardized mean of f among Z = z rows: cell means from sums, then
    // averaged with weights n_l / n_v.
    double arm_mean(int level, int z, const Eigen::VectorXd& f) const {
        require_arms(level);
        std::vector<double> sum(count_.size(), 0.0);
        for (Eigen::Index i = 0; i < data_.size(); ++i) {
            const auto r = static_cast<std::size_t>(i);
            if (data_.z(i) != z || (level != kAllLevels && v_of_row_[r] != level)) continue;
            sum[static_cast<std::size_t>(l_cells_.of_row[r])] += f(i);
        }
        const double n_level = static_cast<double>(size(level));
        double total = 0.0;
        for (std::size_t c = 0; c < count_.size(); ++c) {
            if (level != kAllLevels && v_of_cell_[c] != level) continue;
            const auto& cnt = count_[c];
            const double share = static_cast<double>(cnt[0] + cnt[1]) / n_level;
            total += share * (sum[c] / static_cast<double>(cnt[static_cast<std::size_t>(z)]));
        }
        return total;
    }

    // E(f^{z=1} | v) - E(f^{z=0} | v).
    double contrast(int level, const Eigen::VectorXd& f) const { return arm_mean(level, 1, f) - arm_mean(level, 0, f); }

    // Row weights w with w . f = contrast(level, f).
    Eigen::VectorXd contrast_weights(int level) const {
        require_arms(level);
        const Eigen::Index n = data_.size();
        const double n_level = static_cast<double>(size(level));
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto r = static_cast<std::size_t>(i);
            if (level != kAllLevels && v_of_row_[r] != level) continue;
            const auto& cnt = count_[static_cast<std::size_t>(l_cells_.of_row[r])];
            const double share = static_cast<double>(cnt[0] + cnt[1]) / n_level;
            const int z = data_.z(i);
            w(i) = (z == 1 ? share : -share) / static_cast<double>(cnt[static_cast<std::size_t>(z)]);
        }
        return w;
    }

private:
    const ObservedDataset& data_;
    bool adjust_;
    std::vector<const Covariate*> l_cols_;
    Cells l_cells_;
    std::vector<int> v_of_row_;
    std::vector<std::string> v_labels_;
    std::vector<std::array<Eigen::Index, 2>> count_;
    std::vector<int> v_of_cell_;
    std::vector<Eigen::Index> level_n_;
};

std::vector<std::string> all_covariates(const ObservedDataset& data) {
    std::vector<std::string> names;
    for (const auto& c : data.covariates) names.push_back(c.name);
    return names;
}

bool multi_cell(const ObservedDataset& data) {
    for (const auto& c : data.covariates)
        if (c.levels.size() > 1) return true;
    return false;
}

// A statistic computed from contrast weights: value and first stage.
using LevelStatistic = std::function<std::pair<double, double>(const Stratification&, int level)>;

void check_first_stage(double den, const EstimatorOptions& opts, const std::string& where,
                       std::vector<std::string>& warnings) {
    if (!(std::abs(den) >= opts.floor))
        throw Error(ErrorKind::DegenerateFirstStage, "first stage " + std::to_string(den) + " is numerically zero",
                    where);
    if (std::abs(den) < opts.weak_threshold)
        warnings.push_back("weak first stage " + std::to_string(den) + (where.empty() ? "" : " in " + where));
}

// Runs `stat` on the marginal level and on every level of V. With V empty and
// more than one L-cell, levels are the L-cells and failures there become
// warnings instead of errors.
EstimateReport stratified_report(const ObservedDataset& data, bool adjust, const std::vector<std::string>& v,
                                 const std::string& estimand, const EstimatorOptions& opts,
                                 const LevelStatistic& stat) {
    data.check();
    resolve(data, v);
    EstimateReport report;
    report.estimand = estimand;
    report.n = data.size();

    const Stratification marginal(data, adjust, {});
    const auto [point, den] = stat(marginal, kAllLevels);
    check_first_stage(den, opts, "", report.warnings);
    report.point = point;
    report.first_stage = den;

    const bool explicit_v = !v.empty();
    if (!adjust || (!explicit_v && !multi_cell(data))) return report;
    const Stratification by_level(data, adjust, explicit_v ? v : all_covariates(data));
    for (int level = 0; level < by_level.levels(); ++level) {
        StratumEstimate entry;
        entry.n = by_level.size(level);
        try {
            const auto [p, d] = stat(by_level, level);
            entry.first_stage = d;
            check_first_stage(d, opts, by_level.label(level), report.warnings);
            entry.point = p;
        } catch (const Error& e) {
            if (explicit_v) throw;
            report.warnings.push_back(e.what());
        }
        report.per_stratum.emplace(by_level.label(level), entry);
    }
    return report;
}

Eigen::VectorXd arm_indicator(const ObservedDataset& data, int arm) {
    return (data.a.array() == arm).cast<double>().matrix();
}

LevelStatistic arm_wald_statistic(const ObservedDataset& data, int arm, const Functional& h) {
    const Eigen::VectorXd indicator = arm_indicator(data, arm);
    Eigen::VectorXd weighted(data.size());
    for (Eigen::Index i = 0; i < data.size(); ++i) weighted(i) = indicator(i) == 0.0 ? 0.0 : h(data.y(i));
    return [indicator, weighted](const Stratification& s, int level) {
        const double den = s.contrast(level, indicator);
        return std::pair{s.contrast(level, weighted) / den, den};
    };
}

bool binary_outcome(const ObservedDataset& data) {
    return (data.y.array() == 0.0 || data.y.array() == 1.0).all();
}

}  // namespace

ShareBounds frechet_from_margins(double pi1, double pi0) {
    ShareBounds b;
    b.pi1 = pi1;
    b.pi0 = pi0;
    b.defier_lo = std::max(0.0, pi0 - pi1);
    b.defier_hi = std::min(1.0 - pi1, pi0);
    b.complier_lo = std::max(0.0, pi1 - pi0);
    b.complier_hi = std::min(pi1, 1.0 - pi0);
    b.nudge_lo = b.complier_lo + b.defier_lo;
    b.nudge_hi = b.complier_hi + b.defier_hi;
    return b;
}

EstimateReport wald_marginal(const ObservedDataset& data, const EstimatorOptions& opts) {
    const Eigen::VectorXd a = data.a.cast<double>();
    return stratified_report(data, false, {}, "wald-marginal", opts, [&](const Stratification& s, int level) {
        const double den = s.contrast(level, a);
        return std::pair{s.contrast(level, data.y) / den, den};
    });
}

EstimateReport wald_conditional(const ObservedDataset& data, const std::vector<std::string>& v,
                                const EstimatorOptions& opts) {
    const Eigen::VectorXd a = data.a.cast<double>();
    return stratified_report(data, true, v, "wald", opts, [&](const Stratification& s, int level) {
        const double den = s.contrast(level, a);
        return std::pair{s.contrast(level, data.y) / den, den};
    });
}

EstimateReport arm_wald(const ObservedDataset& data, int arm, const Functional& h, const std::vector<std::string>& v,
                        const EstimatorOptions& opts) {
    if (arm != 0 && arm != 1) throw Error(ErrorKind::InvalidConfig, "arm must be 0 or 1");
    return stratified_report(data, true, v, "arm-wald:" + std::to_string(arm) + ":" + h.description(), opts,
                             arm_wald_statistic(data, arm, h));
}

std::string_view to_string(ContrastScale scale) {
    switch (scale) {
        case ContrastScale::Difference: return "difference";
        case ContrastScale::Ratio: return "ratio";
        case ContrastScale::OddsRatio: return "odds_ratio";
    }
    return "?";
}

EstimateReport effect_contrast(const ObservedDataset& data, ContrastScale scale, const std::vector<std::string>& v,
                               const EstimatorOptions& opts) {
    if (scale != ContrastScale::Difference && !binary_outcome(data))
        throw Error(ErrorKind::InvalidScale, std::string(to_string(scale)) + " needs a binary outcome");
    const auto mu1 = arm_wald_statistic(data, 1, Functional::identity());
    const auto mu0 = arm_wald_statistic(data, 0, Functional::identity());
    return stratified_report(
        data, true, v, "contrast:" + std::string(to_string(scale)), opts, [&](const Stratification& s, int level) {
            const auto [m1, den] = mu1(s, level);
            const auto [m0, den0] = mu0(s, level);
            (void)den0;
            if (scale == ContrastScale::Difference) return std::pair{m1 - m0, den};
            if (!(m1 > 0.0 && m1 < 1.0 && m0 > 0.0 && m0 < 1.0))
                throw Error(ErrorKind::InvalidScale, "counterfactual means " + std::to_string(m1) + ", " +
                                                         std::to_string(m0) + " leave (0, 1)");
            if (scale == ContrastScale::Ratio) return std::pair{m1 / m0, den};
            return std::pair{(m1 / (1.0 - m1)) / (m0 / (1.0 - m0)), den};
        });
}

namespace {

// Smallest observed y (within the level) where the plug-in moment
// G(c) = F(c) - 1/2 goes from negative to nonnegative.
std::pair<double, double> median_scan(const ObservedDataset& data, const Stratification& s, int level, int arm) {
    const Eigen::VectorXd c = s.contrast_weights(level);
    const Eigen::VectorXd coef = c.cwiseProduct(arm_indicator(data, arm));
    const double den = coef.sum();

    std::vector<Eigen::Index> rows;
    rows.reserve(static_cast<std::size_t>(data.size()));
    for (Eigen::Index i = 0; i < data.size(); ++i)
        if (c(i) != 0.0) rows.push_back(i);
    std::sort(rows.begin(), rows.end(), [&](Eigen::Index i, Eigen::Index j) {
        return data.y(i) < data.y(j) || (data.y(i) == data.y(j) && i < j);
    });

    std::size_t distinct = 0;
    for (std::size_t k = 0; k < rows.size(); ++k)
        if (k == 0 || data.y(rows[k]) != data.y(rows[k - 1])) ++distinct;
    if (distinct > kMaxMedianGrid)
        throw Error(ErrorKind::GridTooLarge, std::to_string(distinct) + " distinct outcome values exceed the cap");
    if (std::abs(den) < 1e-300) return {std::numeric_limits<double>::quiet_NaN(), den};

    double cumulative = 0.0;
    bool negative_seen = false;
    for (std::size_t k = 0; k < rows.size();) {
        const double value = data.y(rows[k]);
        for (; k < rows.size() && data.y(rows[k]) == value; ++k) cumulative += coef(rows[k]);
        const double moment = cumulative / den - 0.5;
        if (moment < 0.0) {
            negative_seen = true;
        } else if (negative_seen) {
            return {value, den};
        }
    }
    throw Error(ErrorKind::NoSignChange, "estimated moment for arm " + std::to_string(arm) +
                                             " keeps one sign over the observed outcomes",
                level == kAllLevels ? "" : s.label(level));
}

}  // namespace

EstimateReport arm_median(const ObservedDataset& data, int arm, const std::vector<std::string>& v,
                          const EstimatorOptions& opts) {
    if (arm != 0 && arm != 1) throw Error(ErrorKind::InvalidConfig, "arm must be 0 or 1");
    return stratified_report(data, true, v, "arm-median:" + std::to_string(arm), opts,
                             [&](const Stratification& s, int level) { return median_scan(data, s, level, arm); });
}

EstimateReport median_nte(const ObservedDataset& data, const std::vector<std::string>& v,
                          const EstimatorOptions& opts) {
    return stratified_report(data, true, v, "median-nte", opts, [&](const Stratification& s, int level) {
        const auto [q1, den] = median_scan(data, s, level, 1);
        const auto [q0, den0] = median_scan(data, s, level, 0);
        (void)den0;
        return std::pair{q1 - q0, den};
    });
}

BoundsReport frechet_bounds(const ObservedDataset& data, const std::vector<std::string>& v) {
    data.check();
    const Eigen::VectorXd a = data.a.cast<double>();
    BoundsReport report;
    report.n = data.size();
    auto margins = [&](const Stratification& s, int level) {
        return frechet_from_margins(s.arm_mean(level, 1, a), s.arm_mean(level, 0, a));
    };
    const Stratification marginal(data, true, {});
    report.levels.emplace(kMarginal, margins(marginal, kAllLevels));
    if (!v.empty()) {
        const Stratification by_level(data, true, v);
        for (int level = 0; level < by_level.levels(); ++level)
            report.levels.emplace(by_level.label(level), margins(by_level, level));
    }
    return report;
}

std::map<std::string, FirstStageDiagnostic> first_stage_diagnostics(const ObservedDataset& data,
                                                                    const std::vector<std::string>& v,
                                                                    const EstimatorOptions& opts) {
    data.check();
    const Cells cells = make_cells(data, resolve(data, v));
    const auto cols = resolve(data, v);
    const std::size_t levels = cells.codes.size();
    std::vector<std::array<double, 2>> treated(levels, {0.0, 0.0});
    std::vector<std::array<Eigen::Index, 2>> count(levels, {0, 0});
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        const auto c = static_cast<std::size_t>(cells.of_row[static_cast<std::size_t>(i)]);
        const auto z = static_cast<std::size_t>(data.z(i));
        ++count[c][z];
        treated[c][z] += data.a(i);
    }
    auto summarize = [&](std::array<double, 2> t, std::array<Eigen::Index, 2> n) {
        FirstStageDiagnostic d;
        d.n1 = n[1];
        d.n0 = n[0];
        d.n = n[0] + n[1];
        if (n[1] > 0) d.pi1 = t[1] / static_cast<double>(n[1]);
        if (n[0] > 0) d.pi0 = t[0] / static_cast<double>(n[0]);
        d.denominator = d.pi1 - d.pi0;
        d.weak = !(std::abs(d.denominator) >= opts.weak_threshold);
        return d;
    };
    std::map<std::string, FirstStageDiagnostic> out;
    std::array<double, 2> total_t{0.0, 0.0};
    std::array<Eigen::Index, 2> total_n{0, 0};
    for (std::size_t c = 0; c < levels; ++c) {
        for (std::size_t z : {0u, 1u}) {
            total_t[z] += treated[c][z];
            total_n[z] += count[c][z];
        }
        if (!v.empty()) out.emplace(join_level(cols, cells.codes[c]), summarize(treated[c], count[c]));
    }
    out.emplace(kMarginal, summarize(total_t, total_n));
    return out;
}

std::string_view to_string(Estimand e) {
    switch (e) {
        case Estimand::WaldMarginal: return "wald-marginal";
        case Estimand::Wald: return "wald";
        case Estimand::ArmWald: return "arm-wald";
        case Estimand::ArmMedian: return "arm-median";
        case Estimand::MedianNte: return "median-nte";
        case Estimand::Contrast: return "contrast";
    }
    return "?";
}

std::string EstimatorSpec::label() const {
    switch (estimand) {
        case Estimand::ArmWald: return "arm-wald:" + std::to_string(arm) + ":" + h.description();
        case Estimand::ArmMedian: return "arm-median:" + std::to_string(arm);
        case Estimand::Contrast: return "contrast:" + std::string(to_string(scale));
        default: return std::string(to_string(estimand));
    }
}

EstimateReport estimate(const ObservedDataset& data, const EstimatorSpec& spec) {
    switch (spec.estimand) {
        case Estimand::WaldMarginal: return wald_marginal(data, spec.options);
        case Estimand::Wald: return wald_conditional(data, spec.v, spec.options);
        case Estimand::ArmWald: return arm_wald(data, spec.arm, spec.h, spec.v, spec.options);
        case Estimand::ArmMedian: return arm_median(data, spec.arm, spec.v, spec.options);
        case Estimand::MedianNte: return median_nte(data, spec.v, spec.options);
        case Estimand::Contrast: return effect_contrast(data, spec.scale, spec.v, spec.options);
    }
    throw Error(ErrorKind::InvalidConfig, "unknown estimand");
}

}  // namespace nudge
