#include "nudge/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace nudge {

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
std::pair<double, double> legendre(std::size_t n, double x) {
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
    }
    const double dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    return {p1, dp};
}

}  // namespace

GaussRule gauss_legendre(std::size_t order) {
    const auto n = static_cast<Eigen::Index>(order);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (Eigen::Index k = 1; k < n; ++k) sub(k - 1) = k / std::sqrt(4.0 * k * k - 1.0);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);

    GaussRule rule{solver.eigenvalues(), Eigen::VectorXd(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        double x = rule.nodes(i);
        for (int it = 0; it < 3; ++it) {
            const auto [p, dp] = legendre(order, x);
            x -= p / dp;
        }
        const auto [p, dp] = legendre(order, x);
        rule.nodes(i) = x;
        rule.weights(i) = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

const GaussRule& default_rule() {
    static const GaussRule rule = gauss_legendre(kQuadratureNodes);
    return rule;
}

WeightedPoints uniform_nodes(double lo, double hi, std::span<const double> breakpoints,
                             const GaussRule& rule) {
    std::vector<double> cuts{lo};
    for (double b : breakpoints)
        if (b > lo && b < hi) cuts.push_back(b);
    cuts.push_back(hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    WeightedPoints out;
    const double width = hi - lo;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double a = cuts[k], b = cuts[k + 1];
        const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
        for (Eigen::Index i = 0; i < rule.nodes.size(); ++i) {
            out.points.push_back(mid + half * rule.nodes(i));
            out.weights.push_back(half * rule.weights(i) / width);
        }
    }
    return out;
}

}  // namespace nudge
