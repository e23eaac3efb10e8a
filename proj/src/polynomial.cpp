#include "nudge/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace nudge {

namespace {

std::vector<double> real_roots(Eigen::VectorXd c, double lo, double hi) {
    Eigen::Index deg = c.size() - 1;
    while (deg >= 0 && c(deg) == 0.0) --deg;
    std::vector<double> roots;
    if (deg <= 0) return roots;
    if (deg == 1) {
        roots.push_back(-c(0) / c(1));
    } else {
        // Companion matrix of the monic polynomial.
        Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
        companion.bottomLeftCorner(deg - 1, deg - 1).setIdentity();
        for (Eigen::Index k = 0; k < deg; ++k) companion(k, deg - 1) = -c(k) / c(deg);
        Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
        const auto& ev = solver.eigenvalues();
        const double scale = 1.0 + ev.cwiseAbs().maxCoeff();
        for (Eigen::Index k = 0; k < ev.size(); ++k) {
            if (std::abs(ev(k).imag()) > 1e-9 * scale) continue;
            double x = ev(k).real();
            // Polish against the original coefficients.
            for (int it = 0; it < 4; ++it) {
                double p = 0.0, dp = 0.0;
                for (Eigen::Index j = deg; j >= 0; --j) {
                    dp = dp * x + p;
                    p = p * x + c(j);
                }
                if (dp == 0.0) break;
                x -= p / dp;
            }
            roots.push_back(x);
        }
    }
    std::erase_if(roots, [&](double r) { return !(r > lo && r < hi); });
    std::sort(roots.begin(), roots.end());
    return roots;
}

}  // namespace

int Polynomial::degree() const {
    for (Eigen::Index k = coef_.size(); k-- > 0;)
        if (coef_(k) != 0.0) return static_cast<int>(k);
    return -1;
}

std::vector<double> Polynomial::solve_in(double level, double lo, double hi) const {
    if (coef_.size() == 0) return {};
    Eigen::VectorXd shifted = coef_;
    shifted(0) -= level;
    return real_roots(shifted, lo, hi);
}

std::vector<double> Polynomial::critical_points(double lo, double hi) const {
    if (coef_.size() < 2) return {};
    Eigen::VectorXd derivative(coef_.size() - 1);
    for (Eigen::Index k = 1; k < coef_.size(); ++k) derivative(k - 1) = k * coef_(k);
    return real_roots(derivative, lo, hi);
}

}  // namespace nudge
