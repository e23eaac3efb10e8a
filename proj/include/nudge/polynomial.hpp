#ifndef NUDGE_POLYNOMIAL_HPP
#define NUDGE_POLYNOMIAL_HPP

#include <Eigen/Dense>

#include <vector>

namespace nudge {

// c0 + c1 u + c2 u^2 + ...
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(Eigen::VectorXd coefficients) : coef_(std::move(coefficients)) {}
    Polynomial(std::initializer_list<double> coefficients)
        : coef_(Eigen::Map<const Eigen::VectorXd>(coefficients.begin(),
                                                  static_cast<Eigen::Index>(coefficients.size()))) {}

    double operator()(double u) const {
        double acc = 0.0;
        for (Eigen::Index k = coef_.size(); k-- > 0;) acc = acc * u + coef_(k);
        return acc;
    }

    const Eigen::VectorXd& coefficients() const { return coef_; }

    // Effective degree after dropping trailing zeros; -1 for the zero polynomial.
    int degree() const;

    // Real roots of p(u) = level in the open interval (lo, hi), ascending.
    std::vector<double> solve_in(double level, double lo, double hi) const;

    // Stationary points in (lo, hi); with the endpoints these bound the range.
    std::vector<double> critical_points(double lo, double hi) const;

    friend bool operator==(const Polynomial& a, const Polynomial& b) {
        return a.coef_.size() == b.coef_.size() && a.coef_ == b.coef_;
    }

private:
    Eigen::VectorXd coef_;
};

}  // namespace nudge

#endif  // NUDGE_POLYNOMIAL_HPP
