#ifndef NUDGE_QUADRATURE_HPP
#define NUDGE_QUADRATURE_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace nudge {

inline constexpr std::size_t kQuadratureNodes = 256;

struct GaussRule {
    Eigen::VectorXd nodes;    // on [-1, 1], ascending
    Eigen::VectorXd weights;  // sum to 2
};

// Gauss-Legendre rule of the given order. Nodes come from the Golub-Welsch
// eigenproblem and are then refined by Newton steps on P_n.
GaussRule gauss_legendre(std::size_t order);

// Cached 256-node rule.
const GaussRule& default_rule();

struct WeightedPoints {
    std::vector<double> points;
    std::vector<double> weights;
};

// Probability weights for Uniform(lo, hi): the interval is cut at every
// breakpoint strictly inside it and each piece gets its own Gauss rule, so
// integrands that are smooth between breakpoints are integrated to rule
// precision. Weights sum to one.
WeightedPoints uniform_nodes(double lo, double hi, std::span<const double> breakpoints,
                             const GaussRule& rule = default_rule());

}  // namespace nudge

#endif  // NUDGE_QUADRATURE_HPP
