#ifndef NUDGE_FUNCTIONAL_HPP
#define NUDGE_FUNCTIONAL_HPP

#include <string>
#include <vector>

namespace nudge {

// The h(y) of an arm-specific Wald functional.
struct Functional {
    enum class Kind { Identity, Square, IndicatorLeq, Constant, Tabulated };

    Kind kind = Kind::Identity;
    double level = 0.0;         // threshold for IndicatorLeq, value for Constant
    std::vector<double> knots;  // Tabulated: ascending y knots
    std::vector<double> values; // Tabulated: h at each knot, linear in between, flat outside

    static Functional identity() { return {}; }
    static Functional square() { return {Kind::Square, 0.0, {}, {}}; }
    static Functional one() { return {Kind::Constant, 1.0, {}, {}}; }
    static Functional constant(double c) { return {Kind::Constant, c, {}, {}}; }
    static Functional indicator_leq(double c) { return {Kind::IndicatorLeq, c, {}, {}}; }
    static Functional tabulated(std::vector<double> knots, std::vector<double> values);

    double operator()(double y) const;

    // E h(Y) for Y ~ N(mean, sd^2); sd = 0 evaluates h(mean).
    double gaussian_expectation(double mean, double sd) const;

    // Points where h is not smooth (kinks or jumps).
    std::vector<double> breakpoints() const;

    // Text form accepted by parse(): identity, square, one, const:C, leq:C,
    // table:X1=Y1,X2=Y2,...
    std::string description() const;
    static Functional parse(const std::string& text);
};

}  // namespace nudge

#endif  // NUDGE_FUNCTIONAL_HPP
