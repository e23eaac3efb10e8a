#include "nudge/functional.hpp"

#include "nudge/error.hpp"
#include "nudge/math.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace nudge {

namespace {

std::string render(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

double parse_number(const std::string& text, const std::string& whole) {
    double value = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw Error(ErrorKind::SchemaError, "bad number '" + text + "' in functional '" + whole + "'", "--h");
    return value;
}

}  // namespace

Functional Functional::tabulated(std::vector<double> knots, std::vector<double> values) {
    if (knots.empty() || knots.size() != values.size())
        throw Error(ErrorKind::SchemaError, "tabulated functional needs matching, nonempty knots and values");
    for (std::size_t k = 1; k < knots.size(); ++k)
        if (!(knots[k] > knots[k - 1]))
            throw Error(ErrorKind::SchemaError, "tabulated knots must be strictly increasing");
    return {Kind::Tabulated, 0.0, std::move(knots), std::move(values)};
}

double Functional::operator()(double y) const {
    switch (kind) {
        case Kind::Identity: return y;
        case Kind::Square: return y * y;
        case Kind::IndicatorLeq: return y <= level ? 1.0 : 0.0;
        case Kind::Constant: return level;
        case Kind::Tabulated: {
            if (y <= knots.front()) return values.front();
            if (y >= knots.back()) return values.back();
            const auto it = std::upper_bound(knots.begin(), knots.end(), y);
            const auto k = static_cast<std::size_t>(it - knots.begin());
            const double t = (y - knots[k - 1]) / (knots[k] - knots[k - 1]);
            return values[k - 1] + t * (values[k] - values[k - 1]);
        }
    }
    return 0.0;
}

double Functional::gaussian_expectation(double mean, double sd) const {
    if (sd == 0.0) return (*this)(mean);
    switch (kind) {
        case Kind::Identity: return mean;
        case Kind::Square: return mean * mean + sd * sd;
        case Kind::IndicatorLeq: return normal_cdf((level - mean) / sd);
        case Kind::Constant: return level;
        case Kind::Tabulated: {
            auto z = [&](double x) { return (x - mean) / sd; };
            double total = values.front() * normal_cdf(z(knots.front())) +
                           values.back() * (1.0 - normal_cdf(z(knots.back())));
            for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
                const double slope = (values[k + 1] - values[k]) / (knots[k + 1] - knots[k]);
                const double intercept = values[k] - slope * knots[k];
                const double za = z(knots[k]), zb = z(knots[k + 1]);
                const double mass = normal_cdf(zb) - normal_cdf(za);
                // E[Y; a < Y <= b] = mean * mass - sd * (phi(zb) - phi(za))
                const double first = mean * mass - sd * (normal_pdf(zb) - normal_pdf(za));
                total += intercept * mass + slope * first;
            }
            return total;
        }
    }
    return 0.0;
}

std::vector<double> Functional::breakpoints() const {
    if (kind == Kind::IndicatorLeq) return {level};
    if (kind == Kind::Tabulated) return knots;
    return {};
}

std::string Functional::description() const {
    switch (kind) {
        case Kind::Identity: return "identity";
        case Kind::Square: return "square";
        case Kind::IndicatorLeq: return "leq:" + render(level);
        case Kind::Constant: return level == 1.0 ? "one" : "const:" + render(level);
        case Kind::Tabulated: {
            std::string out = "table:";
            for (std::size_t k = 0; k < knots.size(); ++k) {
                if (k) out += ',';
                out += render(knots[k]) + "=" + render(values[k]);
            }
            return out;
        }
    }
    return "?";
}

Functional Functional::parse(const std::string& text) {
    if (text == "identity" || text == "y") return identity();
    if (text == "square") return square();
    if (text == "one") return one();
    if (text.rfind("const:", 0) == 0) return constant(parse_number(text.substr(6), text));
    if (text.rfind("leq:", 0) == 0) return indicator_leq(parse_number(text.substr(4), text));
    if (text.rfind("table:", 0) == 0) {
        std::vector<double> xs, ys;
        std::string body = text.substr(6);
        std::size_t start = 0;
        while (start <= body.size()) {
            const std::size_t comma = std::min(body.find(',', start), body.size());
            const std::string item = body.substr(start, comma - start);
            const std::size_t eq = item.find('=');
            if (eq == std::string::npos)
                throw Error(ErrorKind::SchemaError, "table entries look like X=Y, got '" + item + "'", "--h");
            xs.push_back(parse_number(item.substr(0, eq), text));
            ys.push_back(parse_number(item.substr(eq + 1), text));
            start = comma + 1;
        }
        return tabulated(std::move(xs), std::move(ys));
    }
    throw Error(ErrorKind::SchemaError, "unknown functional '" + text + "'", "--h");
}

}  // namespace nudge
