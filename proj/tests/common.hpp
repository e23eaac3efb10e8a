#ifndef NUDGE_TEST_COMMON_HPP
#define NUDGE_TEST_COMMON_HPP

#include "nudge/error.hpp"
#include "nudge/glim.hpp"
#include "nudge/io.hpp"

#include <fstream>
#include <sstream>
#include <string>

namespace nudge::test {

inline std::string fixture_path(const std::string& name) { return std::string(NUDGE_FIXTURE_DIR) + "/" + name; }

inline ScenarioSpec parse_fixture(const std::string& name) {
    std::ifstream in(fixture_path(name));
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

inline ValidatedScenario fixture(const std::string& name) { return load_scenario(fixture_path(name)); }

inline ObservedDataset dataset(std::initializer_list<int> z, std::initializer_list<int> a,
                               std::initializer_list<double> y) {
    ObservedDataset d;
    d.z = Eigen::Map<const Eigen::VectorXi>(z.begin(), static_cast<Eigen::Index>(z.size()));
    d.a = Eigen::Map<const Eigen::VectorXi>(a.begin(), static_cast<Eigen::Index>(a.size()));
    d.y = Eigen::Map<const Eigen::VectorXd>(y.begin(), static_cast<Eigen::Index>(y.size()));
    return d;
}

template <typename F>
ErrorKind error_kind(F f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    throw std::logic_error("expected an error");
}

}  // namespace nudge::test

#endif  // NUDGE_TEST_COMMON_HPP
