#include "common.hpp"

#include "nudge/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace nudge;
using nudge::test::error_kind;
using nudge::test::fixture;
using nudge::test::fixture_path;
using nudge::test::parse_fixture;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "nudge_iv_io_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string error_path(const std::string& text) {
    try {
        validate_spec(parse_scenario(text));
    } catch (const Error& e) {
        return e.path();
    }
    return "<accepted>";
}

const char* kMinimal = R"({
  "schema_version": 1, "name": "x",
  "glim": {"threshold": {"kind": "logistic01"}, "link": LINK,
           "propensity": {"p0": 0, "p1": P1, "assign_prob": 0.5},
           "confounder": {"kind": "discrete", "support": [{"value": 0, "prob": 1}]}EXTRA},
  "outcome": {"m0": [0], "m1": [1], "noise_sd": 1}
})";

std::string minimal(const std::string& link, const std::string& p1, const std::string& extra = "") {
    std::string s = kMinimal;
    s.replace(s.find("LINK"), 4, link);
    s.replace(s.find("P1"), 2, p1);
    s.replace(s.find("EXTRA"), 5, extra);
    return s;
}

}  // namespace

TEST_CASE("fixtures load and round-trip") {
    for (const char* name : {"s1_monotone.json", "s2_logistic.json", "s2_two_strata.json", "s2_binary.json",
                             "s3_additive.json", "s4_multiplicative.json"}) {
        CAPTURE(name);
        const auto spec = parse_fixture(name);
        const auto again = parse_scenario(scenario_to_json(spec).dump());
        CHECK(scenario_to_json(again) == scenario_to_json(spec));
        CHECK_NOTHROW(validate_spec(again));
    }
    const auto s1 = fixture("s1_monotone.json");
    CHECK(s1->glim.threshold.kind == ThresholdKind::DegenerateOne);
    CHECK(s1->glim.propensity[0].p1 == 0.6);
    CHECK(s1->outcome.m1[0] == Polynomial{1.0, 2.0});
}

TEST_CASE("scenario documents are checked strictly") {
    CHECK(error_path(minimal("\"additive\"", "1")) == "<accepted>");
    const auto typo = error_kind([] { parse_scenario(minimal("\"addittive\"", "1")); });
    CHECK(typo == ErrorKind::SchemaError);
    try {
        parse_scenario(minimal("\"addittive\"", "1"));
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("addittive") != std::string::npos);
        CHECK(e.path() == "/glim/link");
    }
    CHECK(error_path(minimal("\"additive\"", "0")) == "/glim/propensity/p1");
    CHECK(error_kind([] { validate_spec(parse_scenario(minimal("\"additive\"", "0"))); }) ==
          ErrorKind::RelevanceViolation);
    CHECK(error_path(minimal("\"additive\"", "1", ", \"extra\": 1")) == "/glim");
    CHECK(error_path(minimal("\"additive\"", "\"1\"")) == "/glim/propensity/p1");
    CHECK(error_kind([] { parse_scenario("{\"schema_version\": 1,"); }) == ErrorKind::ParseError);
    std::string no_version = minimal("\"additive\"", "1");
    no_version.replace(no_version.find("\"schema_version\": 1,"), 20, "");
    CHECK(error_kind([&] { parse_scenario(no_version); }) == ErrorKind::SchemaError);
}

TEST_CASE("datasets are read with typed columns") {
    std::istringstream ok("z,a,y,site\n1,1,2.5,north\n0,0,-1,south\r\n1,0,3e2,north\n0,1,0,south\n");
    const auto d = parse_dataset(ok);
    CHECK(d.size() == 4);
    CHECK(d.y(2) == 300.0);
    REQUIRE(d.covariates.size() == 1);
    CHECK(d.covariates[0].levels == std::vector<std::string>{"north", "south"});

    std::istringstream bad_a("z,a,y\n1,1,2\n0,2,1\n");
    try {
        parse_dataset(bad_a);
        FAIL("accepted a = 2");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DomainError);
        CHECK(e.path() == "line 3");
    }
    std::istringstream bad_y("z,a,y\n1,1,abc\n");
    CHECK(error_kind([&] { parse_dataset(bad_y); }) == ErrorKind::ParseError);
    std::istringstream inf_y("z,a,y\n1,1,inf\n");
    CHECK(error_kind([&] { parse_dataset(inf_y); }) == ErrorKind::DomainError);
    std::istringstream short_row("z,a,y\n1,1\n");
    CHECK(error_kind([&] { parse_dataset(short_row); }) == ErrorKind::ParseError);
    std::istringstream no_y("z,a,outcome\n1,1,1\n");
    CHECK(error_kind([&] { parse_dataset(no_y); }) == ErrorKind::SchemaError);
    std::istringstream renamed("treat,took,out\n1,1,1\n0,0,2\n");
    DatasetSchema schema{"treat", "took", "out", std::nullopt};
    CHECK(parse_dataset(renamed, schema).y(1) == 2.0);
}

TEST_CASE("panels and observed data round-trip") {
    const auto s = fixture("s2_two_strata.json");
    const auto panel = simulate_panel(s, 500, 4);
    const auto path = scratch("panel.csv");
    write_panel(panel, path);
    const auto back = read_panel(path);
    REQUIRE(back.rows.size() == panel.rows.size());
    for (std::size_t i = 0; i < panel.rows.size(); ++i) {
        auto row = back.rows[i];
        CHECK(back.strata[row.stratum] == panel.strata[panel.rows[i].stratum]);
        row.stratum = panel.rows[i].stratum;
        CHECK(row == panel.rows[i]);
    }

    const auto observed = observe(panel);
    const auto obs_path = scratch("observed.csv");
    write_dataset(observed, obs_path);
    const auto read = read_dataset(obs_path);
    CHECK(read.z == observed.z);
    CHECK(read.a == observed.a);
    CHECK(read.y == observed.y);
    CHECK(read.covariates[0].levels == observed.covariates[0].levels);
    CHECK(read.covariates[0].codes == observed.covariates[0].codes);

    std::ostringstream three;
    write_panel(simulate_panel(s, 3, 1), three);
    const std::string text = three.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(text.rfind("u,l,z,a0,a1,y0,y1,ctype,nudge\n", 0) == 0);
}

TEST_CASE("reports carry the schema version and the documented keys") {
    EstimateReport r;
    r.estimand = "wald";
    r.point = 1.5;
    r.first_stage = 0.3;
    r.n = 10;
    const auto j = to_json(r);
    for (const char* key : {"schema_version", "estimand", "point", "first_stage", "n", "warnings"}) {
        CAPTURE(key);
        CHECK(j.contains(key));
    }
    CHECK(j["schema_version"] == 1);
    const std::string text = render_report(j);
    CHECK(Json::parse(text) == j);
    CHECK(to_json(McStudyResult{}).contains("coverage"));
    CHECK(error_kind([] { write_report(Json::object(), "/nonexistent-dir/x.json"); }) == ErrorKind::IoError);
}

TEST_CASE("shortest round-trip formatting") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 2.5, -7.0, 123456789.125}) {
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(0.1) == "0.1");
}
