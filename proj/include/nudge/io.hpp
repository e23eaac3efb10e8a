#ifndef NUDGE_IO_HPP
#define NUDGE_IO_HPP

// File formats: scenarios as JSON, datasets and panels as CSV, reports as
// pretty-printed JSON carrying "schema_version": 1.

#include "nudge/estimators.hpp"
#include "nudge/glim.hpp"
#include "nudge/inference.hpp"
#include "nudge/oracle.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nudge {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// Parses and validates a scenario document. Errors carry the JSON pointer of
// the offending key.
ScenarioSpec parse_scenario(std::string_view text);
ValidatedScenario load_scenario(const std::filesystem::path& path);

Json scenario_to_json(const ScenarioSpec& spec);

struct DatasetSchema {
    std::string z = "z";
    std::string a = "a";
    std::string y = "y";
    // Covariate columns; all remaining columns when unset.
    std::optional<std::vector<std::string>> covariates;
};

ObservedDataset parse_dataset(std::istream& in, const DatasetSchema& schema = {}, std::ostream* log = nullptr);
ObservedDataset read_dataset(const std::filesystem::path& path, const DatasetSchema& schema = {},
                             std::ostream* log = nullptr);
void write_dataset(const ObservedDataset& data, const std::filesystem::path& path);
void write_dataset(const ObservedDataset& data, std::ostream& out);

// Panel CSV: u,l,z,a0,a1,y0,y1,ctype,nudge.
void write_panel(const CounterfactualPanel& panel, const std::filesystem::path& path);
void write_panel(const CounterfactualPanel& panel, std::ostream& out);
CounterfactualPanel read_panel(const std::filesystem::path& path);
CounterfactualPanel parse_panel(std::istream& in);

// Shortest text that reads back to the same double (at most 17 digits).
std::string format_double(double x);

Json to_json(const EstimateReport& report);
Json to_json(const BoundsReport& report);
Json to_json(const std::map<std::string, FirstStageDiagnostic>& diagnostics);
Json to_json(const McStudyResult& result);
Json to_json(const ConditionReport& report);
Json to_json(const WaldDecomposition& d);

std::string render_report(const Json& report);
void write_report(const Json& report, const std::filesystem::path& path);

}  // namespace nudge

#endif  // NUDGE_IO_HPP
