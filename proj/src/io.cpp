#include "nudge/io.hpp"

#include "nudge/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace nudge {

namespace {

// A JSON value together with its pointer, for error messages.
struct Node {
    const Json& value;
    std::string path;

    Node at(const std::string& key) const {
        const auto it = value.find(key);
        if (it == value.end()) throw Error(ErrorKind::SchemaError, "missing key \"" + key + "\"", path);
        return {*it, path + "/" + key};
    }
    Node at(std::size_t i) const { return {value.at(i), path + "/" + std::to_string(i)}; }
    bool has(const std::string& key) const { return value.contains(key); }

    void object(std::initializer_list<std::string_view> allowed) const {
        if (!value.is_object()) throw Error(ErrorKind::SchemaError, "expected an object", path);
        for (const auto& item : value.items()) {
            bool known = false;
            for (auto k : allowed) known = known || item.key() == k;
            if (!known) throw Error(ErrorKind::SchemaError, "unknown key \"" + item.key() + "\"", path);
        }
    }

    double number() const {
        if (!value.is_number()) throw Error(ErrorKind::SchemaError, "expected a number", path);
        const double x = value.get<double>();
        if (!std::isfinite(x)) throw Error(ErrorKind::SchemaError, "expected a finite number", path);
        return x;
    }

    std::string string() const {
        if (!value.is_string()) throw Error(ErrorKind::SchemaError, "expected a string", path);
        return value.get<std::string>();
    }

    template <typename E>
    E choice(std::initializer_list<std::pair<std::string_view, E>> options) const {
        const std::string s = string();
        std::string names;
        for (const auto& [name, e] : options) {
            if (s == name) return e;
            names += (names.empty() ? "" : ", ") + std::string(name);
        }
        throw Error(ErrorKind::SchemaError, "unknown value \"" + s + "\" (expected one of " + names + ")", path);
    }
};

// A number, or a map from stratum label to number.
template <typename T, typename Read>
std::vector<T> per_stratum(const Node& node, const std::vector<Stratum>& strata, Read read) {
    std::vector<T> out;
    if (!node.value.is_object()) {
        out.assign(strata.size(), read(node));
        return out;
    }
    for (const auto& item : node.value.items()) {
        bool known = false;
        for (const auto& s : strata) known = known || s.label == item.key();
        if (!known) throw Error(ErrorKind::SchemaError, "unknown stratum \"" + item.key() + "\"", node.path);
    }
    for (const auto& s : strata) out.push_back(read(node.at(s.label)));
    return out;
}

Polynomial read_polynomial(const Node& node) {
    if (!node.value.is_array() || node.value.empty())
        throw Error(ErrorKind::SchemaError, "expected a nonempty coefficient list", node.path);
    Eigen::VectorXd coef(static_cast<Eigen::Index>(node.value.size()));
    for (std::size_t i = 0; i < node.value.size(); ++i) coef(static_cast<Eigen::Index>(i)) = node.at(i).number();
    return Polynomial(coef);
}

ConfounderLaw read_confounder(const Node& node) {
    const std::string kind = node.at("kind").string();
    if (kind == "discrete") {
        node.object({"kind", "support"});
        const Node support = node.at("support");
        if (!support.value.is_array()) throw Error(ErrorKind::SchemaError, "expected an array", support.path);
        std::vector<SupportPoint> points;
        for (std::size_t i = 0; i < support.value.size(); ++i) {
            const Node p = support.at(i);
            p.object({"value", "prob"});
            points.push_back({p.at("value").number(), p.at("prob").number()});
        }
        return ConfounderLaw::discrete(std::move(points));
    }
    if (kind == "uniform_interval") {
        node.object({"kind", "bounds"});
        const Node bounds = node.at("bounds");
        if (!bounds.value.is_array() || bounds.value.size() != 2)
            throw Error(ErrorKind::SchemaError, "expected [lo, hi]", bounds.path);
        return ConfounderLaw::uniform(bounds.at(0).number(), bounds.at(1).number());
    }
    throw Error(ErrorKind::SchemaError, "unknown value \"" + kind + "\" (expected one of discrete, uniform_interval)",
                node.path + "/kind");
}

ScenarioSpec read_scenario(const Node& root) {
    root.object({"schema_version", "name", "glim", "outcome"});
    const Node version = root.at("schema_version");
    if (!version.value.is_number_integer() || version.value.get<long long>() != kSchemaVersion)
        throw Error(ErrorKind::SchemaError, "unsupported schema_version (expected 1)", version.path);

    ScenarioSpec spec;
    spec.name = root.at("name").string();

    const Node glim = root.at("glim");
    glim.object({"threshold", "link", "propensity", "confounder", "covariate_law"});

    const Node threshold = glim.at("threshold");
    threshold.object({"kind", "coupling"});
    spec.glim.threshold.kind = threshold.at("kind").choice<ThresholdKind>({{"degenerate_one", ThresholdKind::DegenerateOne},
                                                                            {"uniform01", ThresholdKind::Uniform01},
                                                                            {"logistic01", ThresholdKind::Logistic01}});
    if (threshold.has("coupling"))
        spec.glim.threshold.coupling = threshold.at("coupling").choice<Coupling>(
            {{"independent", Coupling::Independent}, {"common", Coupling::Common}});

    spec.glim.link =
        glim.at("link").choice<LinkKind>({{"additive", LinkKind::Additive}, {"multiplicative", LinkKind::Multiplicative}});

    if (glim.has("covariate_law")) {
        const Node law = glim.at("covariate_law");
        if (!law.value.is_array()) throw Error(ErrorKind::SchemaError, "expected an array", law.path);
        spec.glim.covariate_law.clear();
        for (std::size_t i = 0; i < law.value.size(); ++i) {
            const Node s = law.at(i);
            s.object({"label", "prob"});
            spec.glim.covariate_law.push_back({s.at("label").string(), s.at("prob").number()});
        }
    }
    const auto& strata = spec.glim.covariate_law;

    const Node propensity = glim.at("propensity");
    propensity.object({"p0", "p1", "assign_prob"});
    auto num = [](const Node& n) { return n.number(); };
    const auto p0 = per_stratum<double>(propensity.at("p0"), strata, num);
    const auto p1 = per_stratum<double>(propensity.at("p1"), strata, num);
    const auto q = per_stratum<double>(propensity.at("assign_prob"), strata, num);
    for (std::size_t k = 0; k < strata.size(); ++k) spec.glim.propensity.push_back({p0[k], p1[k], q[k]});

    spec.glim.confounder = read_confounder(glim.at("confounder"));

    const Node outcome = root.at("outcome");
    outcome.object({"m0", "m1", "noise_sd", "binary_mode"});
    spec.outcome.m0 = per_stratum<Polynomial>(outcome.at("m0"), strata, read_polynomial);
    spec.outcome.m1 = per_stratum<Polynomial>(outcome.at("m1"), strata, read_polynomial);
    spec.outcome.noise_sd = outcome.at("noise_sd").number();
    if (outcome.has("binary_mode")) {
        const Node b = outcome.at("binary_mode");
        if (!b.value.is_boolean()) throw Error(ErrorKind::SchemaError, "expected a boolean", b.path);
        spec.outcome.binary_mode = b.value.get<bool>();
    }
    return spec;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open for reading", path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::ofstream open_for_writing(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot open for writing", path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error(ErrorKind::IoError, "write failed", path.string());
}

Json polynomial_json(const Polynomial& p) {
    Json arr = Json::array();
    for (double c : p.coefficients()) arr.push_back(c);
    return arr;
}

// --- CSV -------------------------------------------------------------------

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

// Reads lines, strips a trailing CR, skips blank lines; tracks 1-based line numbers.
class LineReader {
public:
    explicit LineReader(std::istream& in) : in_(in) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++number_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }
    std::size_t number() const { return number_; }
    std::string where() const { return "line " + std::to_string(number_); }

private:
    std::istream& in_;
    std::size_t number_ = 0;
};

double parse_real(const std::string& text, const LineReader& r, const std::string& column) {
    double x = 0.0;
    const char* first = text.data();
    const char* last = first + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec != std::errc() || ptr != last || text.empty())
        throw Error(ErrorKind::ParseError, "column " + column + ": \"" + text + "\" is not a number", r.where());
    return x;
}

int parse_binary(const std::string& text, const LineReader& r, const std::string& column) {
    const double x = parse_real(text, r, column);
    if (x != 0.0 && x != 1.0)
        throw Error(ErrorKind::DomainError, "column " + column + " must be 0 or 1, got " + text, r.where());
    return static_cast<int>(x);
}

std::vector<std::string> read_header(LineReader& r) {
    std::string line;
    if (!r.next(line)) throw Error(ErrorKind::ParseError, "missing header", "line 1");
    auto names = split(line);
    std::set<std::string> seen;
    for (const auto& n : names)
        if (!seen.insert(n).second) throw Error(ErrorKind::SchemaError, "duplicate column \"" + n + "\"", r.where());
    return names;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw Error(ErrorKind::SchemaError, "header has no column \"" + name + "\"", "line 1");
}

void put_double(std::ostream& out, double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf;
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

ScenarioSpec parse_scenario(std::string_view text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::ParseError, e.what(), "byte " + std::to_string(e.byte));
    }
    return read_scenario(Node{doc, ""});
}

ValidatedScenario load_scenario(const std::filesystem::path& path) {
    return validate_spec(parse_scenario(read_file(path)));
}

Json scenario_to_json(const ScenarioSpec& spec) {
    const auto& g = spec.glim;
    const bool single = g.covariate_law.size() == 1;
    auto by_stratum = [&](auto get) {
        if (single) return Json(get(0));
        Json m = Json::object();
        for (std::size_t k = 0; k < g.covariate_law.size(); ++k) m[g.covariate_law[k].label] = get(k);
        return m;
    };

    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["name"] = spec.name;
    Json& glim = doc["glim"];
    glim["threshold"]["kind"] = g.threshold.kind == ThresholdKind::DegenerateOne ? "degenerate_one"
                                : g.threshold.kind == ThresholdKind::Uniform01   ? "uniform01"
                                                                                 : "logistic01";
    glim["threshold"]["coupling"] = g.threshold.coupling == Coupling::Common ? "common" : "independent";
    glim["link"] = g.link == LinkKind::Additive ? "additive" : "multiplicative";
    glim["propensity"]["p0"] = by_stratum([&](std::size_t k) { return Json(g.propensity[k].p0); });
    glim["propensity"]["p1"] = by_stratum([&](std::size_t k) { return Json(g.propensity[k].p1); });
    glim["propensity"]["assign_prob"] = by_stratum([&](std::size_t k) { return Json(g.propensity[k].assign_prob); });
    Json& u = glim["confounder"];
    if (g.confounder.kind == ConfounderLaw::Kind::Discrete) {
        u["kind"] = "discrete";
        u["support"] = Json::array();
        for (const auto& p : g.confounder.support) u["support"].push_back({{"value", p.value}, {"prob", p.prob}});
    } else {
        u["kind"] = "uniform_interval";
        u["bounds"] = {g.confounder.lo, g.confounder.hi};
    }
    glim["covariate_law"] = Json::array();
    for (const auto& s : g.covariate_law) glim["covariate_law"].push_back({{"label", s.label}, {"prob", s.prob}});

    Json& out = doc["outcome"];
    out["m0"] = by_stratum([&](std::size_t k) { return polynomial_json(spec.outcome.m0[k]); });
    out["m1"] = by_stratum([&](std::size_t k) { return polynomial_json(spec.outcome.m1[k]); });
    out["noise_sd"] = spec.outcome.noise_sd;
    out["binary_mode"] = spec.outcome.binary_mode;
    return doc;
}

ObservedDataset parse_dataset(std::istream& in, const DatasetSchema& schema, std::ostream* log) {
    LineReader reader(in);
    const auto header = read_header(reader);
    const std::size_t iz = column_index(header, schema.z);
    const std::size_t ia = column_index(header, schema.a);
    const std::size_t iy = column_index(header, schema.y);

    std::vector<std::string> cov_names;
    if (schema.covariates) {
        cov_names = *schema.covariates;
        for (const auto& c : cov_names) column_index(header, c);
    } else {
        for (const auto& h : header)
            if (h != schema.z && h != schema.a && h != schema.y) cov_names.push_back(h);
    }
    std::vector<std::size_t> icov;
    for (const auto& c : cov_names) icov.push_back(column_index(header, c));

    std::vector<int> z, a;
    std::vector<double> y;
    std::vector<std::vector<std::string>> labels(cov_names.size());
    std::string line;
    while (reader.next(line)) {
        const auto f = split(line);
        if (f.size() != header.size())
            throw Error(ErrorKind::ParseError,
                        "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(f.size()),
                        reader.where());
        z.push_back(parse_binary(f[iz], reader, schema.z));
        a.push_back(parse_binary(f[ia], reader, schema.a));
        const double yi = parse_real(f[iy], reader, schema.y);
        if (!std::isfinite(yi)) throw Error(ErrorKind::DomainError, "column " + schema.y + " is not finite", reader.where());
        y.push_back(yi);
        for (std::size_t j = 0; j < icov.size(); ++j) labels[j].push_back(f[icov[j]]);
    }
    if (y.empty()) throw Error(ErrorKind::EmptyPanel, "dataset has no rows");

    ObservedDataset data;
    const auto n = static_cast<Eigen::Index>(y.size());
    data.z = Eigen::Map<const Eigen::VectorXi>(z.data(), n);
    data.a = Eigen::Map<const Eigen::VectorXi>(a.data(), n);
    data.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
    for (std::size_t j = 0; j < cov_names.size(); ++j)
        data.covariates.push_back(Covariate::from_labels(cov_names[j], labels[j]));

    if (log) {
        *log << "read " << n << " rows\n";
        for (const auto& c : data.covariates) {
            std::vector<Eigen::Index> counts(c.levels.size(), 0);
            for (Eigen::Index i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(c.codes(i))];
            for (std::size_t k = 0; k < counts.size(); ++k)
                *log << "  " << c.name << "=" << c.levels[k] << ": " << counts[k] << " rows\n";
        }
    }
    return data;
}

ObservedDataset read_dataset(const std::filesystem::path& path, const DatasetSchema& schema, std::ostream* log) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open for reading", path.string());
    return parse_dataset(in, schema, log);
}

void write_dataset(const ObservedDataset& data, std::ostream& out) {
    out << "z,a,y";
    for (const auto& c : data.covariates) out << ',' << c.name;
    out << '\n';
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        out << data.z(i) << ',' << data.a(i) << ',';
        put_double(out, data.y(i));
        for (const auto& c : data.covariates) out << ',' << c.levels[static_cast<std::size_t>(c.codes(i))];
        out << '\n';
    }
}

void write_dataset(const ObservedDataset& data, const std::filesystem::path& path) {
    auto out = open_for_writing(path);
    write_dataset(data, out);
    finish(out, path);
}

void write_panel(const CounterfactualPanel& panel, std::ostream& out) {
    out << "u,l,z,a0,a1,y0,y1,ctype,nudge\n";
    for (const auto& r : panel.rows) {
        put_double(out, r.u);
        out << ',' << panel.strata[r.stratum] << ',' << r.z << ',' << r.a0 << ',' << r.a1 << ',';
        put_double(out, r.y0);
        out << ',';
        put_double(out, r.y1);
        out << ',' << to_string(r.ctype) << ',' << (r.nudge ? 1 : 0) << '\n';
    }
}

void write_panel(const CounterfactualPanel& panel, const std::filesystem::path& path) {
    auto out = open_for_writing(path);
    write_panel(panel, out);
    finish(out, path);
}

CounterfactualPanel parse_panel(std::istream& in) {
    LineReader reader(in);
    const auto header = read_header(reader);
    const std::vector<std::string> expected{"u", "l", "z", "a0", "a1", "y0", "y1", "ctype", "nudge"};
    if (header != expected) throw Error(ErrorKind::SchemaError, "panel header must be u,l,z,a0,a1,y0,y1,ctype,nudge", "line 1");

    CounterfactualPanel panel;
    std::map<std::string, std::size_t> strata;
    std::string line;
    while (reader.next(line)) {
        const auto f = split(line);
        if (f.size() != expected.size())
            throw Error(ErrorKind::ParseError, "expected 9 fields, found " + std::to_string(f.size()), reader.where());
        PanelRow r;
        r.u = parse_real(f[0], reader, "u");
        const auto [it, added] = strata.emplace(f[1], panel.strata.size());
        if (added) panel.strata.push_back(f[1]);
        r.stratum = it->second;
        r.z = parse_binary(f[2], reader, "z");
        r.a0 = parse_binary(f[3], reader, "a0");
        r.a1 = parse_binary(f[4], reader, "a1");
        r.y0 = parse_real(f[5], reader, "y0");
        r.y1 = parse_real(f[6], reader, "y1");
        const auto ctype = parse_compliance_type(f[7]);
        if (!ctype) throw Error(ErrorKind::ParseError, "unknown compliance type \"" + f[7] + "\"", reader.where());
        r.ctype = *ctype;
        r.nudge = parse_binary(f[8], reader, "nudge") == 1;
        if (r.ctype != compliance_type(r.a0, r.a1) || r.nudge != (r.a0 != r.a1))
            throw Error(ErrorKind::DomainError, "compliance columns disagree with a0, a1", reader.where());
        panel.rows.push_back(r);
    }
    return panel;
}

CounterfactualPanel read_panel(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open for reading", path.string());
    return parse_panel(in);
}

std::string format_double(double x) {
    char buf[40];
    for (int digits = 1; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

Json to_json(const EstimateReport& r) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["estimand"] = r.estimand;
    j["point"] = number_or_null(r.point);
    j["first_stage"] = number_or_null(r.first_stage);
    j["n"] = r.n;
    if (r.bootstrap) {
        const auto& b = *r.bootstrap;
        j["bootstrap"] = {{"method", "percentile"}, {"replicates", b.replicates}, {"failures", b.failures},
                          {"seed", b.seed},          {"ci_level", b.ci_level},     {"se", b.se},
                          {"ci", {b.ci_lo, b.ci_hi}}};
    }
    if (!r.per_stratum.empty()) {
        Json strata = Json::object();
        for (const auto& [label, s] : r.per_stratum)
            strata[label] = {{"point", number_or_null(s.point)}, {"first_stage", number_or_null(s.first_stage)}, {"n", s.n}};
        j["per_stratum"] = strata;
    }
    j["warnings"] = r.warnings;
    return j;
}

Json to_json(const BoundsReport& r) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["n"] = r.n;
    Json levels = Json::object();
    for (const auto& [label, b] : r.levels) {
        levels[label] = {{"pi1", b.pi1},
                         {"pi0", b.pi0},
                         {"complier", {b.complier_lo, b.complier_hi}},
                         {"defier", {b.defier_lo, b.defier_hi}},
                         {"nudge", {b.nudge_lo, b.nudge_hi}}};
    }
    j["levels"] = levels;
    return j;
}

Json to_json(const std::map<std::string, FirstStageDiagnostic>& diagnostics) {
    Json j = Json::object();
    for (const auto& [label, d] : diagnostics)
        j[label] = {{"pi1", number_or_null(d.pi1)}, {"pi0", number_or_null(d.pi0)},
                    {"denominator", number_or_null(d.denominator)}, {"n", d.n}, {"n1", d.n1},
                    {"n0", d.n0}, {"weak", d.weak}};
    return j;
}

Json to_json(const McStudyResult& r) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["estimator"] = r.estimator;
    j["target"] = r.target;
    j["truth"] = r.truth;
    j["n"] = r.n;
    j["replications"] = r.replications;
    j["failures"] = r.failures;
    j["bias"] = r.bias;
    j["sd"] = r.sd;
    j["rmse"] = r.rmse;
    j["coverage"] = r.coverage;
    j["mean_ci_width"] = r.mean_ci_width;
    return j;
}

Json to_json(const ConditionReport& r) {
    return {{"null_cov", r.null_cov},           {"bcs_max_dev", r.bcs_max_dev},
            {"relevance_ok", r.relevance_ok},   {"nudge_share", r.nudge_share},
            {"complier_share", r.complier_share}, {"defier_share", r.defier_share}};
}

Json to_json(const WaldDecomposition& d) {
    return {{"itt", d.itt},
            {"null_cov", d.null_cov},
            {"nudge_share", d.nudge_share},
            {"nate", d.nate},
            {"complier_share", d.complier_share},
            {"defier_share", d.defier_share},
            {"first_stage", d.first_stage},
            {"covariance_term", d.covariance_term()},
            {"nate_term", d.nate_term()}};
}

std::string render_report(const Json& report) { return report.dump(2) + "\n"; }

void write_report(const Json& report, const std::filesystem::path& path) {
    auto out = open_for_writing(path);
    out << render_report(report);
    finish(out, path);
}

}  // namespace nudge
