#include "ssre/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace ssre {

std::string_view to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::env: return "env";
        case ExperimentKind::forward: return "forward";
        case ExperimentKind::dual: return "dual";
        case ExperimentKind::kernel: return "kernel";
        case ExperimentKind::duality: return "duality";
        case ExperimentKind::universality: return "universality";
        case ExperimentKind::acceptance: return "acceptance";
    }
    return "?";
}

ExperimentKind parse_kind(std::string_view s) {
    for (auto k : {ExperimentKind::env, ExperimentKind::forward, ExperimentKind::dual, ExperimentKind::kernel,
                   ExperimentKind::duality, ExperimentKind::universality, ExperimentKind::acceptance})
        if (s == to_string(k)) return k;
    throw PreconditionError("unknown experiment kind '" + std::string(s) + "'");
}

std::string_view to_string(ReportFormat f) {
    switch (f) {
        case ReportFormat::json: return "json";
        case ReportFormat::csv: return "csv";
        case ReportFormat::both: return "both";
    }
    return "?";
}

ReportFormat parse_format(std::string_view s) {
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    if (s == "both") return ReportFormat::both;
    throw PreconditionError("unknown report format '" + std::string(s) + "'");
}

std::map<std::string, double> ExperimentConfig::default_tolerances() {
    return {{"z_max", 3.0},  {"msd_rel", 0.05},     {"gamma_rel", 0.02},
            {"lclt_max", 0.05}, {"residual", 1e-12}, {"alpha", 0.01}};
}

double ExperimentConfig::tolerance(const std::string& key) const {
    auto it = tolerances.find(key);
    if (it == tolerances.end()) throw ConfigError("tolerances." + key + ": unknown tolerance");
    return it->second;
}

namespace {

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
    throw ConfigError(field + ": " + what);
}

}  // namespace

void ExperimentConfig::validate() const {
    try {
        environment.validate();
    } catch (const ModelError& e) {
        field_error("environment", e.what());
    }
    if (!(model.m > 0.0)) field_error("model.m", "m must be positive");
    if (!(model.lambda > 0.0)) field_error("model.lambda", "lambda must be positive");
    try {
        model.validate(environment.K);
    } catch (const ModelError& e) {
        const std::string msg = e.what();
        field_error(msg.find("dt") != std::string::npos ? "model.dt"
                    : msg.find("horizon") != std::string::npos ? "model.T"
                                                                : "model.m",
                    msg);
    }
    try {
        profile.validate();
    } catch (const ModelError& e) {
        field_error("model.profile", e.what());
    }
    if (n_values.empty()) field_error("scales.n", "at least one scale is required");
    for (std::size_t i = 0; i < n_values.size(); ++i) {
        if (!(n_values[i] >= 1.0)) field_error("scales.n", "scales must be at least 1");
        if (i > 0 && !(n_values[i] > n_values[i - 1])) field_error("scales.n", "scales must be increasing");
    }
    if (!(t_min > 0.0 && t_max > t_min)) field_error("scales.t_min", "need 0 < t_min < t_max");
    if (!(radius > 0.0)) field_error("scales.radius", "radius must be positive");
    if (!(offset >= 0.0)) field_error("scales.offset", "offset must be non-negative");
    if (!(horizon > 0.0)) field_error("scales.horizon", "horizon must be positive");
    if (replicates == 0) field_error("replicates.replicates", "replicates must be positive");
    if (reference_replicates == 0) field_error("replicates.reference", "reference must be positive");
    if (paths < 100) field_error("replicates.paths", "at least 100 paths are required");
    if (!(meeting_budget > 0.0)) field_error("replicates.meeting", "meeting budget must be positive");
    if (workers == 0) field_error("run.workers", "workers must be positive");
    if (out.empty()) field_error("run.out", "output directory must be non-empty");
    const auto defaults = default_tolerances();
    for (const auto& [k, v] : tolerances) {
        if (!defaults.contains(k)) field_error("tolerances." + k, "unknown tolerance");
        if (!(v > 0.0)) field_error("tolerances." + k, "tolerance must be positive");
    }
    if (tolerances.at("alpha") >= 1.0) field_error("tolerances.alpha", "alpha must lie in (0, 1)");
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s;
}

double to_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError("expected a number, got '" + s + "'");
    return v;
}

std::uint64_t to_u64(const std::string& s) {
    std::uint64_t v = 0;
    const char* end = s.data() + s.size();
    auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw ConfigError("expected a non-negative integer, got '" + s + "'");
    return v;
}

std::vector<double> to_list(const std::string& s) {
    std::vector<double> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
    return out;
}

std::vector<std::vector<double>> to_matrix(const std::string& s) {
    std::vector<std::vector<double>> out;
    if (trim(s).empty()) return out;
    std::stringstream ss(s);
    std::string row;
    while (std::getline(ss, row, ';')) out.push_back(to_list(row));
    return out;
}

std::string fmt_matrix(const std::vector<std::vector<double>>& m) {
    std::string s;
    for (std::size_t i = 0; i < m.size(); ++i) s += (i ? "; " : "") + fmt_list(m[i]);
    return s;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"experiment.kind", [](ExperimentConfig& c, const std::string& v) { c.kind = parse_kind(v); }},
        {"environment.family",
         [](ExperimentConfig& c, const std::string& v) { c.environment.family = parse_family(v); }},
        {"environment.values", [](ExperimentConfig& c, const std::string& v) { c.environment.values = to_list(v); }},
        {"environment.probabilities",
         [](ExperimentConfig& c, const std::string& v) { c.environment.probabilities = to_list(v); }},
        {"environment.lower", [](ExperimentConfig& c, const std::string& v) { c.environment.lower = to_double(v); }},
        {"environment.upper", [](ExperimentConfig& c, const std::string& v) { c.environment.upper = to_double(v); }},
        {"environment.transition",
         [](ExperimentConfig& c, const std::string& v) { c.environment.transition = to_matrix(v); }},
        {"environment.K", [](ExperimentConfig& c, const std::string& v) { c.environment.K = to_double(v); }},
        {"environment.length",
         [](ExperimentConfig& c, const std::string& v) { c.environment.length = to_u64(v); }},
        {"environment.boundary",
         [](ExperimentConfig& c, const std::string& v) { c.environment.boundary = parse_boundary(v); }},
        {"model.m", [](ExperimentConfig& c, const std::string& v) { c.model.m = to_double(v); }},
        {"model.lambda", [](ExperimentConfig& c, const std::string& v) { c.model.lambda = to_double(v); }},
        {"model.variant", [](ExperimentConfig& c, const std::string& v) { c.model.variant = parse_variant(v); }},
        {"model.dt", [](ExperimentConfig& c, const std::string& v) { c.model.dt = to_double(v); }},
        {"model.T", [](ExperimentConfig& c, const std::string& v) { c.model.T = to_double(v); }},
        {"model.profile", [](ExperimentConfig& c, const std::string& v) { c.profile.kind = parse_profile(v); }},
        {"model.level", [](ExperimentConfig& c, const std::string& v) { c.profile.level = to_double(v); }},
        {"model.low", [](ExperimentConfig& c, const std::string& v) { c.profile.low = to_double(v); }},
        {"model.high", [](ExperimentConfig& c, const std::string& v) { c.profile.high = to_double(v); }},
        {"model.width", [](ExperimentConfig& c, const std::string& v) { c.profile.width = to_double(v); }},
        {"scales.n", [](ExperimentConfig& c, const std::string& v) { c.n_values = to_list(v); }},
        {"scales.t_min", [](ExperimentConfig& c, const std::string& v) { c.t_min = to_double(v); }},
        {"scales.t_max", [](ExperimentConfig& c, const std::string& v) { c.t_max = to_double(v); }},
        {"scales.radius", [](ExperimentConfig& c, const std::string& v) { c.radius = to_double(v); }},
        {"scales.offset", [](ExperimentConfig& c, const std::string& v) { c.offset = to_double(v); }},
        {"scales.horizon", [](ExperimentConfig& c, const std::string& v) { c.horizon = to_double(v); }},
        {"replicates.replicates", [](ExperimentConfig& c, const std::string& v) { c.replicates = to_u64(v); }},
        {"replicates.reference",
         [](ExperimentConfig& c, const std::string& v) { c.reference_replicates = to_u64(v); }},
        {"replicates.paths", [](ExperimentConfig& c, const std::string& v) { c.paths = to_u64(v); }},
        {"replicates.meeting", [](ExperimentConfig& c, const std::string& v) { c.meeting_budget = to_double(v); }},
        {"run.seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64(v); }},
        {"run.out", [](ExperimentConfig& c, const std::string& v) { c.out = v; }},
        {"run.workers", [](ExperimentConfig& c, const std::string& v) { c.workers = to_u64(v); }},
        {"run.format", [](ExperimentConfig& c, const std::string& v) { c.format = parse_format(v); }},
    };
    return table;
}

}  // namespace

ExperimentConfig parse_config(std::istream& is, const std::string& source) {
    ExperimentConfig cfg;
    std::map<std::string, std::size_t> seen;  // field -> line
    std::string section;
    std::string raw;
    std::size_t line_no = 0;
    bool k_given = false;
    auto at = [&](std::size_t line) { return source + ":" + std::to_string(line) + ": "; };

    while (std::getline(is, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(at(line_no) + "malformed section header '" + line + "'");
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"experiment", "environment", "model", "scales",
                                          "replicates", "run",         "tolerances"};
            if (std::find(std::begin(known), std::end(known), section) == std::end(known))
                throw ConfigError(at(line_no) + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(at(line_no) + "expected 'key = value', got '" + line + "'");
        if (section.empty()) throw ConfigError(at(line_no) + "key outside of any [section]");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string field = section + "." + key;
        if (seen.contains(field))
            throw ConfigError(at(line_no) + "duplicate key '" + field + "' (first on line " +
                              std::to_string(seen[field]) + ")");
        seen[field] = line_no;
        try {
            if (section == "tolerances") {
                if (!ExperimentConfig::default_tolerances().contains(key))
                    throw ConfigError("unknown key '" + field + "'");
                cfg.tolerances[key] = to_double(value);
                continue;
            }
            auto it = setters().find(field);
            if (it == setters().end()) throw ConfigError("unknown key '" + field + "'");
            it->second(cfg, value);
            if (field == "environment.K") k_given = true;
        } catch (const std::exception& e) {
            throw ConfigError(at(line_no) + e.what());
        }
    }
    if (!seen.contains("experiment.kind")) throw ConfigError(source + ": missing required field 'experiment.kind'");
    if (!k_given) cfg.environment.K = cfg.environment.minimal_K();

    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        const std::string field = msg.substr(0, msg.find(':'));
        auto it = seen.find(field);
        if (it == seen.end() && field.starts_with("environment")) {
            for (const auto& [f, line] : seen)
                if (f.starts_with("environment.")) {
                    it = seen.find(f);
                    break;
                }
        }
        throw ConfigError((it != seen.end() ? at(it->second) : source + ": ") + msg);
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse_config(in, path);
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    const auto& e = c.environment;
    os << "[experiment]\n"
       << "kind = " << to_string(c.kind) << "\n\n"
       << "[environment]\n"
       << "family = " << to_string(e.family) << "\n"
       << "values = " << fmt_list(e.values) << "\n"
       << "probabilities = " << fmt_list(e.probabilities) << "\n"
       << "lower = " << fmt(e.lower) << "\n"
       << "upper = " << fmt(e.upper) << "\n"
       << "transition = " << fmt_matrix(e.transition) << "\n"
       << "K = " << fmt(e.K) << "\n"
       << "length = " << e.length << "\n"
       << "boundary = " << to_string(e.boundary) << "\n\n"
       << "[model]\n"
       << "m = " << fmt(c.model.m) << "\n"
       << "lambda = " << fmt(c.model.lambda) << "\n"
       << "variant = " << to_string(c.model.variant) << "\n"
       << "dt = " << fmt(c.model.dt) << "\n"
       << "T = " << fmt(c.model.T) << "\n"
       << "profile = " << to_string(c.profile.kind) << "\n"
       << "level = " << fmt(c.profile.level) << "\n"
       << "low = " << fmt(c.profile.low) << "\n"
       << "high = " << fmt(c.profile.high) << "\n"
       << "width = " << fmt(c.profile.width) << "\n\n"
       << "[scales]\n"
       << "n = " << fmt_list(c.n_values) << "\n"
       << "t_min = " << fmt(c.t_min) << "\n"
       << "t_max = " << fmt(c.t_max) << "\n"
       << "radius = " << fmt(c.radius) << "\n"
       << "offset = " << fmt(c.offset) << "\n"
       << "horizon = " << fmt(c.horizon) << "\n\n"
       << "[replicates]\n"
       << "replicates = " << c.replicates << "\n"
       << "reference = " << c.reference_replicates << "\n"
       << "paths = " << c.paths << "\n"
       << "meeting = " << fmt(c.meeting_budget) << "\n\n"
       << "[run]\n"
       << "seed = " << c.seed << "\n"
       << "out = " << c.out << "\n"
       << "workers = " << c.workers << "\n"
       << "format = " << to_string(c.format) << "\n\n"
       << "[tolerances]\n";
    for (const auto& [k, v] : c.tolerances) os << k << " = " << fmt(v) << "\n";
    return os.str();
}

}  // namespace ssre
