#include "ssre/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "ssre/rng.hpp"

#ifndef SSRE_VERSION
#define SSRE_VERSION "0.0.0"
#endif

namespace ssre {

std::string code_version() { return SSRE_VERSION; }

CurveTable cdf_table(std::string name, const std::vector<double>& grid, const std::vector<double>& cdf, double band) {
    if (grid.size() != cdf.size()) throw PreconditionError("grid and CDF lengths differ");
    CurveTable t{std::move(name), {"t", "cdf", "lo", "hi"}, {}};
    for (std::size_t i = 0; i < grid.size(); ++i)
        t.rows.push_back({grid[i], cdf[i], std::max(0.0, cdf[i] - band), std::min(1.0, cdf[i] + band)});
    return t;
}

bool ExperimentReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

CheckResult& ExperimentReport::add(CheckResult c) {
    checks.push_back(std::move(c));
    return checks.back();
}

void guarded(ExperimentReport& report, const std::string& name, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        CheckResult c;
        c.name = name;
        c.passed = false;
        c.error = e.what();
        report.checks.push_back(std::move(c));
    }
}

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

template <class T>
T required(const json& j, const char* key) {
    if (!j.contains(key)) throw ReportError(std::string("report is missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ReportError(std::string("report field '") + key + "': " + e.what());
    }
}

const char* seed_rule =
    "seed = splitmix64(splitmix64(master ^ fnv1a64(tag)) + index * 0x9E3779B97F4A7C15)";

}  // namespace

nlohmann::json to_json(const ExperimentReport& r, bool embed_tables) {
    json j;
    j["schema_version"] = report_schema_version;
    j["kind"] = r.kind;
    j["code_version"] = r.version;
    j["config"] = r.config_echo;
    j["master_seed"] = r.master_seed;
    j["seed_rule"] = seed_rule;
    j["seeds"] = json::array();
    for (const auto& s : r.seeds) j["seeds"].push_back({{"tag", s.tag}, {"master", s.master}, {"count", s.count}});
    j["checks"] = json::array();
    for (const auto& c : r.checks) {
        json cj{{"name", c.name},
                {"estimate", number(c.estimate)},
                {"reference", number(c.reference)},
                {"std_error", number(c.std_error)},
                {"tolerance", number(c.tolerance)},
                {"verdict", c.passed ? "PASS" : "FAIL"},
                {"detail", c.detail}};
        if (!c.error.empty()) cj["error"] = c.error;
        j["checks"].push_back(std::move(cj));
    }
    j["tables"] = json::array();
    for (const auto& t : r.tables) {
        json tj{{"name", t.name}, {"columns", t.columns}, {"file", t.name + ".csv"}};
        if (embed_tables) {
            json rows = json::array();
            for (const auto& row : t.rows) {
                json rj = json::array();
                for (double v : row) rj.push_back(number(v));
                rows.push_back(std::move(rj));
            }
            tj["rows"] = std::move(rows);
        }
        j["tables"].push_back(std::move(tj));
    }
    j["summary"] = r.summary;
    j["all_passed"] = r.all_passed();
    j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j;
}

ExperimentReport from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ReportError("report root must be a JSON object");
    const int version = required<int>(j, "schema_version");
    if (version != report_schema_version)
        throw ReportError("unsupported report schema version " + std::to_string(version) + " (expected " +
                          std::to_string(report_schema_version) + ")");
    ExperimentReport r;
    r.kind = required<std::string>(j, "kind");
    r.version = required<std::string>(j, "code_version");
    r.config_echo = required<std::string>(j, "config");
    r.master_seed = required<std::uint64_t>(j, "master_seed");
    for (const auto& s : required<json>(j, "seeds"))
        r.seeds.push_back({required<std::string>(s, "tag"), required<std::uint64_t>(s, "master"),
                           required<std::uint64_t>(s, "count")});
    for (const auto& cj : required<json>(j, "checks")) {
        CheckResult c;
        c.name = required<std::string>(cj, "name");
        c.estimate = number(cj.at("estimate"));
        c.reference = number(cj.at("reference"));
        c.std_error = number(cj.at("std_error"));
        c.tolerance = number(cj.at("tolerance"));
        const auto verdict = required<std::string>(cj, "verdict");
        if (verdict != "PASS" && verdict != "FAIL") throw ReportError("check verdict must be PASS or FAIL");
        c.passed = verdict == "PASS";
        c.detail = required<std::string>(cj, "detail");
        if (cj.contains("error")) c.error = cj.at("error").get<std::string>();
        r.checks.push_back(std::move(c));
    }
    for (const auto& tj : required<json>(j, "tables")) {
        CurveTable t;
        t.name = required<std::string>(tj, "name");
        t.columns = required<std::vector<std::string>>(tj, "columns");
        if (tj.contains("rows"))
            for (const auto& rj : tj.at("rows")) {
                std::vector<double> row;
                for (const auto& v : rj) row.push_back(number(v));
                t.rows.push_back(std::move(row));
            }
        r.tables.push_back(std::move(t));
    }
    r.summary = required<json>(j, "summary");
    r.wall_clock_seconds = required<double>(j, "wall_clock_seconds");
    return r;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p);
    if (!os) throw ReportError(p.string() + ": cannot open for writing");
    return os;
}

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void finish(std::ofstream& os, const std::filesystem::path& p) {
    os.flush();
    if (!os) throw ReportError(p.string() + ": write failed");
}

}  // namespace

std::vector<std::string> write_report(const ExperimentReport& report, const std::string& dir, ReportFormat format) {
    namespace fs = std::filesystem;
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw ReportError(root.string() + ": cannot create output directory: " + ec.message());

    std::vector<std::string> artifacts;
    {
        const fs::path p = root / "report.json";
        auto os = open_out(p);
        os << to_json(report, format != ReportFormat::csv).dump(2) << "\n";
        finish(os, p);
        artifacts.push_back("report.json");
    }
    if (format != ReportFormat::json) {
        for (const auto& t : report.tables) {
            const fs::path p = root / (t.name + ".csv");
            auto os = open_out(p);
            for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
            os << "\n";
            for (const auto& row : t.rows) {
                for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << fmt(row[i]);
                os << "\n";
            }
            finish(os, p);
            artifacts.push_back(t.name + ".csv");
        }
    }
    {
        const fs::path p = root / "seed_ledger.csv";
        auto os = open_out(p);
        os << "tag,master,index,seed\n";
        for (const auto& s : report.seeds)
            for (std::uint64_t i = 0; i < s.count; ++i)
                os << s.tag << "," << s.master << "," << i << "," << derive_seed(s.master, s.tag, i) << "\n";
        finish(os, p);
        artifacts.push_back("seed_ledger.csv");
    }
    {
        const fs::path p = root / "index.txt";
        auto os = open_out(p);
        for (const auto& a : artifacts) os << a << "\n";
        os << "index.txt\n";
        finish(os, p);
        artifacts.push_back("index.txt");
    }
    return artifacts;
}

ExperimentReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ReportError(path + ": cannot open report");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ReportError(path + ": invalid JSON: " + e.what());
    }
    try {
        return from_json(j);
    } catch (const ReportError& e) {
        throw ReportError(path + ": " + e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ReportError(path + ": malformed report: " + e.what());
    }
}

}  // namespace ssre
