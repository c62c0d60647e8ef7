#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssre/config.hpp"

namespace ssre {

inline constexpr int report_schema_version = 1;

std::string code_version();

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CheckResult {
    std::string name;
    double estimate = std::numeric_limits<double>::quiet_NaN();
    double reference = std::numeric_limits<double>::quiet_NaN();
    double std_error = std::numeric_limits<double>::quiet_NaN();
    double tolerance = std::numeric_limits<double>::quiet_NaN();
    bool passed = false;
    std::string detail;
    std::string error;  // set when the check threw instead of finishing
};

// A plot-ready curve or table; written as <name>.csv.
struct CurveTable {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Empirical CDF on a grid with a symmetric band clipped to [0, 1]; columns
// t, cdf, lo, hi.
CurveTable cdf_table(std::string name, const std::vector<double>& grid, const std::vector<double>& cdf,
                     double band);

// Replicate seeds derive_seed(master, tag, i) for i < count.
struct SeedStream {
    std::string tag;
    std::uint64_t master = 0;
    std::uint64_t count = 0;
};

struct ExperimentReport {
    std::string kind;
    std::string config_echo;
    std::uint64_t master_seed = 0;
    std::vector<CheckResult> checks;
    std::vector<CurveTable> tables;
    std::vector<SeedStream> seeds;
    nlohmann::json summary = nlohmann::json::object();
    double wall_clock_seconds = 0.0;
    std::string version = code_version();

    bool all_passed() const;
    CheckResult& add(CheckResult c);
};

// Runs body; an exception becomes a failed check named `name` carrying the
// message, so sibling checks still run.
void guarded(ExperimentReport& report, const std::string& name, const std::function<void()>& body);

nlohmann::json to_json(const ExperimentReport& report, bool embed_tables = true);
ExperimentReport from_json(const nlohmann::json& j);

// Writes report.json (always), <table>.csv for csv/both, seed_ledger.csv and
// index.txt listing every artifact. Returns the artifact paths.
std::vector<std::string> write_report(const ExperimentReport& report, const std::string& dir, ReportFormat format);

// Parses and validates a report.json; throws ReportError on a schema
// mismatch or a missing field.
ExperimentReport load_report(const std::string& path);

}  // namespace ssre
