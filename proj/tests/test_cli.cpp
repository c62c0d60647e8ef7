#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssre/config.hpp"
#include "ssre/report.hpp"
#include "ssre/runner.hpp"

using namespace ssre;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream is(text);
    return parse_config(is, "test.cfg");
}

std::string error_of(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ssre_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_env_config() {
    ExperimentConfig c = parse("[experiment]\nkind = env\n[environment]\nfamily = iid-discrete\n"
                               "values = 1, 2\nprobabilities = 0.5, 0.5\nlength = 2000\n");
    c.seed = 42;
    return c;
}

}  // namespace

TEST(Config, MinimalDualConfigUsesDefaults) {
    const ExperimentConfig c = parse("[experiment]\nkind = dual\n[environment]\nfamily = constant\nvalues = 1\n");
    ExperimentConfig d;
    d.kind = ExperimentKind::dual;
    EXPECT_EQ(c, d);
    EXPECT_EQ(c.environment.K, 1.0);
    EXPECT_EQ(c.replicates, 400u);
    EXPECT_DOUBLE_EQ(c.tolerance("z_max"), 3.0);
    EXPECT_DOUBLE_EQ(c.tolerance("msd_rel"), 0.05);
}

TEST(Config, NegativeMigrationRejected) {
    const std::string msg = error_of("[experiment]\nkind = forward\n[model]\nm = -1\n");
    EXPECT_NE(msg.find("m must be positive"), std::string::npos) << msg;
    EXPECT_NE(msg.find("test.cfg:4"), std::string::npos) << msg;
}

TEST(Config, RoundTrip) {
    const ExperimentConfig c = parse(
        "# full example\n[experiment]\nkind = universality\n"
        "[environment]\nfamily = markov\nvalues = 1, 2.5\ntransition = 0.7, 0.3; 0.4, 0.6\nK = 3\nlength = 777\n"
        "boundary = ring\n[model]\nm = 0.8\nlambda = 50\nvariant = conservative\ndt = 0.01\nT = 2.5\n"
        "profile = gaussian\nhigh = 0.7\nwidth = 1.5\n[scales]\nn = 100, 400, 1600\noffset = 0.25\n"
        "[replicates]\nreplicates = 123\nreference = 456\npaths = 789\nmeeting = 5000\n"
        "[run]\nseed = 18446744073709551615\nout = some/dir\nworkers = 3\nformat = csv\n"
        "[tolerances]\nz_max = 2.5\n");
    const ExperimentConfig again = parse(serialize_config(c));
    EXPECT_EQ(again, c);
    EXPECT_EQ(serialize_config(again), serialize_config(c));
    EXPECT_EQ(c.seed, 18446744073709551615ULL);
    EXPECT_DOUBLE_EQ(c.tolerance("z_max"), 2.5);
    EXPECT_EQ(c.environment.transition[1][0], 0.4);
}

TEST(Config, RoundTripOfAwkwardNumbers) {
    ExperimentConfig c;
    c.model.m = 0.1 + 0.2;
    c.offset = 1.0 / 3.0;
    c.environment = EnvironmentSpec::iid_uniform(0.7071067811865476, 1.4142135623730951, 99);
    EXPECT_EQ(parse(serialize_config(c)), c);
}

TEST(Config, UnknownKeyRejected) {
    const std::string msg = error_of("[experiment]\nkind = env\n[model]\nlamda = 10\n");
    EXPECT_NE(msg.find("test.cfg:4"), std::string::npos) << msg;
    EXPECT_NE(msg.find("model.lamda"), std::string::npos) << msg;
}

TEST(Config, UnknownSectionRejected) {
    EXPECT_NE(error_of("[experiment]\nkind = env\n[modle]\nm = 1\n").find("test.cfg:3"), std::string::npos);
}

TEST(Config, DuplicateKeyRejected) {
    EXPECT_NE(error_of("[experiment]\nkind = env\nkind = dual\n").find("duplicate"), std::string::npos);
}

TEST(Config, MissingKindRejected) {
    const std::string msg = error_of("[model]\nm = 1\n");
    EXPECT_NE(msg.find("experiment.kind"), std::string::npos) << msg;
}

TEST(Config, BadValuesRejected) {
    EXPECT_NE(error_of("[experiment]\nkind = env\n[model]\nm = abc\n").find("test.cfg:4"), std::string::npos);
    EXPECT_NE(error_of("[experiment]\nkind = nothing\n").find("test.cfg:2"), std::string::npos);
    EXPECT_NE(error_of("[experiment]\nkind = env\n[environment]\nfamily = constant\nvalues = 5\nK = 2\n").find("test.cfg"),
              std::string::npos);
    EXPECT_FALSE(error_of("[experiment]\nkind = env\n[scales]\nn = 100, 50\n").empty());
    EXPECT_FALSE(error_of("[experiment]\nkind = env\n[run]\nworkers = 0\n").empty());
    EXPECT_FALSE(error_of("[experiment]\nkind = env\n[tolerances]\nfoo = 1\n").empty());
    EXPECT_FALSE(error_of("[experiment]\nkind = forward\n[model]\ndt = 0.5\n").empty());
}

TEST(Config, MissingFile) {
    EXPECT_THROW(parse_config(std::string("/nonexistent/ssre.cfg")), ConfigError);
}

TEST(Report, EmptyReportIsValidJson) {
    ExperimentReport r;
    r.kind = "env";
    const fs::path dir = scratch_dir("empty");
    write_report(r, dir.string(), ReportFormat::json);
    const ExperimentReport back = load_report((dir / "report.json").string());
    EXPECT_TRUE(back.checks.empty());
    EXPECT_EQ(back.kind, "env");
    EXPECT_TRUE(back.all_passed());
    EXPECT_TRUE(fs::exists(dir / "index.txt"));
}

TEST(Report, CdfCurveCsvHeader) {
    ExperimentReport r;
    r.kind = "dual";
    r.tables.push_back(cdf_table("coalescence", {0.0, 0.5, 1.0}, {0.0, 0.375, 0.875}, 0.125));
    const fs::path dir = scratch_dir("cdf");
    const auto files = write_report(r, dir.string(), ReportFormat::both);
    const std::string csv = slurp(dir / "coalescence.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,cdf,lo,hi");
    EXPECT_NE(csv.find("1,0.875,0.75,1"), std::string::npos) << csv;
    const std::string index = slurp(dir / "index.txt");
    EXPECT_NE(index.find("coalescence.csv"), std::string::npos);
    EXPECT_NE(index.find("report.json"), std::string::npos);
}

TEST(Report, SchemaVersionValidated) {
    ExperimentReport r;
    r.kind = "kernel";
    CheckResult c;
    c.name = "x";
    c.estimate = 1.5;
    c.passed = true;
    r.add(c);
    nlohmann::json j = to_json(r);
    EXPECT_EQ(j["schema_version"], report_schema_version);
    EXPECT_EQ(from_json(j).checks.front().estimate, 1.5);
    EXPECT_TRUE(std::isnan(from_json(j).checks.front().std_error));
    j["schema_version"] = report_schema_version + 1;
    EXPECT_THROW(from_json(j), ReportError);
    j.erase("schema_version");
    EXPECT_THROW(from_json(j), ReportError);
}

TEST(Report, SeedLedgerExpandsEveryReplicate) {
    ExperimentReport r;
    r.kind = "forward";
    r.seeds.push_back({"forward", 99, 3});
    const fs::path dir = scratch_dir("ledger");
    write_report(r, dir.string(), ReportFormat::json);
    const std::string ledger = slurp(dir / "seed_ledger.csv");
    EXPECT_NE(ledger.find("forward,99,2," + std::to_string(derive_seed(99, "forward", 2))), std::string::npos) << ledger;
}

TEST(Report, UnwritableDirectoryNamesPath) {
    ExperimentReport r;
    try {
        write_report(r, "/proc/ssre_cannot_write_here", ReportFormat::json);
        FAIL() << "expected ReportError";
    } catch (const ReportError& e) {
        EXPECT_NE(std::string(e.what()).find("/proc/ssre_cannot_write_here"), std::string::npos);
    }
}

TEST(Report, GuardedRecordsErrors) {
    ExperimentReport r;
    guarded(r, "boom", [] { throw PreconditionError("bad input"); });
    guarded(r, "fine", [&] { r.add(CheckResult{"fine", 1, 1, 0, 0, true, {}, {}}); });
    ASSERT_EQ(r.checks.size(), 2u);
    EXPECT_FALSE(r.checks[0].passed);
    EXPECT_EQ(r.checks[0].error, "bad input");
    EXPECT_TRUE(r.checks[1].passed);
    EXPECT_FALSE(r.all_passed());
}

TEST(Runner, EnvironmentExperimentPasses) {
    const ExperimentReport r = run_experiment(small_env_config());
    ASSERT_FALSE(r.checks.empty());
    for (const auto& c : r.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail << c.error;
    EXPECT_EQ(r.kind, "env");
    EXPECT_EQ(parse(r.config_echo), small_env_config());
}

TEST(Runner, SameConfigSameReport) {
    const ExperimentConfig c = small_env_config();
    nlohmann::json a = to_json(run_experiment(c)), b = to_json(run_experiment(c));
    a.erase("wall_clock_seconds");
    b.erase("wall_clock_seconds");
    EXPECT_EQ(a.dump(), b.dump());
}

TEST(Runner, WorkerSplitDoesNotChangeStatistics) {
    ExperimentConfig c = parse("[experiment]\nkind = dual\n[environment]\nfamily = iid-discrete\n"
                               "values = 1, 2\nprobabilities = 0.5, 0.5\nlength = 64\n"
                               "[scales]\nn = 100, 400\n[replicates]\nreplicates = 200\npaths = 200\nmeeting = 2000\n");
    c.workers = 1;
    nlohmann::json a = to_json(run_experiment(c));
    c.workers = 4;
    nlohmann::json b = to_json(run_experiment(c));
    a.erase("wall_clock_seconds");
    b.erase("wall_clock_seconds");
    a.erase("config");
    b.erase("config");
    EXPECT_EQ(a.dump(), b.dump());
}

TEST(Runner, InvalidConfigRejectedBeforeWork) {
    ExperimentConfig c;
    c.kind = ExperimentKind::forward;
    c.model.m = -1.0;
    EXPECT_THROW(run_experiment(c), ConfigError);
}
