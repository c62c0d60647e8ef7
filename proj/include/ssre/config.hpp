#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssre/environment.hpp"
#include "ssre/forward.hpp"

namespace ssre {

enum class ExperimentKind { env, forward, dual, kernel, duality, universality, acceptance };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_kind(std::string_view s);

enum class ReportFormat { json, csv, both };

std::string_view to_string(ReportFormat f);
ReportFormat parse_format(std::string_view s);

// Raised by the config parser; what() starts with "<source>:<line>:" when
// the problem is tied to a line, or names the offending field otherwise.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Line-oriented `key = value` file with [section] headers. Lists are comma
// separated; matrix rows are separated by ';'. '#' starts a comment.
//
//   [experiment]   kind (required)
//   [environment]  family, values, probabilities, lower, upper, transition, K, length, boundary
//   [model]        m, lambda, variant, dt, T, profile, level, low, high, width
//   [scales]       n, t_min, t_max, radius, offset, horizon
//   [replicates]   replicates, reference, paths, meeting
//   [run]          seed, out, workers, format
//   [tolerances]   z_max, msd_rel, gamma_rel, lclt_max, residual, alpha
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::acceptance;

    EnvironmentSpec environment = EnvironmentSpec::constant(1.0, 1024);

    SdeParams model;
    InitialProfile profile{ProfileKind::step, 0.5, 0.0, 1.0, 1.0};

    std::vector<double> n_values{100.0, 1000.0, 10000.0};
    double t_min = 0.5;
    double t_max = 2.0;
    double radius = 2.0;
    double offset = 0.5;
    double horizon = 1.0;

    std::size_t replicates = 400;
    std::size_t reference_replicates = 20000;
    std::size_t paths = 10000;
    double meeting_budget = 1e5;  // total time together for the gamma estimator

    std::uint64_t seed = 1;
    std::string out = "ssre_out";
    std::size_t workers = 1;
    ReportFormat format = ReportFormat::both;

    std::map<std::string, double> tolerances = default_tolerances();

    static std::map<std::string, double> default_tolerances();
    double tolerance(const std::string& key) const;

    // Checks every field against the module preconditions; throws
    // ConfigError naming the field.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(std::istream& is, const std::string& source = "<config>");
ExperimentConfig parse_config(const std::string& path);

// Every field is written, so parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace ssre
