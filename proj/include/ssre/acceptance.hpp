#pragma once

#include <cstdint>
#include <functional>
#include <set>

#include "ssre/report.hpp"

namespace ssre {

struct AcceptanceOptions {
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    std::set<int> only;  // empty: all twelve criteria
    // Called once per criterion as soon as its verdict is known.
    std::function<void(int id, const CheckResult&)> on_result;
};

inline constexpr int acceptance_criteria = 12;

// The full battery; one check per criterion (named "criterion <k>: ..."),
// with supporting curves in report.tables and sub-results in report.summary.
ExperimentReport run_acceptance(const AcceptanceOptions& opt);

// One line per criterion: "PASS  criterion 3: ...  (detail)".
std::string acceptance_line(const CheckResult& c);

}  // namespace ssre
