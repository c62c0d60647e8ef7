#pragma once

#include <functional>

#include "ssre/acceptance.hpp"
#include "ssre/config.hpp"
#include "ssre/report.hpp"

namespace ssre {

// Dispatches on config.kind. Each check runs guarded, so a module error is
// recorded against that check and its siblings still run. Numeric output is
// a function of (config, seed) only; the worker count does not change it.
// `progress` (optional) sees each finished check.
ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::function<void(const CheckResult&)>& progress = {});

}  // namespace ssre
