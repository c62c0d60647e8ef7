#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "ssre/acceptance.hpp"
#include "ssre/config.hpp"
#include "ssre/report.hpp"
#include "ssre/runner.hpp"

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    std::optional<std::string> format;
    bool quiet = false;
};

int run(ssre::ExperimentKind kind, const Flags& f) {
    ssre::ExperimentConfig cfg;
    try {
        if (!f.config.empty()) cfg = ssre::parse_config(f.config);
        cfg.kind = kind;
        if (f.seed) cfg.seed = *f.seed;
        if (f.out) cfg.out = *f.out;
        if (f.workers) cfg.workers = *f.workers;
        if (f.format) cfg.format = ssre::parse_format(*f.format);
        cfg.validate();
    } catch (const std::exception& e) {
        std::cerr << "ssre: " << e.what() << '\n';
        return 2;
    }
    if (!f.quiet) std::cout << "# config\n" << ssre::serialize_config(cfg) << "# end config\n" << std::flush;

    const auto progress = [&](const ssre::CheckResult& c) {
        if (f.quiet) return;
        std::cout << ssre::acceptance_line(c) << std::endl;
    };

    ssre::ExperimentReport report;
    try {
        report = ssre::run_experiment(cfg, progress);
    } catch (const std::exception& e) {
        std::cerr << "ssre: " << e.what() << '\n';
        return 2;
    }
    try {
        ssre::write_report(report, cfg.out, cfg.format);
    } catch (const std::exception& e) {
        std::cerr << "ssre: " << e.what() << '\n';
        return 2;
    }
    std::size_t failed = 0;
    for (const auto& c : report.checks) failed += c.passed ? 0 : 1;
    std::cout << report.checks.size() - failed << '/' << report.checks.size() << " checks passed; report in "
              << cfg.out << '\n';
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stepping-stone model in a random environment: simulation and verification suites"};
    app.require_subcommand(1);
    Flags flags;
    std::optional<ssre::ExperimentKind> chosen;

    const std::pair<ssre::ExperimentKind, const char*> kinds[] = {
        {ssre::ExperimentKind::env, "environment sampling, pi, effective parameters, scale function"},
        {ssre::ExperimentKind::forward, "forward SDE replicates, martingale and refinement checks"},
        {ssre::ExperimentKind::dual, "single-walk MSD, meeting-average gamma, pair coalescence CDFs"},
        {ssre::ExperimentKind::kernel, "heat kernel, Dirichlet bounds, meeting chain, local CLT"},
        {ssre::ExperimentKind::duality, "forward vs dual moments for one and two lineages"},
        {ssre::ExperimentKind::universality, "rescaled coalescence times vs the Brownian flow reference"},
        {ssre::ExperimentKind::acceptance, "the twelve acceptance criteria"},
    };
    for (const auto& [kind, about] : kinds) {
        auto* sub = app.add_subcommand(std::string(ssre::to_string(kind)), about);
        sub->add_option("--config", flags.config, "key = value config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "master seed");
        sub->add_option("--out", flags.out, "output directory");
        sub->add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--format", flags.format, "report format")->check(CLI::IsMember({"json", "csv", "both"}));
        sub->add_flag("--quiet", flags.quiet, "suppress the config echo and per-check lines");
        sub->callback([&chosen, kind] { chosen = kind; });
    }

    CLI11_PARSE(app, argc, argv);
    return run(*chosen, flags);
}
