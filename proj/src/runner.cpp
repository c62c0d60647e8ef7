#include "ssre/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "ssre/coupling.hpp"
#include "ssre/effective.hpp"
#include "ssre/forward.hpp"
#include "ssre/harness.hpp"
#include "ssre/kernel.hpp"
#include "ssre/parallel.hpp"
#include "ssre/stats.hpp"
#include "ssre/walks.hpp"

namespace ssre {

namespace {

using nlohmann::json;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Run {
    const ExperimentConfig& cfg;
    ExperimentReport& rep;
    const std::function<void(const CheckResult&)>& progress;

    Migration mig() const { return {cfg.model.m, cfg.model.variant}; }
    std::uint64_t child(std::string_view tag, std::uint64_t i = 0) const { return derive_seed(cfg.seed, tag, i); }
    double tol(const char* key) const { return cfg.tolerance(key); }

    void check(std::string name, double estimate, double reference, double tolerance, bool passed,
               std::string detail = {}, double se = std::numeric_limits<double>::quiet_NaN()) const {
        CheckResult c;
        c.name = std::move(name);
        c.estimate = estimate;
        c.reference = reference;
        c.tolerance = tolerance;
        c.std_error = se;
        c.passed = passed;
        c.detail = std::move(detail);
        rep.checks.push_back(c);
        if (progress) progress(c);
    }
    void guard(const std::string& name, const std::function<void()>& body) const {
        const std::size_t before = rep.checks.size();
        guarded(rep, name, body);
        if (progress && rep.checks.size() > before && !rep.checks.back().error.empty()) progress(rep.checks.back());
    }
    Environment environment(std::size_t length, Boundary boundary = Boundary::ring) const {
        EnvironmentSpec spec = cfg.environment;
        spec.length = length;
        spec.boundary = boundary;
        return sample_environment(spec, cfg.seed);
    }
};

json params_json(const EffectiveParams& p) {
    return {{"sigma2", p.sigma2},         {"gamma", p.gamma},
            {"c", p.c},                   {"n_n3", p.n_n3},
            {"n_n3_sq", p.n_n3_sq},       {"n_n3_squared", p.n_n3_squared},
            {"mean_n", p.mean_n},         {"sigma2_dirichlet", p.sigma2_dirichlet},
            {"gamma_pi", p.gamma_pi},     {"mean_pi_sq", p.mean_pi_sq},
            {"m", p.m},                   {"variant", std::string(to_string(p.variant))},
            {"method", p.method}};
}

void run_env(const Run& r) {
    const auto& cfg = r.cfg;
    const Environment env = r.environment(cfg.environment.length, cfg.environment.boundary);
    const Migration mig = r.mig();
    r.rep.seeds.push_back({"environment", cfg.seed, 1});

    r.guard("ellipticity", [&] {
        const auto [lo, hi] = std::minmax_element(env.sizes().begin(), env.sizes().end());
        const double K = env.K();
        r.check("ellipticity", *hi, K, 0.0, *lo >= 1.0 / K && *hi <= K,
                "sizes in [" + num(*lo) + ", " + num(*hi) + "], K = " + num(K));
    });
    r.guard("pi normalization", [&] {
        const auto pi = reversible_pi(env, mig);
        const auto mean = static_cast<double>(std::accumulate(pi.begin(), pi.end(), 0.0L) / static_cast<long double>(pi.size()));
        r.check("pi normalization", mean, 1.0, 1e-14, std::abs(mean - 1.0) <= 1e-14);
        const auto n3s = n3_profile(env, mig);
        const ScaleFunction F(env);
        CurveTable t{"environment", {"x", "N", "N3", "pi", "F"}, {}};
        for (std::size_t x = 0; x < env.size(); ++x)
            t.rows.push_back({static_cast<double>(x), env.sizes()[x], n3s[x], pi[x], F(static_cast<long>(x))});
        r.rep.tables.push_back(std::move(t));
    });
    r.guard("detailed balance", [&] {
        const auto pi = reversible_pi(env, mig);
        double worst = 0.0;
        const long L = static_cast<long>(env.size());
        for (long x = 0; x + (env.boundary() == Boundary::ring ? 0 : 1) < L; ++x) {
            const double a = pi[env.index(x)] * jump_rates(env, x, mig).right;
            const double b = pi[env.index(x + 1)] * jump_rates(env, x + 1, mig).left;
            worst = std::max(worst, std::abs(a - b));
        }
        r.check("detailed balance", worst, 0.0, r.tol("residual"), worst <= r.tol("residual"));
    });
    r.guard("martingale identity", [&] {
        const double res = martingale_identity_check(env, mig);
        r.check("martingale identity", res, 0.0, r.tol("residual"), res <= r.tol("residual"));
    });
    r.guard("effective parameters", [&] {
        const EffectiveParams ep = effective_params(cfg.environment, cfg.model.m, cfg.model.variant);
        r.rep.summary["effective"] = params_json(ep);
        r.rep.summary["window"] = params_json(effective_params(env, mig));
        const double ds = std::abs(ep.sigma2 - ep.sigma2_dirichlet), dg = std::abs(ep.gamma - ep.gamma_pi);
        r.check("sigma2 two-route agreement", ep.sigma2, ep.sigma2_dirichlet, 1e-12, ds <= 1e-12);
        r.check("gamma two-route agreement", ep.gamma, ep.gamma_pi, 1e-12, dg <= 1e-12);
        const double cap = cfg.model.variant == Variant::standard ? 2.0 * cfg.model.m / 3.0 : cfg.model.m;
        r.check("sigma2 bound", ep.sigma2, cap, 1e-12, ep.sigma2 <= cap + 1e-12);
        if (cfg.environment.is_iid())
            r.check("gamma bound", ep.gamma, 1.0 / ep.mean_n, 1e-12, ep.gamma <= 1.0 / ep.mean_n + 1e-12);
    });
    r.guard("scale-function slope", [&] {
        const ScaleFunction F(env);
        const double c = effective_params(cfg.environment, cfg.model.m, cfg.model.variant).c;
        const auto avg = ensemble_average(cfg.environment, Functional::inv_n_shift, mig, env.size(), cfg.seed);
        const double K = env.K();
        const double slack = 4.0 * avg.std_error + 2.0 * K * K / static_cast<double>(env.size() - 1);
        r.check("scale-function slope", F.slope(), c, slack, std::abs(F.slope() - c) <= slack,
                "F(L-1)/(L-1) over " + std::to_string(env.size()) + " sites", avg.std_error);
    });
}

void run_forward(const Run& r) {
    const auto& cfg = r.cfg;
    const Environment env = r.environment(cfg.environment.length, cfg.environment.boundary);
    const std::size_t L = env.size();
    const double n = cfg.n_values.front();
    const double origin = 0.5 * static_cast<double>(L);
    const auto p0 = cfg.profile.instantiate(L, n, origin);
    const SdeParams& params = cfg.model;
    const auto pi = reversible_pi(env, params.migration());
    auto mass = [&](const std::vector<double>& p) {
        double s = 0.0;
        for (std::size_t x = 0; x < L; ++x) s += pi[x] * p[x];
        return s / static_cast<double>(L);
    };
    const auto phi = [](double u) { return std::abs(u) <= 1.0 ? 1.0 - std::abs(u) : 0.0; };

    std::vector<double> times;
    for (int k = 0; k <= 4; ++k) times.push_back(params.T * k / 4.0);
    const std::uint64_t master = r.child("forward");
    r.rep.seeds.push_back({"forward", master, cfg.replicates});
    std::vector<Trajectory> trajs(cfg.replicates);
    parallel_for(cfg.replicates, cfg.workers,
                 [&](std::size_t i) { trajs[i] = simulate_forward(env, p0, params, derive_seed(master, "forward", i), times); });

    r.guard("range preservation", [&] {
        bool ok = true;
        for (const auto& tr : trajs)
            for (const auto& f : tr.snapshots)
                for (double v : f.p) ok = ok && v >= 0.0 && v <= 1.0;
        r.check("range preservation", ok ? 1.0 : 0.0, 1.0, 0.0, ok);
    });
    r.guard("pi-weighted mean martingale", [&] {
        RunningStats s;
        for (const auto& tr : trajs) s.add(mass(tr.snapshots.back().p));
        const double z = s.std_error() > 0.0 ? (s.mean() - mass(p0)) / s.std_error() : 0.0;
        r.check("pi-weighted mean martingale", s.mean(), mass(p0), r.tol("z_max"), std::abs(z) <= r.tol("z_max"),
                "z = " + num(z), s.std_error());
    });
    r.guard("absorbing states", [&] {
        bool ok = true;
        for (double level : {0.0, 1.0}) {
            const auto tr = simulate_forward(env, std::vector<double>(L, level), params, r.child("absorbing"), {params.T});
            for (double v : tr.snapshots.back().p) ok = ok && v == level;
        }
        r.check("absorbing states", ok ? 1.0 : 0.0, 1.0, 0.0, ok);
    });
    r.guard("dt refinement", [&] {
        const std::uint64_t rm = r.child("forward-refinement");
        r.rep.seeds.push_back({"forward-refinement", rm, cfg.replicates});
        std::vector<RefinementPair> pairs(cfg.replicates);
        parallel_for(cfg.replicates, cfg.workers, [&](std::size_t i) {
            pairs[i] = simulate_refinement_pair(env, p0, params, derive_seed(rm, "forward-refinement", i));
        });
        double worst = 0.0;
        for (std::size_t x = 0; x < L; ++x) {
            RunningStats c, f;
            for (const auto& p : pairs) {
                c.add(p.coarse[x]);
                f.add(p.fine[x]);
            }
            const double shift = std::abs(c.mean() - f.mean());
            // Floor for sites frozen at 0 or 1, where the two runs differ only by rounding.
            worst = std::max(worst, shift / std::max(f.std_error(), 1e-12));
        }
        r.check("dt refinement", worst, 0.0, 1.0, worst < 1.0, "max shift / Monte Carlo SE");
    });
    r.guard("snapshots", [&] {
        CurveTable snaps{"forward_snapshots", {"replicate", "t", "x", "p"}, {}};
        for (std::size_t i = 0; i < std::min<std::size_t>(4, trajs.size()); ++i)
            for (const auto& f : trajs[i].snapshots)
                for (std::size_t x = 0; x < L; ++x)
                    snaps.rows.push_back({static_cast<double>(i), f.t, static_cast<double>(x), f.p[x]});
        r.rep.tables.push_back(std::move(snaps));
        CurveTable summary{"forward_summary", {"t", "pi_mass_mean", "pi_mass_var", "pairing_mean", "pairing_var"}, {}};
        const double half = std::min(origin, static_cast<double>(L) - 1.0 - origin) / std::sqrt(n);
        const bool fits = half >= 1.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            RunningStats m, pr;
            for (const auto& tr : trajs) {
                m.add(mass(tr.snapshots[k].p));
                if (fits) pr.add(pairing(tr.snapshots[k].p, n, phi, -1.0, 1.0, origin));
            }
            const double nan = std::numeric_limits<double>::quiet_NaN();
            summary.rows.push_back({trajs.front().snapshots[k].t, m.mean(), m.variance(), fits ? pr.mean() : nan,
                                    fits ? pr.variance() : nan});
        }
        r.rep.tables.push_back(std::move(summary));
        std::vector<FrequencyField> all;
        for (const auto& f : trajs.front().snapshots) all.push_back(f);
        r.rep.summary["holder_modulus_beta_0.1"] = holder_modulus(all, 0.1, n);
    });
}

void run_dual(const Run& r) {
    const auto& cfg = r.cfg;
    const Migration mig = r.mig();
    const EffectiveParams ep = effective_params(cfg.environment, cfg.model.m, cfg.model.variant);
    r.rep.summary["effective"] = params_json(ep);

    r.guard("msd homogenization", [&] {
        const double n = cfg.n_values.back();
        const double T = n * cfg.horizon;
        const std::size_t ring = std::max<std::size_t>(cfg.environment.length, 1024);
        const Environment env = r.environment(ring);
        const JumpTable rates(env, mig);
        std::vector<double> grid;
        for (int k = 0; k <= 8; ++k) grid.push_back(T * std::pow(10.0, -2.0 + 0.25 * k));
        std::vector<std::vector<double>> disp(cfg.paths);
        std::vector<long> starts(cfg.paths);
        std::vector<double> fdiff(cfg.paths);
        const ScaleFunction F(env);
        const std::uint64_t master = r.child("msd");
        r.rep.seeds.push_back({"msd", master, cfg.paths});
        parallel_for(cfg.paths, cfg.workers, [&](std::size_t i) {
            Rng rng = make_rng(derive_seed(master, "msd", i));
            starts[i] = static_cast<long>(uniform01(rng) * static_cast<double>(ring));
            const auto pos = walk_positions(rates, starts[i], grid, rng);
            disp[i].resize(pos.size());
            for (std::size_t k = 0; k < pos.size(); ++k) disp[i][k] = static_cast<double>(pos[k] - starts[i]);
            fdiff[i] = F(pos.back()) - F(starts[i]);
        });
        const MsdReport rep = msd_and_variance_bound(disp, grid, starts, env, mig);
        CurveTable t{"msd", {"t", "msd_over_t", "se", "sigma2"}, {}};
        for (std::size_t k = 0; k < grid.size(); ++k) t.rows.push_back({grid[k], rep.msd_over_t[k], rep.se[k], ep.sigma2});
        r.rep.tables.push_back(std::move(t));
        const double ratio = rep.msd_over_t.back() / ep.sigma2;
        r.check("msd homogenization", rep.msd_over_t.back(), ep.sigma2, r.tol("msd_rel"),
                std::abs(ratio - 1.0) <= r.tol("msd_rel"), "MSD/(sigma2 t) = " + num(ratio), rep.se.back());
        r.check("msd no upward trend", rep.trend_slope, 0.0, 3.0 * rep.trend_slope_se, !rep.upward_trend);
        const Estimate fm = mean_estimate(fdiff);
        const double z = fm.std_error > 0.0 ? fm.value / fm.std_error : 0.0;
        r.check("scale-function martingale (Monte Carlo)", fm.value, 0.0, r.tol("z_max"), std::abs(z) <= r.tol("z_max"),
                "z = " + num(z), fm.std_error);
    });
    r.guard("gamma meeting estimator", [&] {
        const std::size_t ring = std::max<std::size_t>(cfg.environment.length, 64);
        const Environment env = r.environment(ring);
        const JumpTable rates(env, mig);
        const std::size_t runs = 64;
        std::vector<MeetingRecord> records(runs);
        PairOptions po;
        po.coalesce = false;
        po.horizon = std::numeric_limits<double>::infinity();
        po.meeting_budget = cfg.meeting_budget / static_cast<double>(runs);
        const std::uint64_t master = r.child("gamma");
        r.rep.seeds.push_back({"gamma", master, runs});
        parallel_for(runs, cfg.workers, [&](std::size_t i) {
            Rng rng = make_rng(derive_seed(master, "gamma", i));
            const long x = static_cast<long>(uniform01(rng) * static_cast<double>(ring));
            records[i] = simulate_pair(rates, env, x, x, po, rng).record;
        });
        const auto pi = reversible_pi(env, mig);
        const GammaEstimate g = gamma_meeting_estimator(records, &pi);
        r.rep.summary["gamma_meeting"] = {{"estimate", g.value},       {"std_error", g.std_error},
                                          {"meeting_time", g.total_meeting_time}, {"chi_square", g.chi_square},
                                          {"window_gamma", effective_params(env, mig).gamma}};
        r.check("gamma meeting estimator", g.value, ep.gamma, r.tol("gamma_rel"),
                std::abs(g.value / ep.gamma - 1.0) <= r.tol("gamma_rel"), "relative tolerance", g.std_error);
    });
    r.guard("clock at coalescence", [&] {
        const Environment env = r.environment(std::max<std::size_t>(cfg.environment.length, 16));
        const JumpTable rates(env, mig);
        std::vector<double> ell(cfg.replicates, 0.0);
        PairOptions po;
        po.lambda = 1.0;
        po.horizon = std::numeric_limits<double>::infinity();
        po.stop_at_coalescence = true;
        const std::uint64_t master = r.child("clock");
        r.rep.seeds.push_back({"clock", master, cfg.replicates});
        parallel_for(cfg.replicates, cfg.workers, [&](std::size_t i) {
            ell[i] = simulate_pair(rates, env, 0, 0, po, derive_seed(master, "clock", i)).state.local_time;
        });
        const double d = ks_one_sample(ell, [](double x) { return x > 0.0 ? -std::expm1(-x) : 0.0; });
        const double p = kolmogorov_pvalue(std::sqrt(static_cast<double>(ell.size())) * d);
        r.check("clock at coalescence is Exp(1)", p, r.tol("alpha"), r.tol("alpha"), p >= r.tol("alpha"),
                "KS p-value, D = " + num(d));
    });
    r.guard("coalescence CDF", [&] {
        const std::size_t ring = std::max<std::size_t>(cfg.environment.length, 4096);
        const Environment env = r.environment(ring);
        CoalescenceOptions co;
        co.n_values = cfg.n_values;
        co.offset = cfg.offset;
        co.horizon = cfg.horizon;
        co.replicates = cfg.replicates;
        co.workers = cfg.workers;
        co.seed = r.child("coalescence");
        const CoalescenceTable tab = coalescence_stats(env, mig, co);
        std::vector<double> grid;
        for (int k = 0; k <= 100; ++k) grid.push_back(cfg.horizon * k / 100.0);
        for (std::size_t i = 0; i < tab.n_values.size(); ++i) {
            const auto& s = tab.rescaled_times[i];
            r.rep.seeds.push_back({"coalescence/n=" + std::to_string(static_cast<long long>(tab.n_values[i])), co.seed,
                                   cfg.replicates});
            r.rep.tables.push_back(cdf_table("coalescence_n" + std::to_string(static_cast<long long>(tab.n_values[i])),
                                             grid, empirical_cdf(s, grid), dkw_epsilon(s.size(), r.tol("alpha"))));
        }
        if (tab.rescaled_times.size() >= 2) {
            const auto& a = tab.rescaled_times[tab.rescaled_times.size() - 2];
            const auto& b = tab.rescaled_times.back();
            const double ks = ks_two_sample(a, b);
            const double band = dkw_epsilon(a.size(), r.tol("alpha")) + dkw_epsilon(b.size(), r.tol("alpha"));
            r.check("coalescence CDF Cauchy", ks, 0.0, band, ks < band, "KS between the two largest scales");
        }
        r.check("coalescence boundary aborts", static_cast<double>(tab.boundary_aborts), 0.0, 0.0,
                tab.boundary_aborts == 0);
    });
}

void run_kernel(const Run& r) {
    const auto& cfg = r.cfg;
    const Migration mig = r.mig();
    const std::size_t L = std::clamp<std::size_t>(cfg.environment.length, 3, 4096);
    const Environment env = r.environment(L);
    const GeneratorMatrix gen(env, mig);
    r.guard("generator", [&] {
        r.check("generator detailed balance", gen.detailed_balance_residual(), 0.0, r.tol("residual"),
                gen.detailed_balance_residual() <= r.tol("residual"));
        if (L <= 1024)
            r.check("generator row sums", gen.row_sum_residual(), 0.0, 1e-14, gen.row_sum_residual() <= 1e-14);
    });
    if (L <= 512) {
        r.guard("heat kernel", [&] {
            const HeatKernel hk = heat_kernel(gen, cfg.t_max);
            r.check("heat kernel row sums", hk.row_sum_residual(), 0.0, 1e-10, hk.row_sum_residual() <= 1e-10);
            r.check("heat kernel symmetry", hk.symmetry_residual(), 0.0, 1e-10, hk.symmetry_residual() <= 1e-10);
            const HeatKernel a = heat_kernel(gen, cfg.t_min), b = heat_kernel(gen, cfg.t_max - cfg.t_min);
            const double semi = (a.g * b.g - hk.g).cwiseAbs().maxCoeff();
            r.check("semigroup property", semi, 0.0, 1e-8, semi <= 1e-8);
        });
        r.guard("Dirichlet inequality", [&] {
            double worst = 0.0;
            bool ok = true;
            for (double t : {cfg.t_min, 1.0, cfg.t_max, 10.0})
                for (std::size_t x = 0; x < L; x += std::max<std::size_t>(1, L / 8)) {
                    const auto d = dirichlet_form_check(gen, t, x);
                    ok = ok && d.holds();
                    worst = std::max(worst, d.form / d.bound);
                }
            r.check("Dirichlet inequality", worst, 1.0, 0.0, ok, "max Q / bound");
        });
        r.guard("on-diagonal bound", [&] {
            std::vector<double> times;
            for (int k = 0; k <= 12; ++k) times.push_back(0.1 * std::pow(10.0, 0.25 * k));
            const auto rep = kernel_bound_check(gen, times, {{0, 1}, {0, std::min<std::size_t>(4, L - 1)}}, env.K());
            const double sup = *std::max_element(rep.diagonal.begin(), rep.diagonal.end());
            r.check("on-diagonal bound", sup, rep.diagonal_bound, 0.0, rep.diagonal_ok);
            r.rep.summary["kernel_bounds"] = {{"holder_growth", rep.holder_growth},
                                              {"integrated_growth", rep.integrated_growth}};
            CurveTable t{"kernel_bounds", {"t", "diagonal", "holder", "integrated"}, {}};
            for (std::size_t k = 0; k < rep.times.size(); ++k)
                t.rows.push_back({rep.times[k], rep.diagonal[k], rep.holder[k], rep.integrated[k]});
            r.rep.tables.push_back(std::move(t));
        });
    }
    r.guard("meeting chain", [&] {
        const Environment small = r.environment(std::min<std::size_t>(L, 12));
        const MeetingChain mc = meeting_chain(small, mig);
        r.check("meeting chain pi^2 detailed balance", mc.detailed_balance_residual, 0.0, 1e-8,
                mc.detailed_balance_residual <= 1e-8);
        r.check("meeting chain stationary law", mc.null_vector_distance, 0.0, 1e-8, mc.null_vector_distance <= 1e-8);
    });
    r.guard("local CLT", [&] {
        LocalCltOptions opt;
        opt.n_values = cfg.n_values;
        opt.t_min = cfg.t_min;
        opt.t_max = cfg.t_max;
        opt.radius = cfg.radius;
        opt.sigma2 = effective_params(cfg.environment, cfg.model.m, cfg.model.variant).sigma2;
        opt.sigma2_upper = cfg.model.variant == Variant::standard ? 2.0 * cfg.model.m / 3.0 : cfg.model.m;
        opt.workers = cfg.workers;
        const std::size_t need = anti_wrap_length(cfg.n_values.back(), cfg.t_max, cfg.radius, opt.sigma2_upper);
        const Environment master = r.environment(need);
        auto make_env = [&](double n) {
            const std::size_t len = anti_wrap_length(n, opt.t_max, opt.radius, opt.sigma2_upper);
            const std::size_t lo = master.size() / 2 - len / 2;
            std::vector<double> sizes(master.sizes().begin() + static_cast<long>(lo),
                                      master.sizes().begin() + static_cast<long>(lo + len));
            return environment_from_sizes(std::move(sizes), Boundary::ring, master.K());
        };
        const auto rows = local_clt_error(make_env, mig, opt);
        CurveTable t{"local_clt", {"n", "sup_error", "ring"}, {}};
        bool decreasing = true;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            t.rows.push_back({rows[i].n, rows[i].sup_error, static_cast<double>(rows[i].ring)});
            if (i > 0) decreasing = decreasing && rows[i].sup_error < rows[i - 1].sup_error;
        }
        r.rep.tables.push_back(std::move(t));
        r.check("local CLT decreasing", decreasing ? 1.0 : 0.0, 1.0, 0.0, decreasing);
        r.check("local CLT final error", rows.back().sup_error, 0.0, r.tol("lclt_max"),
                rows.back().sup_error < r.tol("lclt_max"));
    });
}

void run_duality(const Run& r) {
    const auto& cfg = r.cfg;
    DualityOptions opt;
    opt.m = cfg.model.m;
    opt.variant = cfg.model.variant;
    opt.lambda = cfg.model.lambda;
    opt.t = cfg.model.T;
    opt.dt = cfg.model.dt;
    opt.replicates = cfg.replicates;
    opt.workers = cfg.workers;
    r.guard("duality k=1", [&] {
        const std::size_t L = std::clamp<std::size_t>(cfg.environment.length, 16, 512);
        const Environment env = r.environment(L);
        const double origin = 0.5 * static_cast<double>(L);
        const auto p0 = cfg.profile.instantiate(L, cfg.n_values.front(), origin);
        opt.seed = r.child("duality-k1");
        r.rep.seeds.push_back({"duality-k1", opt.seed, opt.replicates});
        const long c = static_cast<long>(origin);
        for (const auto& d : duality_k1(env, p0, {c - 4, c - 2, c, c + 2, c + 4}, opt))
            r.check("duality " + d.label, d.forward, d.dual, r.tol("z_max"), std::abs(d.z) <= r.tol("z_max"),
                    "z = " + num(d.z), d.forward_se);
    });
    r.guard("duality k=2", [&] {
        const Environment env = r.environment(16);
        const auto p0 = cfg.profile.instantiate(16, 4.0, 8.0);
        opt.seed = r.child("duality-k2");
        r.rep.seeds.push_back({"duality-k2", opt.seed, opt.replicates});
        r.rep.seeds.push_back({"duality-k2-dual", opt.seed, opt.replicates});
        const auto k2 = duality_k2(env, p0, 7, 8, opt);
        for (const auto* d : {&k2.versus_exact, &k2.versus_dual_mc, &k2.dual_mc_vs_exact})
            r.check("duality " + d->label, d->forward, d->dual, r.tol("z_max"), std::abs(d->z) <= r.tol("z_max"),
                    "z = " + num(d->z), d->forward_se);
        r.rep.summary["k2_coalescence_probability"] = k2.exact_coalescence_probability;
    });
}

void run_universality(const Run& r) {
    const auto& cfg = r.cfg;
    UniversalityOptions opt;
    opt.m = cfg.model.m;
    opt.n_values = cfg.n_values;
    opt.offset = cfg.offset;
    opt.horizon = cfg.horizon;
    opt.replicates = cfg.replicates;
    opt.ref_replicates = cfg.reference_replicates;
    opt.ring = std::max<std::size_t>(cfg.environment.length, 4096);
    opt.msd_paths = std::min<std::size_t>(cfg.paths, 2000);
    opt.workers = cfg.workers;
    opt.seed = r.child("universality");
    r.guard("local-time convention", [&] {
        const ConventionChoice conv = calibrate_local_time(1.0, opt);
        opt.convention = conv.chosen;
        r.rep.summary["convention"] = {{"chosen", std::string(to_string(conv.chosen))},
                                       {"ks_occupation", conv.ks_occupation},
                                       {"ks_semimartingale", conv.ks_semimartingale}};
    });
    r.guard("universality", [&] {
        const auto rows = universality_report({cfg.environment}, opt);
        const auto& row = rows.front();
        for (std::size_t i = 0; i < cfg.n_values.size(); ++i)
            r.rep.seeds.push_back({"coalescence/n=" + std::to_string(static_cast<long long>(cfg.n_values[i])),
                                   derive_seed(opt.seed, "universality-dual", 0), opt.replicates});
        r.rep.seeds.push_back({"flow", derive_seed(opt.seed, "universality-flow", 0), opt.ref_replicates});
        r.check("dual vs flow reference", row.formula.ks, 0.0, row.formula.band, row.formula.within(),
                "gamma = " + num(row.formula.gamma));
        r.rep.summary["universality"] = {{"environment", row.environment},
                                         {"ks_negative_control", row.negative_control.ks},
                                         {"ks_corrected_gamma", row.corrected.ks},
                                         {"ks_exact_flow_cdf", row.oracle_ks},
                                         {"cauchy_ks", row.cauchy_ks},
                                         {"cauchy_band", row.cauchy_band},
                                         {"msd_ratio", row.msd_ratio},
                                         {"msd_ratio_se", row.msd_ratio_se}};
        r.rep.tables.push_back(cdf_table("universality_dual", row.grid, row.dual_cdf,
                                         dkw_epsilon(row.dual_samples, r.tol("alpha"))));
        r.rep.tables.push_back(cdf_table("universality_reference", row.grid, row.ref_cdf,
                                         dkw_epsilon(opt.ref_replicates, r.tol("alpha"))));
    });
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::function<void(const CheckResult&)>& progress) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    ExperimentReport report;
    if (config.kind == ExperimentKind::acceptance) {
        AcceptanceOptions opt;
        opt.seed = config.seed;
        opt.workers = config.workers;
        if (progress) opt.on_result = [&](int, const CheckResult& c) { progress(c); };
        report = run_acceptance(opt);
    } else {
        report.kind = std::string(to_string(config.kind));
        report.master_seed = config.seed;
        const Run run{config, report, progress};
        switch (config.kind) {
            case ExperimentKind::env: run_env(run); break;
            case ExperimentKind::forward: run_forward(run); break;
            case ExperimentKind::dual: run_dual(run); break;
            case ExperimentKind::kernel: run_kernel(run); break;
            case ExperimentKind::duality: run_duality(run); break;
            case ExperimentKind::universality: run_universality(run); break;
            case ExperimentKind::acceptance: break;
        }
    }
    report.config_echo = serialize_config(config);
    report.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

}  // namespace ssre
