#include "ssre/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "ssre/kernel.hpp"
#include "ssre/pair_chain.hpp"
#include "ssre/parallel.hpp"
#include "ssre/stats.hpp"

namespace ssre {

double z_score(double a, double a_se, double b, double b_se) {
    const double se = std::sqrt(a_se * a_se + b_se * b_se);
    const double d = a - b;
    if (se == 0.0) return std::abs(d) <= 1e-12 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), d);
    return d / se;
}

namespace {

SdeParams forward_params(const DualityOptions& opt) {
    SdeParams p;
    p.m = opt.m;
    p.variant = opt.variant;
    p.lambda = opt.lambda;
    p.dt = opt.dt;
    p.T = opt.t;
    return p;
}

double infinity() { return std::numeric_limits<double>::infinity(); }

}  // namespace

std::vector<DualityReport> duality_k1(const Environment& env, const std::vector<double>& p0,
                                      const std::vector<long>& probes, const DualityOptions& opt) {
    if (env.boundary() != Boundary::ring) throw PreconditionError("duality checks run on a ring");
    const SdeParams params = forward_params(opt);
    const auto finals = forward_replicates(env, p0, params, opt.seed, "duality-k1", opt.replicates, opt.workers);
    const GeneratorMatrix gen(env, params.migration());
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(probes.size()), static_cast<Eigen::Index>(env.size()));
    for (std::size_t i = 0; i < probes.size(); ++i) rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(env.index(probes[i]))) = 1.0;
    const Eigen::MatrixXd g = propagate(gen, rows, std::ceil(opt.t / opt.dt - 1e-9) * opt.dt);
    std::vector<DualityReport> out;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        RunningStats s;
        for (const auto& f : finals) s.add(f[env.index(probes[i])]);
        DualityReport r;
        r.label = "k=1 x=" + std::to_string(probes[i]);
        r.forward = s.mean();
        r.forward_se = s.std_error();
        for (std::size_t y = 0; y < env.size(); ++y) r.dual += g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(y)) * p0[y];
        r.z = z_score(r.forward, r.forward_se, r.dual, 0.0);
        out.push_back(r);
    }
    return out;
}

DualityK2Report duality_k2(const Environment& env, const std::vector<double>& p0, long x, long y,
                           const DualityOptions& opt) {
    if (env.boundary() != Boundary::ring) throw PreconditionError("duality checks run on a ring");
    const SdeParams params = forward_params(opt);
    const double t = std::ceil(opt.t / opt.dt - 1e-9) * opt.dt;
    const std::size_t ix = env.index(x), iy = env.index(y);
    const auto finals = forward_replicates(env, p0, params, opt.seed, "duality-k2", opt.replicates, opt.workers);
    RunningStats fwd;
    for (const auto& f : finals) fwd.add(f[ix] * f[iy]);

    const PairCoalescenceChain chain(env, params.migration(), opt.lambda);
    const double exact = chain.product_moment(ix, iy, t, p0);

    const JumpTable rates(env, params.migration());
    std::vector<double> dual(opt.replicates);
    PairOptions po;
    po.lambda = opt.lambda;
    po.horizon = t;
    parallel_for(opt.replicates, opt.workers, [&](std::size_t r) {
        const PairResult res = simulate_pair(rates, env, x, y, po, derive_seed(opt.seed, "duality-k2-dual", r));
        const double a = p0[env.index(res.state.x1)];
        dual[r] = res.state.coalescence_time ? a : a * p0[env.index(res.state.x2)];
    });
    const Estimate d = mean_estimate(dual);

    DualityK2Report rep;
    rep.exact_coalescence_probability = chain.coalescence_probability(ix, iy, t);
    const std::string where = " x=" + std::to_string(x) + " y=" + std::to_string(y);
    rep.versus_exact = {"k=2 forward vs pair chain" + where, fwd.mean(), fwd.std_error(), exact, 0.0,
                        z_score(fwd.mean(), fwd.std_error(), exact, 0.0)};
    rep.versus_dual_mc = {"k=2 forward vs dual walks" + where, fwd.mean(), fwd.std_error(), d.value, d.std_error,
                          z_score(fwd.mean(), fwd.std_error(), d.value, d.std_error)};
    rep.dual_mc_vs_exact = {"k=2 dual walks vs pair chain" + where, d.value, d.std_error, exact, 0.0,
                            z_score(d.value, d.std_error, exact, 0.0)};
    return rep;
}

std::string_view to_string(LocalTimeConvention c) {
    return c == LocalTimeConvention::occupation ? "occupation-density" : "semimartingale";
}

double BrownianFlowParams::epsilon() const { return 4.0 * std::sqrt(2.0 * sigma2 * dt_b); }

void BrownianFlowParams::validate() const {
    if (!(sigma2 > 0.0) || !(gamma > 0.0)) throw PreconditionError("flow needs sigma2 > 0 and gamma > 0");
    for (double g : extra_gammas)
        if (!(g > 0.0)) throw PreconditionError("flow gammas must be positive");
    if (!(T > 0.0) || !(dt_b > 0.0) || dt_b > T) throw PreconditionError("flow needs 0 < dt_b <= T");
    if (replicates == 0) throw PreconditionError("flow needs at least one replicate");
}

double BrownianFlowSample::cdf(std::size_t gi, double t) const {
    const auto& v = times.at(gi);
    std::size_t k = 0;
    for (double x : v) k += x <= t;
    return static_cast<double>(k) / static_cast<double>(v.size());
}

double BrownianFlowSample::moment(const std::function<double(double)>& f) const {
    double s = 0.0;
    for (std::size_t r = 0; r < final_x1.size(); ++r)
        s += coalesced[r] ? f(final_x1[r]) : f(final_x1[r]) * f(final_x2[r]);
    return s / static_cast<double>(final_x1.size());
}

BrownianFlowSample brownian_flow_reference(const BrownianFlowParams& params, std::uint64_t seed) {
    params.validate();
    BrownianFlowSample out;
    out.gammas.push_back(params.gamma);
    out.gammas.insert(out.gammas.end(), params.extra_gammas.begin(), params.extra_gammas.end());
    const std::size_t G = out.gammas.size(), R = params.replicates;
    out.times.assign(G, std::vector<double>(R, infinity()));
    out.final_x1.resize(R);
    out.final_x2.resize(R);
    out.coalesced.assign(R, 0);

    const double v = 2.0 * params.sigma2;
    const double scale = params.convention == LocalTimeConvention::semimartingale ? v : 1.0;
    const double eps = params.epsilon();
    const double dt = params.dt_b;
    const double sd = std::sqrt(v * dt);
    const double inc = dt / (2.0 * eps);
    const auto steps = static_cast<std::size_t>(std::ceil(params.T / dt - 1e-9));

    parallel_for(R, params.workers, [&](std::size_t r) {
        Rng rng = make_rng(derive_seed(seed, "flow", r));
        std::normal_distribution<double> normal;
        const double clock = standard_exponential(rng);
        std::vector<double> threshold(G);
        for (std::size_t g = 0; g < G; ++g) threshold[g] = clock / (out.gammas[g] * scale);
        std::size_t remaining = G;
        double d = params.x2 - params.x1;
        double ell = 0.0;
        double d_at_coal = 0.0, t_coal = params.T;
        bool primary = false;
        for (std::size_t k = 1; k <= steps && remaining > 0; ++k) {
            d += sd * normal(rng);
            const double t = static_cast<double>(k) * dt;
            if (std::abs(d) <= eps) {
                const double before = ell;
                ell += inc;
                for (std::size_t g = 0; g < G; ++g)
                    if (out.times[g][r] == infinity() && ell >= threshold[g]) {
                        out.times[g][r] = t - dt + dt * (threshold[g] - before) / inc;
                        --remaining;
                        if (g == 0) {
                            primary = true;
                            d_at_coal = d;
                            t_coal = out.times[g][r];
                        }
                    }
            } else if (std::abs(d) - eps > 8.5 * std::sqrt(v * (params.T - t))) {
                // Cannot return to the band before T (probability < 1e-16).
                d += std::sqrt(v * (params.T - t)) * normal(rng);
                break;
            }
        }
        // Centre of mass (X1 + X2) / 2 moves with variance sigma2 / 2 until
        // coalescence, the merged lineage with variance sigma2 afterwards.
        const double s0 = 0.5 * (params.x1 + params.x2);
        if (primary) {
            const double s = s0 + std::sqrt(0.5 * params.sigma2 * t_coal) * normal(rng) + 0.5 * d_at_coal;
            const double x = s + std::sqrt(params.sigma2 * (params.T - t_coal)) * normal(rng);
            out.final_x1[r] = out.final_x2[r] = x;
            out.coalesced[r] = 1;
        } else {
            const double s = s0 + std::sqrt(0.5 * params.sigma2 * params.T) * normal(rng);
            out.final_x1[r] = s - 0.5 * d;
            out.final_x2[r] = s + 0.5 * d;
        }
    });
    return out;
}

double flow_coalescence_cdf(double sigma2, double gamma, double separation, double t, LocalTimeConvention convention) {
    if (!(t > 0.0)) return 0.0;
    const double v = 2.0 * sigma2;
    const double ge = gamma * (convention == LocalTimeConvention::semimartingale ? v : 1.0);
    const double alpha = std::abs(separation) / std::sqrt(v * t);
    const double beta = std::sqrt(v / t);
    const double tail = std::exp(ge * alpha / beta + ge * ge / (2.0 * beta * beta) + log_normal_sf(alpha + ge / beta));
    return 2.0 * (normal_sf(alpha) - tail);
}

double flow_coalescence_cdf_quadrature(double sigma2, double gamma, double separation, double t,
                                       LocalTimeConvention convention) {
    if (!(t > 0.0)) return 0.0;
    const double v = 2.0 * sigma2;
    const double ge = gamma * (convention == LocalTimeConvention::semimartingale ? v : 1.0);
    const double a = std::abs(separation) / std::sqrt(v);
    // P(ell_t > y) = 2 Phi-bar((a + y sqrt(v)) / sqrt(t)) for the occupation
    // density ell at 0 of D with D(0) = separation.
    auto integrand = [&](double y) { return ge * std::exp(-ge * y) * 2.0 * normal_sf((a + y * std::sqrt(v)) / std::sqrt(t)); };
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(integrand, 0.0, std::numeric_limits<double>::infinity());
}

bool RefinementReport::stable() const {
    return std::abs(coarse - fine) < 2.0 * std::sqrt(coarse_se * coarse_se + fine_se * fine_se);
}

RefinementReport flow_refinement_check(const BrownianFlowParams& params, std::uint64_t seed) {
    RefinementReport rep;
    auto run = [&](double dt, std::string_view tag, double& p, double& se) {
        BrownianFlowParams q = params;
        q.dt_b = dt;
        q.extra_gammas.clear();
        const auto s = brownian_flow_reference(q, derive_seed(seed, tag, 0));
        p = s.cdf(0, q.T);
        se = std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(q.replicates));
    };
    run(params.dt_b, "refine-coarse", rep.coarse, rep.coarse_se);
    run(0.5 * params.dt_b, "refine-fine", rep.fine, rep.fine_se);
    return rep;
}

namespace {

double ks_with_horizon(const std::vector<double>& sample, const std::function<double(double)>& cdf, double T) {
    double d = ks_one_sample(sample, cdf);
    std::size_t k = 0;
    for (double x : sample) k += x <= T;
    return std::max(d, std::abs(static_cast<double>(k) / static_cast<double>(sample.size()) - cdf(T)));
}

std::vector<double> rescaled_msd(const Environment& env, const Migration& mig, double n, double horizon,
                                 std::size_t paths, std::size_t workers, std::uint64_t seed) {
    const JumpTable rates(env, mig);
    std::vector<double> sq(paths);
    const std::vector<double> grid{n * horizon};
    parallel_for(paths, workers, [&](std::size_t i) {
        Rng rng = make_rng(derive_seed(seed, "universality-msd", i));
        const long start = static_cast<long>(uniform01(rng) * static_cast<double>(env.size()));
        const auto pos = walk_positions(rates, start, grid, rng);
        const double d = static_cast<double>(pos[0] - start);
        sq[i] = d * d / n;
    });
    return sq;
}

}  // namespace

ConventionChoice calibrate_local_time(double n0, const UniversalityOptions& opt) {
    EnvironmentSpec spec = EnvironmentSpec::constant(n0, std::min<std::size_t>(opt.ring, 4096));
    const Environment env = sample_environment(spec, 0);
    const Migration mig{opt.m, Variant::standard};
    const EffectiveParams ep = effective_params(spec, opt.m);
    CoalescenceOptions co;
    co.n_values = {opt.n_values.back()};
    co.offset = opt.offset;
    co.horizon = opt.horizon;
    co.replicates = opt.replicates;
    co.workers = opt.workers;
    co.seed = derive_seed(opt.seed, "calibration-dual", 0);
    const auto dual = coalescence_stats(env, mig, co);
    BrownianFlowParams bp;
    bp.sigma2 = ep.sigma2;
    bp.gamma = ep.gamma;
    bp.extra_gammas = {ep.gamma * 2.0 * ep.sigma2};
    bp.x2 = opt.offset;
    bp.T = opt.horizon;
    bp.dt_b = opt.dt_b * opt.horizon;
    bp.replicates = opt.ref_replicates;
    bp.workers = opt.workers;
    const auto ref = brownian_flow_reference(bp, derive_seed(opt.seed, "calibration-flow", 0));
    ConventionChoice c;
    c.ks_occupation = ks_two_sample(dual.rescaled_times.back(), ref.times[0]);
    c.ks_semimartingale = ks_two_sample(dual.rescaled_times.back(), ref.times[1]);
    c.chosen = c.ks_occupation <= c.ks_semimartingale ? LocalTimeConvention::occupation
                                                      : LocalTimeConvention::semimartingale;
    return c;
}

std::vector<UniversalityRow> universality_report(const std::vector<EnvironmentSpec>& specs,
                                                 const UniversalityOptions& opt) {
    if (opt.n_values.empty()) throw PreconditionError("universality needs at least one n");
    const double alpha = 0.01;
    std::vector<UniversalityRow> rows;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        EnvironmentSpec spec = specs[i];
        spec.length = opt.ring;
        spec.boundary = Boundary::ring;
        const Environment env = sample_environment(spec, derive_seed(opt.seed, "universality-env", i));
        const Migration mig{opt.m, Variant::standard};
        UniversalityRow row;
        row.environment = spec.describe();
        row.params = effective_params(spec, opt.m);
        row.offset = opt.offset;
        row.n = opt.n_values.back();

        CoalescenceOptions co;
        co.n_values = opt.n_values;
        co.offset = opt.offset;
        co.horizon = opt.horizon;
        co.replicates = opt.replicates;
        co.workers = opt.workers;
        co.seed = derive_seed(opt.seed, "universality-dual", i);
        const CoalescenceTable dual = coalescence_stats(env, mig, co);
        row.boundary_aborts = dual.boundary_aborts;
        const auto& sample = dual.rescaled_times.back();
        row.dual_samples = sample.size();

        const double g_formula = row.params.gamma;
        const double g_negative = 1.0 / row.params.mean_n;
        const double g_corrected = row.params.gamma * row.params.mean_pi_sq;
        BrownianFlowParams bp;
        bp.sigma2 = row.params.sigma2;
        bp.gamma = g_formula;
        bp.extra_gammas = {g_negative, g_corrected};
        bp.x2 = opt.offset;
        bp.T = opt.horizon;
        bp.dt_b = opt.dt_b * opt.horizon;
        bp.replicates = opt.ref_replicates;
        bp.convention = opt.convention;
        bp.workers = opt.workers;
        const auto ref = brownian_flow_reference(bp, derive_seed(opt.seed, "universality-flow", i));

        const double band = dkw_epsilon(sample.size(), alpha) + dkw_epsilon(opt.ref_replicates, alpha);
        auto compare = [&](std::string label, double g, std::size_t gi) {
            return KsComparison{std::move(label), g, ks_two_sample(sample, ref.times[gi]), band};
        };
        row.formula = compare("formula gamma", g_formula, 0);
        row.negative_control = compare("gamma = 1/<N>", g_negative, 1);
        row.corrected = compare("gamma * <pi^2>", g_corrected, 2);
        row.oracle_ks = ks_with_horizon(
            sample,
            [&](double t) { return flow_coalescence_cdf(row.params.sigma2, g_formula, opt.offset, t, opt.convention); },
            opt.horizon);
        if (dual.rescaled_times.size() >= 2) {
            const auto& prev = dual.rescaled_times[dual.rescaled_times.size() - 2];
            row.cauchy_ks = ks_two_sample(prev, sample);
            row.cauchy_band = dkw_epsilon(prev.size(), alpha) + dkw_epsilon(sample.size(), alpha);
        }
        const auto sq = rescaled_msd(env, mig, row.n, opt.horizon, opt.msd_paths, opt.workers,
                                     derive_seed(opt.seed, "universality-msd", i));
        const Estimate msd = mean_estimate(sq);
        row.msd_ratio = msd.value / (row.params.sigma2 * opt.horizon);
        row.msd_ratio_se = msd.std_error / (row.params.sigma2 * opt.horizon);

        for (std::size_t k = 0; k <= 100; ++k) row.grid.push_back(opt.horizon * static_cast<double>(k) / 100.0);
        row.dual_cdf = empirical_cdf(sample, row.grid);
        row.ref_cdf = empirical_cdf(ref.times[0], row.grid);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace ssre
