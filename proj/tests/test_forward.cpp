#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "ssre/forward.hpp"
#include "ssre/parallel.hpp"
#include "ssre/stats.hpp"

using namespace ssre;

namespace {

Environment iid_ring(std::size_t L, std::uint64_t seed) {
    return sample_environment(EnvironmentSpec::iid_discrete({1.0, 2.0}, {0.5, 0.5}, L), seed);
}

double pi_mass(const std::vector<double>& pi, const std::vector<double>& p) {
    double s = 0.0;
    for (std::size_t x = 0; x < p.size(); ++x) s += pi[x] * p[x];
    return s / static_cast<double>(p.size());
}

}  // namespace

TEST(SdeParams, StepBound) {
    SdeParams p;
    p.m = 1.0;
    p.lambda = 100.0;
    EXPECT_DOUBLE_EQ(p.max_dt(2.0), 0.05);
    p.lambda = 10.0;
    EXPECT_DOUBLE_EQ(p.max_dt(2.0), 0.0125);
    p.dt = 0.02;
    EXPECT_THROW(p.validate(2.0), PreconditionError);
    p.dt = 0.01;
    EXPECT_NO_THROW(p.validate(2.0));
    p.m = -1.0;
    EXPECT_THROW(p.validate(2.0), PreconditionError);
    p.m = 2.0;
    p.variant = Variant::conservative;
    EXPECT_THROW(p.validate(2.0), PreconditionError);
}

TEST(Drift, ConstantFieldHasNone) {
    const Environment env = iid_ring(50, 1);
    for (double d : drift(env, std::vector<double>(50, 0.37), SdeParams{})) EXPECT_NEAR(d, 0.0, 1e-15);
}

TEST(Drift, SpikeOnConstantEnvironment) {
    const Environment env = sample_environment(EnvironmentSpec::constant(1.0, 3), 0);
    const auto d = drift(env, {0.0, 1.0, 0.0}, SdeParams{});
    EXPECT_NEAR(d[1], -2.0 / 3.0, 1e-15);
}

TEST(Drift, PiWeightedSumVanishes) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Environment env = sample_environment(EnvironmentSpec::iid_uniform(0.5, 2.0, 40), s);
        for (Variant v : {Variant::standard, Variant::conservative}) {
            SdeParams params;
            params.m = 0.8;
            params.variant = v;
            std::vector<double> p(40);
            Rng rng = make_rng(s + 100);
            for (double& x : p) x = uniform01(rng);
            const auto d = drift(env, p, params);
            const auto pi = reversible_pi(env, params.migration());
            double sum = 0.0;
            for (std::size_t x = 0; x < 40; ++x) sum += pi[x] * d[x];
            EXPECT_NEAR(sum, 0.0, 1e-12);
        }
    }
}

TEST(Drift, LengthMismatchRejected) {
    const Environment env = iid_ring(10, 1);
    EXPECT_THROW(drift(env, std::vector<double>(9, 0.5), SdeParams{}), PreconditionError);
}

TEST(EmStep, AbsorbingStates) {
    const Environment env = iid_ring(30, 2);
    Rng rng = make_rng(3);
    for (double level : {0.0, 1.0}) {
        FrequencyField f{std::vector<double>(30, level), 0.0};
        for (int k = 0; k < 100; ++k) f = em_step(env, f, SdeParams{}, rng);
        for (double v : f.p) EXPECT_EQ(v, level);
    }
}

TEST(EmStep, OneStepVariance) {
    const Environment env = sample_environment(EnvironmentSpec::constant(1.0, 3), 0);
    SdeParams params;
    params.lambda = 100.0;
    params.dt = 0.01;
    const JumpTable rates(env, params.migration());
    Rng rng = make_rng(4);
    std::normal_distribution<double> normal;
    RunningStats s;
    std::vector<double> noise(3), scratch;
    for (int i = 0; i < 100000; ++i) {
        std::vector<double> p(3, 0.5);
        for (double& z : noise) z = normal(rng);
        em_step(rates, env.sizes(), p, params, noise, scratch);
        s.add(p[1]);
    }
    const double expected = 0.01 * 0.25 / 100.0;
    // SE of a sample variance of Gaussian draws: var * sqrt(2 / (n - 1)).
    EXPECT_NEAR(s.variance(), expected, 3.0 * expected * std::sqrt(2.0 / 99999.0));
    EXPECT_NEAR(s.mean(), 0.5, 3.0 * s.std_error());
}

TEST(SimulateForward, ZeroProfileStaysZero) {
    const Environment env = iid_ring(40, 5);
    const auto tr = simulate_forward(env, std::vector<double>(40, 0.0), SdeParams{}, 6, {0.0, 0.5, 1.0});
    ASSERT_EQ(tr.snapshots.size(), 3u);
    for (const auto& f : tr.snapshots)
        for (double v : f.p) EXPECT_EQ(v, 0.0);
}

TEST(SimulateForward, DeterministicGivenSeed) {
    const Environment env = iid_ring(40, 5);
    const auto p0 = InitialProfile{ProfileKind::step, 0.5, 0.2, 0.9, 1.0}.instantiate(40, 25.0, 20.0);
    const auto a = simulate_forward(env, p0, SdeParams{}, 9, {1.0});
    const auto b = simulate_forward(env, p0, SdeParams{}, 9, {1.0});
    const auto c = simulate_forward(env, p0, SdeParams{}, 10, {1.0});
    EXPECT_EQ(a.snapshots.back().p, b.snapshots.back().p);
    EXPECT_NE(a.snapshots.back().p, c.snapshots.back().p);
}

TEST(SimulateForward, TimeBeyondHorizonRejected) {
    const Environment env = iid_ring(10, 5);
    EXPECT_THROW(simulate_forward(env, std::vector<double>(10, 0.5), SdeParams{}, 1, {2.0}), PreconditionError);
}

TEST(SimulateForward, MeanIsMartingaleOnConstantEnvironment) {
    const Environment env = sample_environment(EnvironmentSpec::constant(1.0, 32), 0);
    SdeParams params;
    params.lambda = 10.0;
    params.T = 2.0;
    const auto finals = forward_replicates(env, std::vector<double>(32, 0.3), params, 11, "martingale", 200, 1);
    RunningStats s;
    for (const auto& p : finals) s.add(std::accumulate(p.begin(), p.end(), 0.0) / 32.0);
    EXPECT_LT(std::abs(s.mean() - 0.3), 3.0 * s.std_error());
}

TEST(SimulateForward, RangeAndPiMassOnIidEnvironment) {
    const Environment env = iid_ring(64, 12);
    SdeParams params;
    params.lambda = 10.0;
    params.T = 5.0;
    const auto p0 = InitialProfile{ProfileKind::step, 0.5, 0.0, 1.0, 1.0}.instantiate(64, 64.0, 32.0);
    const auto pi = reversible_pi(env, params.migration());
    const auto finals = forward_replicates(env, p0, params, 13, "pi-mass", 400, 1);
    RunningStats s;
    for (const auto& p : finals) {
        for (double v : p) {
            ASSERT_GE(v, 0.0);
            ASSERT_LE(v, 1.0);
        }
        s.add(pi_mass(pi, p));
    }
    EXPECT_LT(std::abs(s.mean() - pi_mass(pi, p0)), 3.0 * s.std_error());
}

TEST(SimulateForward, RefinementWithinMonteCarloError) {
    const Environment env = iid_ring(32, 14);
    SdeParams params;
    params.lambda = 10.0;
    params.T = 1.0;
    const auto p0 = InitialProfile{ProfileKind::gaussian, 0.5, 0.0, 0.8, 1.0}.instantiate(32, 16.0, 16.0);
    std::vector<RunningStats> coarse(32), fine(32);
    for (std::size_t r = 0; r < 300; ++r) {
        const auto pr = simulate_refinement_pair(env, p0, params, derive_seed(15, "refine", r));
        for (std::size_t x = 0; x < 32; ++x) {
            coarse[x].add(pr.coarse[x]);
            fine[x].add(pr.fine[x]);
        }
    }
    for (std::size_t x = 0; x < 32; ++x) EXPECT_LT(std::abs(coarse[x].mean() - fine[x].mean()), fine[x].std_error());
}

TEST(SimulateForward, WorkerCountDoesNotChangeResults) {
    const Environment env = iid_ring(24, 16);
    const auto p0 = std::vector<double>(24, 0.5);
    const auto a = forward_replicates(env, p0, SdeParams{}, 17, "workers", 12, 1);
    const auto b = forward_replicates(env, p0, SdeParams{}, 17, "workers", 12, 4);
    EXPECT_EQ(a, b);
}

TEST(SimulateForward, SegmentBoundaryFlag) {
    EnvironmentSpec spec = EnvironmentSpec::constant(1.0, 20);
    spec.boundary = Boundary::segment;
    const Environment env = sample_environment(spec, 0);
    std::vector<double> p0(20, 0.0);
    p0[1] = 1.0;
    SdeParams params;
    params.T = 1.0;
    EXPECT_TRUE(simulate_forward(env, p0, params, 3, {1.0}).boundary_touched);
    EXPECT_FALSE(simulate_forward(env, std::vector<double>(20, 0.0), params, 3, {1.0}).boundary_touched);
}

TEST(Profile, HolderBudgetAtEveryScale) {
    const InitialProfile step{ProfileKind::step, 0.5, 0.1, 0.9, 2.0};
    const InitialProfile bump{ProfileKind::gaussian, 0.5, 0.0, 0.7, 1.5};
    for (double n : {100.0, 1e4}) {
        const double root = std::sqrt(n);
        for (const auto& prof : {step, bump}) {
            const auto p = prof.instantiate(static_cast<std::size_t>(8 * root), n, 4 * root);
            for (std::size_t x = 1; x < p.size(); ++x) {
                EXPECT_GE(p[x], 0.0);
                EXPECT_LE(p[x], 1.0);
                EXPECT_LE(std::abs(p[x] - p[x - 1]), prof.holder_budget() / root + 1e-15);
            }
        }
    }
    EXPECT_THROW((InitialProfile{ProfileKind::constant, 1.5}.instantiate(4, 1.0, 0.0)), PreconditionError);
}

TEST(Pairing, ZeroField) {
    EXPECT_EQ(pairing(std::vector<double>(100, 0.0), 100.0, [](double) { return 1.0; }, -1.0, 1.0, 50.0), 0.0);
}

TEST(Pairing, APrioriBound) {
    const auto phi = [](double u) { return std::max(0.0, 1.0 - u * u); };
    const double full = pairing(std::vector<double>(200, 1.0), 400.0, phi, -1.0, 1.0, 100.0);
    std::vector<double> p(200);
    Rng rng = make_rng(5);
    for (double& x : p) x = uniform01(rng);
    const double v = pairing(p, 400.0, phi, -1.0, 1.0, 100.0);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, full);
}

TEST(Pairing, RiemannSumOfIndicator) {
    const double v = pairing(std::vector<double>(400, 1.0), 1e4, [](double u) { return std::abs(u) <= 1.0 ? 1.0 : 0.0; },
                             -1.0, 1.0, 200.0);
    EXPECT_NEAR(v, 2.0, 0.02);
}

TEST(Pairing, SupportBeyondWindowRejected) {
    EXPECT_THROW(pairing(std::vector<double>(100, 1.0), 100.0, [](double) { return 1.0; }, -1.0, 6.0, 50.0),
                 OutOfWindowError);
}

TEST(HolderModulus, ConstantField) {
    EXPECT_EQ(holder_modulus({FrequencyField{std::vector<double>(20, 0.4), 0.0}}, 0.1, 100.0), 0.0);
}

TEST(HolderModulus, UnitJump) {
    std::vector<double> p(10, 0.0);
    for (std::size_t x = 5; x < 10; ++x) p[x] = 1.0;
    EXPECT_NEAR(holder_modulus({FrequencyField{p, 0.0}}, 0.1, 100.0), std::pow(100.0, 0.05), 1e-14);
    EXPECT_THROW(holder_modulus({FrequencyField{p, 0.0}}, 0.2, 100.0), PreconditionError);
}

TEST(HolderModulus, NoGrowthAcrossScales) {
    const InitialProfile prof{ProfileKind::step, 0.5, 0.0, 1.0, 1.0};
    std::vector<double> logn, logmod;
    for (double n : {1e2, 1e3, 1e4}) {
        const double root = std::sqrt(n);
        const std::size_t L = static_cast<std::size_t>(8 * root);
        const Environment env = iid_ring(L, 20);
        SdeParams params;
        params.lambda = root;
        params.dt = 0.01;
        params.T = 0.05 * n;
        const auto p0 = prof.instantiate(L, n, 0.5 * static_cast<double>(L));
        for (std::uint64_t r = 0; r < 4; ++r) {
            const auto tr = simulate_forward(env, p0, params, derive_seed(21, "holder", r), {params.T});
            logn.push_back(std::log(n));
            logmod.push_back(std::log(holder_modulus(tr.snapshots, 0.1, n)));
        }
    }
    const LinearFit fit = least_squares(logn, logmod);
    EXPECT_LE(fit.slope - 2.0 * fit.slope_se, 0.0) << "slope " << fit.slope << " se " << fit.slope_se;
}
