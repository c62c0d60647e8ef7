#include <gtest/gtest.h>

#include <cmath>

#include "ssre/harness.hpp"
#include "ssre/pair_chain.hpp"

using namespace ssre;

namespace {

Environment iid_ring(std::size_t L, std::uint64_t seed) {
    return sample_environment(EnvironmentSpec::iid_discrete({1.0, 2.0}, {0.5, 0.5}, L), seed);
}

DualityOptions k1_options(std::uint64_t seed) {
    DualityOptions opt;
    opt.lambda = 100.0;
    opt.t = 20.0;
    opt.dt = 0.01;
    opt.replicates = 400;
    opt.seed = seed;
    return opt;
}

}  // namespace

TEST(ZScore, Basics) {
    EXPECT_DOUBLE_EQ(z_score(1.0, 0.3, 0.4, 0.4), 1.2);
    EXPECT_EQ(z_score(0.5, 0.0, 0.5, 0.0), 0.0);
    EXPECT_TRUE(std::isinf(z_score(0.6, 0.0, 0.5, 0.0)));
    DualityReport r;
    r.z = 3.0;
    EXPECT_TRUE(r.passed());
    r.z = -3.01;
    EXPECT_FALSE(r.passed());
}

TEST(DualityK1, ConstantProfileIsExact) {
    const Environment env = iid_ring(32, 1);
    DualityOptions opt = k1_options(2);
    opt.t = 1.0;
    opt.replicates = 20;
    // Constant 0.3 is not preserved pathwise by the noise, but the kernel side is exact.
    for (const auto& r : duality_k1(env, std::vector<double>(32, 0.3), {0, 7, 20}, opt)) {
        EXPECT_NEAR(r.dual, 0.3, 1e-12);
        EXPECT_LE(std::abs(r.z), 3.0);
    }
    for (const auto& r : duality_k1(env, std::vector<double>(32, 1.0), {0, 7}, opt)) {
        EXPECT_NEAR(r.dual, 1.0, 1e-12);
        EXPECT_EQ(r.forward, 1.0);
        EXPECT_NEAR(r.z, 0.0, 1e-9);
    }
}

TEST(DualityK1, StepProfile) {
    const InitialProfile step{ProfileKind::step, 0.5, 0.0, 1.0, 1.0};
    for (const auto& spec : {EnvironmentSpec::constant(1.0, 64), EnvironmentSpec::iid_discrete({1.0, 2.0}, {0.5, 0.5}, 64)}) {
        const Environment env = sample_environment(spec, 3);
        const auto reps = duality_k1(env, step.instantiate(64, 16.0, 32.0), {28, 30, 32, 34, 36}, k1_options(4));
        ASSERT_EQ(reps.size(), 5u);
        for (const auto& r : reps) EXPECT_TRUE(r.passed()) << spec.describe() << ' ' << r.label << " z = " << r.z;
    }
}

TEST(DualityK1, SegmentRejected) {
    EnvironmentSpec spec = EnvironmentSpec::constant(1.0, 16);
    spec.boundary = Boundary::segment;
    EXPECT_THROW(duality_k1(sample_environment(spec, 0), std::vector<double>(16, 0.5), {3}, k1_options(1)),
                 PreconditionError);
}

TEST(DualityK2, ConstantProfileOnDiagonal) {
    const Environment env = sample_environment(EnvironmentSpec::constant(1.0, 8), 0);
    DualityOptions opt;
    opt.lambda = 1.0;
    opt.t = 1.0;
    opt.dt = 0.00125;
    opt.replicates = 4000;
    opt.seed = 5;
    const auto rep = duality_k2(env, std::vector<double>(8, 0.3), 2, 2, opt);
    EXPECT_NEAR(rep.versus_exact.dual, 0.09 + 0.21 * rep.exact_coalescence_probability, 1e-10);
    const PairCoalescenceChain chain(env, {}, 1.0);
    EXPECT_NEAR(rep.exact_coalescence_probability, chain.coalescence_probability(2, 2, 1.0), 1e-12);
    EXPECT_LE(std::abs(rep.dual_mc_vs_exact.z), 3.0);
}

TEST(DualityK2, AbsorbingProfile) {
    const Environment env = iid_ring(12, 6);
    DualityOptions opt;
    opt.lambda = 1.0;
    opt.t = 0.5;
    opt.dt = 0.00125;
    opt.replicates = 50;
    opt.seed = 7;
    const auto rep = duality_k2(env, std::vector<double>(12, 1.0), 2, 5, opt);
    EXPECT_EQ(rep.versus_exact.forward, 1.0);
    EXPECT_NEAR(rep.versus_exact.dual, 1.0, 1e-10);
    EXPECT_EQ(rep.versus_dual_mc.dual, 1.0);
}

TEST(DualityK2, IidStepProfile) {
    const Environment env = iid_ring(16, 8);
    DualityOptions opt;
    opt.lambda = 3.0;
    opt.t = 2.0;
    opt.dt = 0.0005;
    opt.replicates = 10000;
    opt.seed = 9;
    const auto p0 = InitialProfile{ProfileKind::step, 0.5, 0.0, 1.0, 1.0}.instantiate(16, 4.0, 8.0);
    const auto rep = duality_k2(env, p0, 7, 8, opt);
    // The coalescence term sits well outside the noise.
    const double independent = PairCoalescenceChain(env, {}, 1e12).product_moment(7, 8, 2.0, p0);
    EXPECT_GT(rep.versus_exact.dual - independent, 4.0 * rep.versus_exact.forward_se);
    EXPECT_LE(std::abs(rep.versus_exact.z), 3.0) << rep.versus_exact.forward << " vs " << rep.versus_exact.dual;
    EXPECT_LE(std::abs(rep.versus_dual_mc.z), 3.0);
    EXPECT_LE(std::abs(rep.dual_mc_vs_exact.z), 3.0);
}

TEST(FlowReference, ShortHorizonApartNeverCoalesces) {
    BrownianFlowParams bp;
    bp.x2 = 1.0;
    bp.T = 1e-3;
    bp.dt_b = 1e-6;
    bp.replicates = 2000;
    const auto s = brownian_flow_reference(bp, 1);
    EXPECT_EQ(s.cdf(0, bp.T), 0.0);
    EXPECT_LT(flow_coalescence_cdf(bp.sigma2, bp.gamma, 1.0, 1e-3), 1e-12);
    EXPECT_EQ(flow_coalescence_cdf(bp.sigma2, bp.gamma, 0.0, 0.0), 0.0);
}

TEST(FlowReference, ClosedFormMatchesQuadrature) {
    for (auto conv : {LocalTimeConvention::occupation, LocalTimeConvention::semimartingale})
        for (double sep : {0.0, 0.3, 1.0})
            for (double t : {0.1, 1.0, 4.0})
                for (double g : {0.3, 1.0, 2.5})
                    EXPECT_NEAR(flow_coalescence_cdf(0.6, g, sep, t, conv),
                                flow_coalescence_cdf_quadrature(0.6, g, sep, t, conv), 1e-8);
}

TEST(FlowReference, SimulationMatchesQuadratureFromTheSamePoint) {
    BrownianFlowParams bp;
    bp.sigma2 = 2.0 / 3.0;
    bp.gamma = 1.0;
    bp.T = 1.0;
    bp.replicates = 20000;
    for (auto conv : {LocalTimeConvention::occupation, LocalTimeConvention::semimartingale}) {
        bp.convention = conv;
        const auto s = brownian_flow_reference(bp, 2);
        const double q = flow_coalescence_cdf_quadrature(bp.sigma2, bp.gamma, 0.0, 1.0, conv);
        const double se = std::sqrt(q * (1 - q) / bp.replicates);
        EXPECT_NEAR(s.cdf(0, 1.0), q, 4.0 * se) << to_string(conv);
    }
}

TEST(FlowReference, MonotoneInGamma) {
    BrownianFlowParams bp;
    bp.x2 = 0.3;
    bp.gamma = 0.5;
    bp.extra_gammas = {0.8, 1.6};
    bp.dt_b = 1e-4;
    bp.replicates = 3000;
    const auto s = brownian_flow_reference(bp, 3);
    for (std::size_t r = 0; r < bp.replicates; ++r) {
        EXPECT_LE(s.times[1][r], s.times[0][r]);
        EXPECT_LE(s.times[2][r], s.times[1][r]);
    }
}

TEST(FlowReference, RefinementStable) {
    BrownianFlowParams bp;
    bp.x2 = 0.5;
    bp.dt_b = 1e-4;
    bp.replicates = 10000;
    const auto rep = flow_refinement_check(bp, 4);
    EXPECT_TRUE(rep.stable()) << rep.coarse << " vs " << rep.fine;
}

TEST(FlowReference, InvalidParamsRejected) {
    BrownianFlowParams bp;
    bp.gamma = 0.0;
    EXPECT_THROW(brownian_flow_reference(bp, 1), PreconditionError);
    bp.gamma = 1.0;
    bp.dt_b = 2.0;
    EXPECT_THROW(brownian_flow_reference(bp, 1), PreconditionError);
}

TEST(FlowReference, MomentOfConstant) {
    BrownianFlowParams bp;
    bp.dt_b = 1e-3;
    bp.replicates = 500;
    const auto s = brownian_flow_reference(bp, 5);
    EXPECT_NEAR(s.moment([](double) { return 1.0; }), 1.0, 1e-15);
    EXPECT_NEAR(s.moment([](double) { return 0.3; }), 0.09 + 0.21 * s.cdf(0, bp.T), 1e-12);
}

TEST(FlowReference, WorkerCountDoesNotChangeResults) {
    BrownianFlowParams bp;
    bp.x2 = 0.2;
    bp.dt_b = 1e-4;
    bp.replicates = 200;
    const auto a = brownian_flow_reference(bp, 6);
    bp.workers = 3;
    const auto b = brownian_flow_reference(bp, 6);
    EXPECT_EQ(a.times, b.times);
    EXPECT_EQ(a.final_x1, b.final_x1);
}

TEST(Universality, ConstantEnvironmentSmallScale) {
    UniversalityOptions opt;
    opt.n_values = {400.0, 1600.0};
    opt.replicates = 4000;
    opt.ref_replicates = 4000;
    opt.ring = 8192;
    opt.msd_paths = 500;
    opt.dt_b = 1e-4;
    opt.seed = 7;
    const ConventionChoice conv = calibrate_local_time(1.0, opt);
    EXPECT_LE(std::min(conv.ks_occupation, conv.ks_semimartingale),
              dkw_epsilon(opt.replicates, 0.01) + dkw_epsilon(opt.ref_replicates, 0.01));
    opt.convention = conv.chosen;
    const auto rows = universality_report({EnvironmentSpec::constant(1.0, 64)}, opt);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_TRUE(rows[0].formula.within()) << rows[0].formula.ks << " band " << rows[0].formula.band;
    EXPECT_NEAR(rows[0].msd_ratio, 1.0, 4.0 * rows[0].msd_ratio_se);
    EXPECT_EQ(rows[0].grid.size(), rows[0].dual_cdf.size());
    EXPECT_EQ(rows[0].dual_cdf.front(), 0.0);
}
