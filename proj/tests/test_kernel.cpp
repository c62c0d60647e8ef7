#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/distributions/chi_squared.hpp>

#include "ssre/kernel.hpp"
#include "ssre/pair_chain.hpp"
#include "ssre/rng.hpp"
#include "ssre/stats.hpp"
#include "ssre/walks.hpp"

using namespace ssre;

namespace {

Environment iid_ring(std::size_t L, std::uint64_t seed) {
    return sample_environment(EnvironmentSpec::iid_discrete({1.0, 2.0}, {0.5, 0.5}, L), seed);
}

Environment random_ring(std::uint64_t seed, std::size_t L) {
    Rng rng = make_rng(seed);
    const double K = 1.2 + 1.8 * uniform01(rng);
    return sample_environment(EnvironmentSpec::iid_uniform(1.0 / K, K, L, K), seed);
}

}  // namespace

TEST(Generator, ConstantRing) {
    const GeneratorMatrix gen(sample_environment(EnvironmentSpec::constant(1.0, 4), 0), {});
    for (std::size_t x = 0; x < 4; ++x) {
        EXPECT_NEAR(gen.left(x), 1.0 / 3.0, 1e-15);
        EXPECT_NEAR(gen.right(x), 1.0 / 3.0, 1e-15);
    }
}

TEST(Generator, PeriodicRates) {
    const GeneratorMatrix gen(sample_environment(EnvironmentSpec::periodic({1.0, 2.0}, 4), 0), {});
    EXPECT_NEAR(gen.right(0), 2.0 / 5.0, 1e-15);
    EXPECT_NEAR(gen.left(1), 1.0 / 4.0, 1e-15);
    EXPECT_NEAR(gen.pi()[0] * gen.right(0), gen.pi()[1] * gen.left(1), 1e-15);
}

TEST(Generator, RandomInvariants) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const GeneratorMatrix gen(random_ring(s, 30 + s), {0.5 + 0.1 * static_cast<double>(s), Variant::standard});
        EXPECT_LE(gen.row_sum_residual(), 1e-14);
        EXPECT_LE(gen.detailed_balance_residual(), 1e-14);
        const Eigen::MatrixXd q = gen.dense();
        for (Eigen::Index i = 0; i < q.rows(); ++i)
            for (Eigen::Index j = 0; j < q.cols(); ++j) {
                const auto d = std::abs(i - j);
                if (i != j && d != 1 && d != q.rows() - 1) EXPECT_EQ(q(i, j), 0.0);
                if (i != j) EXPECT_GE(q(i, j), 0.0);
            }
    }
}

TEST(Generator, SegmentRejected) {
    EnvironmentSpec spec = EnvironmentSpec::constant(1.0, 8);
    spec.boundary = Boundary::segment;
    EXPECT_THROW(GeneratorMatrix(sample_environment(spec, 0), {}), PreconditionError);
}

TEST(HeatKernel, TimeZeroIsIdentity) {
    const HeatKernel hk = heat_kernel(GeneratorMatrix(iid_ring(12, 1), {}), 0.0);
    EXPECT_LE((hk.g - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HeatKernel, RowsAndSymmetry) {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const HeatKernel hk = heat_kernel(GeneratorMatrix(random_ring(s, 40), {}), 3.7);
        EXPECT_LE(hk.row_sum_residual(), 1e-10);
        EXPECT_LE(hk.symmetry_residual(), 1e-10);
        EXPECT_GE(hk.g.minCoeff(), 0.0);
    }
}

TEST(HeatKernel, NegativeTimeRejected) {
    EXPECT_THROW(heat_kernel(GeneratorMatrix(iid_ring(8, 1), {}), -1.0), PreconditionError);
}

TEST(HeatKernel, MixesToStationaryLaw) {
    const Environment env = iid_ring(16, 2);
    const GeneratorMatrix gen(env, {});
    const double sigma2 = effective_params(env, {}).sigma2;
    const HeatKernel hk = heat_kernel(gen, 50.0 * 16 * 16 / sigma2);
    double worst = 0.0;
    for (int x = 0; x < 16; ++x)
        for (int y = 0; y < 16; ++y) worst = std::max(worst, std::abs(hk.g(x, y) - gen.pi()[y] / 16.0));
    EXPECT_LT(worst, 1e-8);
}

TEST(HeatKernel, Semigroup) {
    Rng rng = make_rng(3);
    for (int k = 0; k < 6; ++k) {
        const GeneratorMatrix gen(random_ring(10 + k, 24), {});
        const double t = 5.0 * uniform01(rng), s = 5.0 * uniform01(rng);
        const Eigen::MatrixXd lhs = heat_kernel(gen, t).g * heat_kernel(gen, s).g;
        EXPECT_LE((lhs - heat_kernel(gen, t + s).g).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(HeatKernel, MatchesWalkOccupancy) {
    const Environment env = iid_ring(20, 4);
    const JumpTable rates(env, {});
    const HeatKernel hk = heat_kernel(GeneratorMatrix(env, {}), 4.0);
    std::vector<double> counts(20, 0.0);
    const std::size_t paths = 20000;
    for (std::size_t i = 0; i < paths; ++i)
        counts[rates.index(simulate_walk(rates, 3, 4.0, derive_seed(5, "occ", i)).final_position())] += 1.0;
    // Pearson test with sparse sites pooled into one cell.
    double stat = 0.0, pooled_obs = 0.0, pooled_exp = 0.0;
    int cells = 0;
    for (int y = 0; y < 20; ++y) {
        const double e = hk.g(3, y) * paths;
        if (e < 5.0) {
            pooled_obs += counts[y];
            pooled_exp += e;
            continue;
        }
        stat += (counts[y] - e) * (counts[y] - e) / e;
        ++cells;
    }
    if (pooled_exp > 0.0) {
        stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++cells;
    }
    ASSERT_GE(cells, 10);
    const double pval = boost::math::cdf(boost::math::complement(boost::math::chi_squared(cells - 1), stat));
    EXPECT_GE(pval, 0.0027) << "chi2 " << stat << " on " << cells - 1 << " dof";
}

TEST(Uniformization, PoissonWeightsTail) {
    const auto w = poisson_weights(30.0, 1e-12);
    double s = 0.0;
    for (double v : w) s += v;
    EXPECT_GE(s, 1.0 - 1e-12);
    EXPECT_LE(s, 1.0 + 1e-12);
}

TEST(LocalClt, GaussianAtOrigin) {
    EXPECT_NEAR(gaussian_kernel(2.0 / 3.0, 1.0, 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi * 2.0 / 3.0), 1e-15);
    EXPECT_NEAR(gaussian_kernel(2.0 / 3.0, 1.0, 0.0), 0.48860, 5e-6);
}

TEST(LocalClt, ConstantEnvironmentSmallError) {
    LocalCltOptions opt;
    opt.n_values = {400.0};
    opt.sigma2 = 2.0 / 3.0;
    const auto rows = local_clt_error(
        [&](double n) {
            return sample_environment(EnvironmentSpec::constant(1.0, anti_wrap_length(n, opt.t_max, opt.radius, 2.0 / 3.0)), 0);
        },
        {}, opt);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_LT(rows[0].sup_error, 0.02);
    EXPECT_GE(rows[0].ring, anti_wrap_length(400.0, 2.0, 2.0, 2.0 / 3.0));
}

TEST(LocalClt, AntiWrapEnforced) {
    LocalCltOptions opt;
    opt.n_values = {400.0};
    opt.sigma2 = 2.0 / 3.0;
    EXPECT_THROW(local_clt_error([](double) { return sample_environment(EnvironmentSpec::constant(1.0, 100), 0); }, {}, opt),
                 OutOfWindowError);
    EXPECT_EQ(anti_wrap_length(100.0, 1.0, 1.0, 1.0), static_cast<std::size_t>(std::ceil(10.0 * 10.0 + 20.0)));
}

TEST(Dirichlet, ConstantFunctionHasZeroForm) {
    const GeneratorMatrix gen(iid_ring(16, 6), {});
    EXPECT_EQ(dirichlet_form(gen, std::vector<double>(16, 2.5)), 0.0);
}

TEST(Dirichlet, ConstantRingInequality) {
    const GeneratorMatrix gen(sample_environment(EnvironmentSpec::constant(1.0, 32), 0), {});
    for (std::size_t x = 0; x < 32; x += 5) {
        const DirichletCheck d = dirichlet_form_check(gen, 1.0, x);
        EXPECT_TRUE(d.holds());
        EXPECT_LT(d.form / d.bound, 1.0);
    }
}

TEST(Dirichlet, RandomDraws) {
    Rng rng = make_rng(7);
    for (int k = 0; k < 50; ++k) {
        const std::size_t L = 8 + static_cast<std::size_t>(uniform01(rng) * 40);
        const GeneratorMatrix gen(random_ring(100 + k, L), {0.3 + 1.5 * uniform01(rng), Variant::standard});
        const double t = std::exp(std::log(0.05) + uniform01(rng) * std::log(2000.0));
        const auto x = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(L));
        const DirichletCheck d = dirichlet_form_check(gen, t, x);
        EXPECT_LE(d.form, d.bound + 1e-12) << "draw " << k;
    }
    EXPECT_THROW(dirichlet_form_check(GeneratorMatrix(iid_ring(8, 1), {}), 0.0, 0), PreconditionError);
}

namespace {

std::vector<double> decades() {
    std::vector<double> t;
    for (int k = 0; k <= 12; ++k) t.push_back(0.1 * std::pow(10.0, 0.25 * k));
    return t;
}

}  // namespace

TEST(KernelBounds, ConstantOnDiagonal) {
    const GeneratorMatrix gen(sample_environment(EnvironmentSpec::constant(1.0, 32, 1.0), 0), {});
    const auto rep = kernel_bound_check(gen, decades(), {{0, 0}, {0, 3}}, 1.0);
    EXPECT_NEAR(rep.diagonal_bound, 9.0 * std::exp(-0.5), 1e-12);
    EXPECT_TRUE(rep.diagonal_ok);
    for (double d : rep.diagonal) EXPECT_LE(d, 5.459);
}

TEST(KernelBounds, IidOnDiagonal) {
    const Environment env = iid_ring(64, 8);
    const auto rep = kernel_bound_check(GeneratorMatrix(env, {}), decades(), {{0, 1}, {5, 9}}, 2.0);
    EXPECT_NEAR(rep.diagonal_bound, 9.0 * 16.0 * std::exp(-0.5), 1e-12);
    EXPECT_NEAR(rep.diagonal_bound, 87.3, 0.05);
    EXPECT_TRUE(rep.diagonal_ok);
    EXPECT_LT(*std::max_element(rep.diagonal.begin(), rep.diagonal.end()), 0.5 * rep.diagonal_bound);
}

TEST(KernelBounds, CoincidentPairsHaveZeroQuotient) {
    const auto rep = kernel_bound_check(GeneratorMatrix(iid_ring(16, 9), {}), decades(), {{4, 4}}, 2.0);
    for (double h : rep.holder) EXPECT_EQ(h, 0.0);
    for (double v : rep.integrated) EXPECT_EQ(v, 0.0);
}

TEST(KernelBounds, ShortGridRejected) {
    EXPECT_THROW(kernel_bound_check(GeneratorMatrix(iid_ring(16, 9), {}), {1.0, 10.0}, {{0, 1}}, 2.0), PreconditionError);
}

TEST(MeetingChain, ConstantRingIsUniform) {
    const MeetingChain mc = meeting_chain(sample_environment(EnvironmentSpec::constant(1.0, 8), 0), {});
    EXPECT_LE(mc.detailed_balance_residual, 1e-10);
    EXPECT_LE(mc.null_vector_distance, 1e-10);
    EXPECT_LE(mc.hitting_row_residual, 1e-10);
    for (int x = 0; x < 8; ++x) EXPECT_NEAR(mc.q(x, (x + 1) % 8), mc.q(0, 1), 1e-10);
}

TEST(MeetingChain, PeriodicEight) {
    const MeetingChain mc = meeting_chain(sample_environment(EnvironmentSpec::periodic({1.0, 2.0}, 8), 0), {});
    EXPECT_LE(mc.detailed_balance_residual, 1e-8);
    EXPECT_LE(mc.stationary_residual, 1e-8);
    EXPECT_LE(mc.null_vector_distance, 1e-8);
    EXPECT_LE(mc.q_row_residual, 1e-10);
}

TEST(MeetingChain, RandomRings) {
    for (std::uint64_t s = 0; s < 8; ++s) {
        const MeetingChain mc = meeting_chain(random_ring(50 + s, 6 + s), {0.8, Variant::conservative});
        EXPECT_LE(mc.detailed_balance_residual, 1e-8);
        EXPECT_LE(mc.null_vector_distance, 1e-8);
    }
}

TEST(MeetingChain, LargeRingRejected) {
    EXPECT_THROW(meeting_chain(iid_ring(65, 1), {}), PreconditionError);
}

TEST(PairChain, ConstantProfileMoment) {
    const Environment env = sample_environment(EnvironmentSpec::constant(1.0, 8), 0);
    const PairCoalescenceChain chain(env, {}, 1.0);
    const double pc = chain.coalescence_probability(2, 2, 1.5);
    EXPECT_GT(pc, 0.0);
    EXPECT_LT(pc, 1.0);
    EXPECT_NEAR(chain.product_moment(2, 2, 1.5, std::vector<double>(8, 0.3)), 0.09 + 0.21 * pc, 1e-10);
    EXPECT_NEAR(chain.product_moment(2, 5, 1.5, std::vector<double>(8, 1.0)), 1.0, 1e-10);
    EXPECT_NEAR(chain.distribution(1, 4, 0.7).sum(), 1.0, 1e-10);
}

TEST(PairChain, MatchesPairSimulation) {
    const Environment env = iid_ring(8, 10);
    const double lambda = 0.5, t = 2.0;
    const PairCoalescenceChain chain(env, {}, lambda);
    const JumpTable rates(env, {});
    PairOptions po;
    po.lambda = lambda;
    po.horizon = t;
    std::size_t hits = 0;
    const std::size_t trials = 20000;
    for (std::size_t i = 0; i < trials; ++i)
        hits += simulate_pair(rates, env, 1, 3, po, derive_seed(11, "chain", i)).state.coalescence_time ? 1 : 0;
    const double p = chain.coalescence_probability(1, 3, t);
    EXPECT_NEAR(static_cast<double>(hits) / trials, p, 3.0 * std::sqrt(p * (1 - p) / trials));
}
