#include <gtest/gtest.h>

#include <cmath>

#include "ssre/common.hpp"
#include "ssre/coupling.hpp"
#include "ssre/rng.hpp"

using namespace ssre;

TEST(Coupling, TwoPointIdentity) {
    const auto r = coupling_check(DiscreteLaw({1.0, 2.0}, {0.5, 0.5}), [](double x) { return x; }, 10000, 1);
    EXPECT_DOUBLE_EQ(r.e_xy, 2.5);
    EXPECT_DOUBLE_EQ(r.e_x * r.e_y, 2.25);
    EXPECT_TRUE(r.passed());
}

TEST(Coupling, ConstantGivesEquality) {
    const auto r = coupling_check(DiscreteLaw({1.7}, {1.0}), [](double x) { return x * x; }, 1000, 2);
    EXPECT_DOUBLE_EQ(r.e_xy, r.e_x * r.e_y);
    EXPECT_TRUE(r.passed());
    EXPECT_EQ(r.mean_gap_mc, 0.0);
}

TEST(Coupling, SquareOnThreePoints) {
    const DiscreteLaw law({1.0, 2.0, 3.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3});
    const auto r = coupling_check(law, [](double x) { return x * x; }, 100000, 3);
    EXPECT_EQ(r.violations, 0u);
    EXPECT_TRUE(r.cdf_dominance);
    EXPECT_TRUE(r.inequality_holds);
    // Size-biased law is (1, 4, 9) / 14, so E[X~] = 36 / 14.
    EXPECT_NEAR(r.e_xy / r.e_y, 36.0 / 14.0, 1e-14);
    EXPECT_NEAR(r.e_x_tilde_mc, 36.0 / 14.0, 4.0 * std::sqrt(0.6 / 100000.0));
    const DiscreteLaw t = size_biased(law, [](double x) { return x * x; });
    EXPECT_NEAR(t.probs[0], 1.0 / 14, 1e-15);
    EXPECT_NEAR(t.probs[2], 9.0 / 14, 1e-15);
}

TEST(Coupling, NonMonotoneRejected) {
    EXPECT_THROW(coupling_check(DiscreteLaw({1.0, 2.0, 3.0}, {0.2, 0.3, 0.5}), [](double x) { return -x; }, 10, 1),
                 PreconditionError);
    EXPECT_THROW(coupling_check(DiscreteLaw({-1.0, 0.5}, {0.5, 0.5}), [](double x) { return x * x; }, 10, 1),
                 PreconditionError);
}

TEST(Coupling, MalformedLawRejected) {
    EXPECT_THROW(DiscreteLaw({1.0, 2.0}, {0.5}), PreconditionError);
    EXPECT_THROW(DiscreteLaw({1.0, 2.0}, {0.5, 0.6}), PreconditionError);
}

TEST(Coupling, RightContinuousInverse) {
    const DiscreteLaw law({1.0, 2.0}, {0.5, 0.5});
    EXPECT_EQ(law.quantile(0.0), 1.0);
    EXPECT_EQ(law.quantile(0.4999), 1.0);
    EXPECT_EQ(law.quantile(0.5), 2.0);
    EXPECT_EQ(law.quantile(0.9999), 2.0);
    EXPECT_DOUBLE_EQ(law.cdf(1.0), 0.5);
    EXPECT_DOUBLE_EQ(law.cdf(0.999), 0.0);
}

TEST(Coupling, RandomLawsAndMaps) {
    const std::vector<std::function<double(double)>> maps{
        [](double x) { return x; },
        [](double x) { return x * x; },
        [](double x) { return std::exp(0.5 * x); },
        [](double x) { return x > 1.5 ? 1.0 : 0.1; },
        [](double x) { return std::sqrt(x); },
    };
    Rng rng = make_rng(44);
    for (int law_id = 0; law_id < 20; ++law_id) {
        const std::size_t k = 1 + static_cast<std::size_t>(uniform01(rng) * 6);
        std::vector<double> v(k), p(k);
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            v[i] = 0.5 + 2.5 * uniform01(rng);
            p[i] = 0.05 + uniform01(rng);
            s += p[i];
        }
        for (double& x : p) x /= s;
        const DiscreteLaw law(v, p);
        for (std::size_t g = 0; g < maps.size(); ++g) {
            const auto r = coupling_check(law, maps[g], 20000, derive_seed(45, "law", law_id * 10 + g));
            EXPECT_TRUE(r.passed()) << "law " << law_id << " map " << g;
            EXPECT_GE(r.mean_gap_mc, 0.0);
        }
    }
}
