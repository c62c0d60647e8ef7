#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace ssre {

// Finite discrete law on the real line.
struct DiscreteLaw {
    std::vector<double> values;  // sorted ascending, distinct
    std::vector<double> probs;

    DiscreteLaw(std::vector<double> v, std::vector<double> p);
    double mean() const;
    double cdf(double x) const;
    // Right-continuous generalized inverse: inf { x : F(x) > u }, u in [0, 1).
    double quantile(double u) const;
};

// Law of X tilted by Y = g(X): weights p_i g(v_i) / E[g(X)].
DiscreteLaw size_biased(const DiscreteLaw& law, const std::function<double(double)>& g);

struct CouplingReport {
    std::size_t trials = 0;
    std::size_t violations = 0;     // trials with X~ < X
    bool cdf_dominance = true;      // G <= F at every support point
    double e_x = 0.0;
    double e_y = 0.0;
    double e_xy = 0.0;              // exact E[X g(X)]
    double e_x_tilde_mc = 0.0;      // Monte Carlo mean of X~
    double mean_gap_mc = 0.0;       // Monte Carlo mean of X~ - X
    bool inequality_holds = false;  // E[XY] >= E[X] E[Y]
    bool passed() const { return violations == 0 && cdf_dominance && inequality_holds; }
};

// Builds X = F^-1(U) and X~ = G^-1(U) from a shared uniform U, where G is
// the CDF of the size-biased law. Throws PreconditionError when g is not
// non-decreasing on the support or is negative.
CouplingReport coupling_check(const DiscreteLaw& law, const std::function<double(double)>& g,
                              std::size_t trials, std::uint64_t seed);

}  // namespace ssre
