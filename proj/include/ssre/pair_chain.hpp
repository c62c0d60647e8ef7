#pragma once

#include <vector>

#include <Eigen/Dense>

#include "ssre/kernel.hpp"

namespace ssre {

// Two walks on a ring plus coalescence: L^2 ordered pair states followed by
// L single-lineage states. Together at x the pair coalesces at rate
// 1 / (lambda N(x)).
class PairCoalescenceChain {
public:
    PairCoalescenceChain(const Environment& env, const Migration& mig, double lambda);

    std::size_t sites() const { return L_; }
    std::size_t states() const { return L_ * L_ + L_; }
    std::size_t pair_state(std::size_t a, std::size_t b) const { return a * L_ + b; }
    std::size_t single_state(std::size_t c) const { return L_ * L_ + c; }

    // Law at time t of the chain started from the pair (x, y).
    Eigen::VectorXd distribution(std::size_t x, std::size_t y, double t, double tol = 1e-12) const;

    double coalescence_probability(std::size_t x, std::size_t y, double t) const;

    // E[ prod over surviving lineages of p0(position) ].
    double product_moment(std::size_t x, std::size_t y, double t, const std::vector<double>& p0) const;

private:
    void step(const Eigen::VectorXd& v, Eigen::VectorXd& out) const;

    std::size_t L_;
    GeneratorMatrix gen_;
    std::vector<double> coalescence_rate_;
    double rate_;
};

}  // namespace ssre
