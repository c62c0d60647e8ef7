#include "ssre/pair_chain.hpp"

#include <algorithm>

namespace ssre {

PairCoalescenceChain::PairCoalescenceChain(const Environment& env, const Migration& mig, double lambda)
    : L_(env.size()), gen_(env, mig) {
    if (!(lambda > 0.0)) throw PreconditionError("lambda must be positive");
    coalescence_rate_.resize(L_);
    double max_c = 0.0;
    for (std::size_t x = 0; x < L_; ++x) {
        coalescence_rate_[x] = 1.0 / (lambda * env.sizes()[x]);
        max_c = std::max(max_c, coalescence_rate_[x]);
    }
    rate_ = 2.0 * gen_.max_exit_rate() + max_c;
}

void PairCoalescenceChain::step(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    out.setZero();
    const std::size_t L = L_;
    auto left = [&](std::size_t x) { return (x + L - 1) % L; };
    auto right = [&](std::size_t x) { return (x + 1) % L; };
    for (std::size_t a = 0; a < L; ++a)
        for (std::size_t b = 0; b < L; ++b) {
            const double mass = v(static_cast<Eigen::Index>(pair_state(a, b)));
            if (mass == 0.0) continue;
            double leave = gen_.exit_rate(a) + gen_.exit_rate(b);
            out(pair_state(left(a), b)) += mass * gen_.left(a) / rate_;
            out(pair_state(right(a), b)) += mass * gen_.right(a) / rate_;
            out(pair_state(a, left(b))) += mass * gen_.left(b) / rate_;
            out(pair_state(a, right(b))) += mass * gen_.right(b) / rate_;
            if (a == b) {
                out(single_state(a)) += mass * coalescence_rate_[a] / rate_;
                leave += coalescence_rate_[a];
            }
            out(pair_state(a, b)) += mass * (1.0 - leave / rate_);
        }
    for (std::size_t c = 0; c < L; ++c) {
        const double mass = v(static_cast<Eigen::Index>(single_state(c)));
        if (mass == 0.0) continue;
        out(single_state(left(c))) += mass * gen_.left(c) / rate_;
        out(single_state(right(c))) += mass * gen_.right(c) / rate_;
        out(single_state(c)) += mass * (1.0 - gen_.exit_rate(c) / rate_);
    }
}

Eigen::VectorXd PairCoalescenceChain::distribution(std::size_t x, std::size_t y, double t, double tol) const {
    if (!(t >= 0.0)) throw PreconditionError("time must be non-negative");
    if (x >= L_ || y >= L_) throw OutOfWindowError("pair start outside the ring");
    const auto S = static_cast<Eigen::Index>(states());
    Eigen::VectorXd cur = Eigen::VectorXd::Zero(S), next(S);
    cur(static_cast<Eigen::Index>(pair_state(x, y))) = 1.0;
    const auto w = poisson_weights(rate_ * t, tol);
    Eigen::VectorXd acc = w[0] * cur;
    for (std::size_t k = 1; k < w.size(); ++k) {
        step(cur, next);
        cur.swap(next);
        acc += w[k] * cur;
    }
    return acc;
}

double PairCoalescenceChain::coalescence_probability(std::size_t x, std::size_t y, double t) const {
    const Eigen::VectorXd d = distribution(x, y, t);
    return d.tail(static_cast<Eigen::Index>(L_)).sum();
}

double PairCoalescenceChain::product_moment(std::size_t x, std::size_t y, double t, const std::vector<double>& p0) const {
    if (p0.size() != L_) throw PreconditionError("profile length must equal ring size");
    const Eigen::VectorXd d = distribution(x, y, t);
    double s = 0.0;
    for (std::size_t a = 0; a < L_; ++a) {
        for (std::size_t b = 0; b < L_; ++b) s += d(static_cast<Eigen::Index>(pair_state(a, b))) * p0[a] * p0[b];
        s += d(static_cast<Eigen::Index>(single_state(a))) * p0[a];
    }
    return s;
}

}  // namespace ssre
