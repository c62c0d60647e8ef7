#include "ssre/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssre/common.hpp"
#include "ssre/rng.hpp"

namespace ssre {

DiscreteLaw::DiscreteLaw(std::vector<double> v, std::vector<double> p) {
    if (v.empty() || v.size() != p.size()) throw PreconditionError("discrete law: values and probabilities differ in length");
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    double total = 0.0;
    for (double x : p) {
        if (!(x >= 0.0)) throw PreconditionError("discrete law: negative probability");
        total += x;
    }
    if (std::abs(total - 1.0) > 1e-9) throw PreconditionError("discrete law: probabilities must sum to 1");
    for (auto i : order) {
        if (!values.empty() && v[i] == values.back()) {
            probs.back() += p[i] / total;
            continue;
        }
        values.push_back(v[i]);
        probs.push_back(p[i] / total);
    }
}

double DiscreteLaw::mean() const {
    return std::inner_product(values.begin(), values.end(), probs.begin(), 0.0);
}

double DiscreteLaw::cdf(double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < values.size() && values[i] <= x; ++i) s += probs[i];
    return s;
}

double DiscreteLaw::quantile(double u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += probs[i];
        if (acc > u) return values[i];
    }
    return values.back();
}

DiscreteLaw size_biased(const DiscreteLaw& law, const std::function<double(double)>& g) {
    std::vector<double> w(law.values.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double gv = g(law.values[i]);
        if (!(gv >= 0.0)) throw PreconditionError("coupling: g must be non-negative on the support");
        w[i] = law.probs[i] * gv;
        total += w[i];
    }
    if (!(total > 0.0)) throw PreconditionError("coupling: E[g(X)] must be positive");
    for (auto& x : w) x /= total;
    return DiscreteLaw(law.values, std::move(w));
}

CouplingReport coupling_check(const DiscreteLaw& law, const std::function<double(double)>& g, std::size_t trials,
                              std::uint64_t seed) {
    for (std::size_t i = 1; i < law.values.size(); ++i)
        if (g(law.values[i]) < g(law.values[i - 1]))
            throw PreconditionError("coupling: g is not non-decreasing on the support");
    const DiscreteLaw tilted = size_biased(law, g);

    CouplingReport r;
    r.trials = trials;
    r.e_x = law.mean();
    for (std::size_t i = 0; i < law.values.size(); ++i) {
        r.e_y += law.probs[i] * g(law.values[i]);
        r.e_xy += law.probs[i] * law.values[i] * g(law.values[i]);
    }
    r.inequality_holds = r.e_xy >= r.e_x * r.e_y - 1e-12 * std::max(1.0, std::abs(r.e_xy));
    for (double v : law.values)
        if (tilted.cdf(v) > law.cdf(v) + 1e-12) r.cdf_dominance = false;

    Rng rng = make_rng(derive_seed(seed, "coupling", 0));
    double sum_tilde = 0.0, sum_gap = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const double u = uniform01(rng);
        const double x = law.quantile(u);
        const double xt = tilted.quantile(u);
        if (xt < x) ++r.violations;
        sum_tilde += xt;
        sum_gap += xt - x;
    }
    if (trials > 0) {
        r.e_x_tilde_mc = sum_tilde / static_cast<double>(trials);
        r.mean_gap_mc = sum_gap / static_cast<double>(trials);
    }
    return r;
}

}  // namespace ssre
