#include "ssre/effective.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/quadrature/gauss.hpp>

#include "ssre/stats.hpp"

namespace ssre {

std::string_view to_string(Functional f) {
    switch (f) {
        case Functional::inv_n_shift: return "1/(N*T1N)";
        case Functional::n_n3: return "N*N3";
        case Functional::n_n3_sq: return "N*N3^2";
        case Functional::n_n3_squared: return "(N*N3)^2";
        case Functional::n: return "N";
    }
    return "?";
}

Functional parse_functional(std::string_view name) {
    for (auto f : {Functional::inv_n_shift, Functional::n_n3, Functional::n_n3_sq, Functional::n_n3_squared,
                   Functional::n})
        if (to_string(f) == name) return f;
    throw PreconditionError("unknown functional '" + std::string(name) + "'");
}

namespace {

double evaluate(Functional f, const std::array<double, 3>& t, const Migration& mig) {
    const double l = t[0], c = t[1], r = t[2];
    const double m3 = mig.n3(l, c, r);
    switch (f) {
        case Functional::inv_n_shift: return 1.0 / (c * r);
        case Functional::n_n3: return c * m3;
        case Functional::n_n3_sq: return c * m3 * m3;
        case Functional::n_n3_squared: return (c * m3) * (c * m3);
        case Functional::n: return c;
    }
    return 0.0;
}

template <class F>
double law_mean(const TripleLaw& law, F&& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < law.points.size(); ++i) s += law.weights[i] * f(law.points[i]);
    return s;
}

// Assemble every bracket from a mean operator over triples.
template <class Mean>
EffectiveParams assemble(Mean&& mean, const Migration& mig, double c_override) {
    EffectiveParams p;
    p.m = mig.m;
    p.variant = mig.variant;
    auto avg = [&](Functional f) { return mean([&](const std::array<double, 3>& t) { return evaluate(f, t, mig); }); };
    p.c = c_override > 0.0 ? c_override : avg(Functional::inv_n_shift);
    p.n_n3 = avg(Functional::n_n3);
    p.n_n3_sq = avg(Functional::n_n3_sq);
    p.n_n3_squared = avg(Functional::n_n3_squared);
    p.mean_n = avg(Functional::n);
    const double pref = mig.rate_prefactor();
    p.sigma2 = 2.0 * pref / (p.c * p.n_n3);
    p.gamma = p.n_n3_sq / p.n_n3_squared;

    // pi-based routes: h(x) = sum_z j(x,z) (F(x+z) - F(x))^2, pi = N N3 / <N N3>.
    const double norm = p.n_n3;
    const double h_pi = mean([&](const std::array<double, 3>& t) {
        const double l = t[0], c = t[1], r = t[2];
        const double m3 = mig.n3(l, c, r);
        const double h = pref / (m3 * c * c) * (1.0 / r + 1.0 / l);
        return h * c * m3 / norm;
    });
    p.sigma2_dirichlet = h_pi / (p.c * p.c);
    const double pi_sq = mean([&](const std::array<double, 3>& t) {
        const double v = t[1] * mig.n3(t[0], t[1], t[2]) / norm;
        return v * v;
    });
    const double pi_sq_over_n = mean([&](const std::array<double, 3>& t) {
        const double v = t[1] * mig.n3(t[0], t[1], t[2]) / norm;
        return v * v / t[1];
    });
    p.gamma_pi = pi_sq_over_n / pi_sq;
    p.mean_pi_sq = pi_sq;
    return p;
}

}  // namespace

TripleLaw triple_law(const EnvironmentSpec& spec) {
    spec.validate();
    TripleLaw law;
    switch (spec.family) {
        case Family::constant: {
            const double v = spec.values[0];
            law.points.push_back({v, v, v});
            law.weights.push_back(1.0);
            break;
        }
        case Family::iid_discrete: {
            const auto& v = spec.values;
            const auto& p = spec.probabilities;
            for (std::size_t a = 0; a < v.size(); ++a)
                for (std::size_t b = 0; b < v.size(); ++b)
                    for (std::size_t c = 0; c < v.size(); ++c) {
                        law.points.push_back({v[a], v[b], v[c]});
                        law.weights.push_back(p[a] * p[b] * p[c]);
                    }
            break;
        }
        case Family::periodic: {
            const auto& v = spec.values;
            const std::size_t q = v.size();
            for (std::size_t i = 0; i < q; ++i) {
                law.points.push_back({v[(i + q - 1) % q], v[i], v[(i + 1) % q]});
                law.weights.push_back(1.0 / static_cast<double>(q));
            }
            break;
        }
        case Family::markov: {
            const auto mu = markov_stationary(spec.transition);
            const auto& P = spec.transition;
            const auto& v = spec.values;
            for (std::size_t a = 0; a < v.size(); ++a)
                for (std::size_t b = 0; b < v.size(); ++b)
                    for (std::size_t c = 0; c < v.size(); ++c) {
                        const double w = mu[a] * P[a][b] * P[b][c];
                        if (w == 0.0) continue;
                        law.points.push_back({v[a], v[b], v[c]});
                        law.weights.push_back(w);
                    }
            break;
        }
        case Family::iid_uniform: {
            // 30-point Gauss-Legendre rule mapped to [a, b] (boost stores the
            // non-negative half of the symmetric rule).
            using Rule = boost::math::quadrature::gauss<double, 30>;
            const auto& xs = Rule::abscissa();
            const auto& ws = Rule::weights();
            std::vector<double> nodes, weights;
            const double mid = 0.5 * (spec.lower + spec.upper), half = 0.5 * (spec.upper - spec.lower);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                nodes.push_back(mid + half * xs[i]);
                weights.push_back(0.5 * ws[i]);
                if (xs[i] != 0.0) {
                    nodes.push_back(mid - half * xs[i]);
                    weights.push_back(0.5 * ws[i]);
                }
            }
            for (std::size_t a = 0; a < nodes.size(); ++a)
                for (std::size_t b = 0; b < nodes.size(); ++b)
                    for (std::size_t c = 0; c < nodes.size(); ++c) {
                        law.points.push_back({nodes[a], nodes[b], nodes[c]});
                        law.weights.push_back(weights[a] * weights[b] * weights[c]);
                    }
            law.exact = false;
            break;
        }
    }
    return law;
}

AverageResult ensemble_average(const EnvironmentSpec& spec, Functional f, const Migration& mig,
                               std::size_t empirical_length, std::uint64_t seed) {
    mig.validate();
    AverageResult out;
    if (empirical_length == 0) {
        if (spec.family == Family::iid_uniform && f == Functional::inv_n_shift) {
            spec.validate();
            const double e = std::log(spec.upper / spec.lower) / (spec.upper - spec.lower);
            out.value = e * e;
            out.method = "quadrature";
            return out;
        }
        const TripleLaw law = triple_law(spec);
        out.value = law_mean(law, [&](const auto& t) { return evaluate(f, t, mig); });
        out.method = law.exact ? "enumeration" : "quadrature";
        return out;
    }
    EnvironmentSpec ring = spec;
    ring.length = empirical_length;
    ring.boundary = Boundary::ring;
    const Environment env = sample_environment(ring, seed);
    std::vector<double> vals(env.size()), ones(env.size(), 1.0);
    for (long x = 0; x < static_cast<long>(env.size()); ++x)
        vals[x] = evaluate(f, {env(x - 1), env(x), env(x + 1)}, mig);
    const Estimate e = batch_ratio_estimate(vals, ones, 100);
    out.value = e.value;
    out.std_error = e.std_error;
    out.method = "window";
    out.window_length = empirical_length;
    return out;
}

double window_average(const Environment& env, Functional f, const Migration& mig) {
    double s = 0.0;
    for (long x = 0; x < static_cast<long>(env.size()); ++x)
        s += evaluate(f, {env(x - 1), env(x), env(x + 1)}, mig);
    return s / static_cast<double>(env.size());
}

EffectiveParams effective_params(const EnvironmentSpec& spec, double m, Variant variant) {
    const Migration mig{m, variant};
    mig.validate();
    const TripleLaw law = triple_law(spec);
    double c_exact = 0.0;
    if (spec.family == Family::iid_uniform) {
        const double e = std::log(spec.upper / spec.lower) / (spec.upper - spec.lower);
        c_exact = e * e;
    }
    auto mean = [&](auto&& f) { return law_mean(law, f); };
    EffectiveParams p = assemble(mean, mig, c_exact);
    p.method = law.exact ? "enumeration" : "quadrature";
    return p;
}

EffectiveParams effective_params(const Environment& env, const Migration& mig) {
    mig.validate();
    Environment ring = env;
    if (env.boundary() != Boundary::ring) {
        EnvironmentSpec s = env.spec();
        s.boundary = Boundary::ring;
        ring = Environment(s, env.sizes(), env.seed());
    }
    auto mean = [&](auto&& f) {
        double s = 0.0;
        for (long x = 0; x < static_cast<long>(ring.size()); ++x) s += f(std::array<double, 3>{ring(x - 1), ring(x), ring(x + 1)});
        return s / static_cast<double>(ring.size());
    };
    EffectiveParams p = assemble(mean, mig, 0.0);
    p.method = "window";
    return p;
}

ScaleFunction::ScaleFunction(const Environment& env) : ring_(env.boundary() == Boundary::ring) {
    const std::size_t L = env.size();
    table_.assign(L, 0.0);
    for (std::size_t k = 1; k < L; ++k) {
        const auto i = static_cast<long>(k - 1);
        table_[k] = table_[k - 1] + 1.0 / (env(i) * env(i + 1));
    }
    if (ring_) period_ = table_[L - 1] + 1.0 / (env(static_cast<long>(L) - 1) * env(0));
    slope_ = table_[L - 1] / static_cast<double>(L - 1);
}

double ScaleFunction::operator()(long k) const {
    const long L = static_cast<long>(table_.size());
    if (!ring_) {
        if (k < 0 || k >= L) throw OutOfWindowError("scale function evaluated outside the segment");
        return table_[static_cast<std::size_t>(k)];
    }
    long q = k / L, r = k % L;
    if (r < 0) {
        r += L;
        --q;
    }
    return static_cast<double>(q) * period_ + table_[static_cast<std::size_t>(r)];
}

}  // namespace ssre
