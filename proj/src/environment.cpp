#include "ssre/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "ssre/rng.hpp"

namespace ssre {

std::string_view to_string(Family f) {
    switch (f) {
        case Family::constant: return "constant";
        case Family::iid_discrete: return "iid-discrete";
        case Family::iid_uniform: return "iid-uniform";
        case Family::periodic: return "periodic";
        case Family::markov: return "markov";
    }
    return "?";
}

Family parse_family(std::string_view s) {
    if (s == "constant") return Family::constant;
    if (s == "iid-discrete") return Family::iid_discrete;
    if (s == "iid-uniform") return Family::iid_uniform;
    if (s == "periodic") return Family::periodic;
    if (s == "markov") return Family::markov;
    throw PreconditionError("unknown environment family '" + std::string(s) + "'");
}

namespace {

EnvironmentSpec with_K(EnvironmentSpec s, double K) {
    s.K = K > 0.0 ? K : s.minimal_K();
    return s;
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

EnvironmentSpec EnvironmentSpec::constant(double n0, std::size_t length, double K) {
    EnvironmentSpec s;
    s.family = Family::constant;
    s.values = {n0};
    s.length = length;
    return with_K(s, K);
}

EnvironmentSpec EnvironmentSpec::iid_discrete(std::vector<double> values, std::vector<double> probs,
                                              std::size_t length, double K) {
    EnvironmentSpec s;
    s.family = Family::iid_discrete;
    s.values = std::move(values);
    s.probabilities = std::move(probs);
    s.length = length;
    return with_K(s, K);
}

EnvironmentSpec EnvironmentSpec::iid_uniform(double a, double b, std::size_t length, double K) {
    EnvironmentSpec s;
    s.family = Family::iid_uniform;
    s.values.clear();
    s.lower = a;
    s.upper = b;
    s.length = length;
    return with_K(s, K);
}

EnvironmentSpec EnvironmentSpec::periodic(std::vector<double> pattern, std::size_t length, double K) {
    EnvironmentSpec s;
    s.family = Family::periodic;
    s.values = std::move(pattern);
    s.length = length;
    return with_K(s, K);
}

EnvironmentSpec EnvironmentSpec::markov(std::vector<double> states, std::vector<std::vector<double>> P,
                                        std::size_t length, double K) {
    EnvironmentSpec s;
    s.family = Family::markov;
    s.values = std::move(states);
    s.transition = std::move(P);
    s.length = length;
    return with_K(s, K);
}

double EnvironmentSpec::minimal_K() const {
    double k = 1.0;
    auto cover = [&](double v) {
        if (v > 0.0) k = std::max({k, v, 1.0 / v});
    };
    if (family == Family::iid_uniform) {
        cover(lower);
        cover(upper);
    } else {
        for (double v : values) cover(v);
    }
    return k;
}

void EnvironmentSpec::validate() const {
    if (!(K >= 1.0) || !std::isfinite(K)) throw PreconditionError("K must be a finite number >= 1");
    if (length < 3) throw PreconditionError("window length must be at least 3");
    auto elliptic = [&](double v) {
        if (!(v >= 1.0 / K - 1e-15 && v <= K + 1e-15))
            throw EllipticityError("value " + fmt(v) + " outside [1/K, K] with K = " + fmt(K));
    };
    auto probability_vector = [](const std::vector<double>& p, const char* what) {
        double s = 0.0;
        for (double x : p) {
            if (!(x >= 0.0)) throw PreconditionError(std::string(what) + ": negative probability");
            s += x;
        }
        if (std::abs(s - 1.0) > 1e-12) throw PreconditionError(std::string(what) + ": probabilities must sum to 1");
    };
    switch (family) {
        case Family::constant:
            if (values.size() != 1) throw PreconditionError("constant family takes exactly one value");
            elliptic(values[0]);
            break;
        case Family::iid_discrete:
            if (values.empty() || values.size() != probabilities.size())
                throw PreconditionError("iid-discrete needs matching values and probabilities");
            for (double v : values) elliptic(v);
            probability_vector(probabilities, "iid-discrete");
            break;
        case Family::iid_uniform:
            if (!(lower < upper)) throw PreconditionError("iid-uniform needs lower < upper");
            elliptic(lower);
            elliptic(upper);
            break;
        case Family::periodic:
            if (values.empty()) throw PreconditionError("periodic pattern is empty");
            for (double v : values) elliptic(v);
            break;
        case Family::markov: {
            const std::size_t k = values.size();
            if (k == 0 || transition.size() != k) throw PreconditionError("markov: matrix size must match states");
            for (double v : values) elliptic(v);
            for (const auto& row : transition) {
                if (row.size() != k) throw PreconditionError("markov: matrix must be square");
                probability_vector(row, "markov transition row");
            }
            // Irreducibility: every state reaches every other.
            for (std::size_t s = 0; s < k; ++s) {
                std::vector<char> seen(k, 0);
                std::vector<std::size_t> stack{s};
                seen[s] = 1;
                while (!stack.empty()) {
                    const std::size_t a = stack.back();
                    stack.pop_back();
                    for (std::size_t b = 0; b < k; ++b)
                        if (transition[a][b] > 0.0 && !seen[b]) {
                            seen[b] = 1;
                            stack.push_back(b);
                        }
                }
                if (std::count(seen.begin(), seen.end(), 1) != static_cast<long>(k))
                    throw PreconditionError("markov: transition matrix is not irreducible");
            }
            break;
        }
    }
}

std::vector<double> markov_stationary(const std::vector<std::vector<double>>& P) {
    const auto k = static_cast<Eigen::Index>(P.size());
    // Solve mu (P - I) = 0 with sum(mu) = 1 by replacing one equation.
    Eigen::MatrixXd A(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j) A(j, i) = P[i][j] - (i == j ? 1.0 : 0.0);
    A.row(k - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    rhs(k - 1) = 1.0;
    const Eigen::VectorXd mu = A.fullPivLu().solve(rhs);
    return {mu.data(), mu.data() + k};
}

double EnvironmentSpec::mean_size() const {
    switch (family) {
        case Family::constant: return values[0];
        case Family::iid_discrete:
            return std::inner_product(values.begin(), values.end(), probabilities.begin(), 0.0);
        case Family::iid_uniform: return 0.5 * (lower + upper);
        case Family::periodic:
            return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        case Family::markov: {
            const auto mu = markov_stationary(transition);
            return std::inner_product(values.begin(), values.end(), mu.begin(), 0.0);
        }
    }
    return 0.0;
}

std::string EnvironmentSpec::describe() const {
    std::ostringstream os;
    os << to_string(family);
    auto list = [&](const std::vector<double>& v) {
        os << '[';
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
        os << ']';
    };
    switch (family) {
        case Family::constant: os << '(' << values[0] << ')'; break;
        case Family::iid_discrete:
            list(values);
            os << " p=";
            list(probabilities);
            break;
        case Family::iid_uniform: os << '(' << lower << ',' << upper << ')'; break;
        case Family::periodic: list(values); break;
        case Family::markov: list(values); break;
    }
    os << " K=" << K << " L=" << length << ' ' << to_string(boundary);
    return os.str();
}

Environment::Environment(EnvironmentSpec spec, std::vector<double> sizes, std::uint64_t seed)
    : spec_(std::move(spec)), sizes_(std::move(sizes)), seed_(seed) {
    spec_.length = sizes_.size();
    if (sizes_.size() < 3) throw PreconditionError("window length must be at least 3");
    for (std::size_t x = 0; x < sizes_.size(); ++x) {
        const double v = sizes_[x];
        if (!(v >= 1.0 / spec_.K - 1e-15 && v <= spec_.K + 1e-15))
            throw EllipticityError("N(" + std::to_string(x) + ") = " + fmt(v) + " outside [1/K, K]");
    }
}

std::size_t Environment::index(long x) const {
    const long L = static_cast<long>(sizes_.size());
    if (spec_.boundary == Boundary::ring) {
        long r = x % L;
        return static_cast<std::size_t>(r < 0 ? r + L : r);
    }
    if (x < 0 || x >= L) throw OutOfWindowError("site " + std::to_string(x) + " outside segment [0, " +
                                                std::to_string(L - 1) + "]");
    return static_cast<std::size_t>(x);
}

Environment Environment::shifted(long k) const {
    std::vector<double> s(sizes_.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (*this)(static_cast<long>(i) + k);
    return Environment(spec_, std::move(s), seed_);
}

Environment sample_environment(const EnvironmentSpec& spec, std::uint64_t seed) {
    spec.validate();
    const std::size_t L = spec.length;
    std::vector<double> sizes(L);
    Rng rng = make_rng(derive_seed(seed, "environment", 0));
    switch (spec.family) {
        case Family::constant: std::fill(sizes.begin(), sizes.end(), spec.values[0]); break;
        case Family::periodic:
            for (std::size_t x = 0; x < L; ++x) sizes[x] = spec.values[x % spec.values.size()];
            break;
        case Family::iid_uniform:
            for (auto& v : sizes) v = spec.lower + (spec.upper - spec.lower) * uniform01(rng);
            break;
        case Family::iid_discrete: {
            std::vector<double> cdf(spec.probabilities.size());
            std::partial_sum(spec.probabilities.begin(), spec.probabilities.end(), cdf.begin());
            for (auto& v : sizes) {
                const double u = uniform01(rng) * cdf.back();
                const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
                v = spec.values[std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1)];
            }
            break;
        }
        case Family::markov: {
            auto draw = [&](const std::vector<double>& p) {
                double u = uniform01(rng), acc = 0.0;
                for (std::size_t i = 0; i < p.size(); ++i) {
                    acc += p[i];
                    if (u < acc) return i;
                }
                return p.size() - 1;
            };
            std::size_t s = draw(markov_stationary(spec.transition));
            for (auto& v : sizes) {
                v = spec.values[s];
                s = draw(spec.transition[s]);
            }
            break;
        }
    }
    const bool seeded = spec.family != Family::constant && spec.family != Family::periodic;
    return Environment(spec, std::move(sizes), seeded ? seed : 0);
}

Environment environment_from_sizes(std::vector<double> sizes, Boundary boundary, double K) {
    EnvironmentSpec spec = EnvironmentSpec::periodic(sizes, sizes.size(), K);
    spec.boundary = boundary;
    if (!(spec.K >= 1.0)) throw PreconditionError("K must be >= 1");
    return Environment(std::move(spec), std::move(sizes), 0);
}

double n3(const Environment& env, long x, const Migration& mig) {
    if (env.boundary() == Boundary::segment && (x <= 0 || x >= static_cast<long>(env.size()) - 1))
        throw OutOfWindowError("N3 undefined at segment site " + std::to_string(x));
    return mig.n3(env(x - 1), env(x), env(x + 1));
}

std::vector<double> n3_profile(const Environment& env, const Migration& mig) {
    const long L = static_cast<long>(env.size());
    std::vector<double> out(env.size());
    for (long x = 0; x < L; ++x) {
        if (env.boundary() == Boundary::segment && (x == 0 || x == L - 1)) {
            const double side = env(x == 0 ? 1 : L - 2);
            out[x] = mig.weight_side() * side + mig.weight_centre() * env(x);
        } else {
            out[x] = mig.n3(env(x - 1), env(x), env(x + 1));
        }
    }
    return out;
}

std::vector<double> reversible_pi(const Environment& env, const Migration& mig) {
    const auto m3 = n3_profile(env, mig);
    std::vector<double> pi(env.size());
    for (std::size_t x = 0; x < pi.size(); ++x) pi[x] = env.sizes()[x] * m3[x];
    const long double mean = std::accumulate(pi.begin(), pi.end(), 0.0L) / static_cast<long double>(pi.size());
    for (auto& v : pi) v = static_cast<double>(v / mean);
    return pi;
}

double pi_window_average(const std::vector<double>& pi, double n, double delta, double x, double origin) {
    if (!(delta > 0.0)) throw PreconditionError("window half-width must be positive");
    if (!(n > 0.0)) throw PreconditionError("scale n must be positive");
    const double centre = origin + std::sqrt(n) * x;
    const double half = delta * std::sqrt(n);
    const double lo = centre - half, hi = centre + half;
    const double last = static_cast<double>(pi.size()) - 1.0;
    if (lo < 0.0 || hi > last) throw OutOfWindowError("averaging window exceeds the environment");
    // Integral of the interpolant from 0 to u.
    auto integral = [&](double u) {
        const auto k = static_cast<std::size_t>(std::floor(u));
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += 0.5 * (pi[i] + pi[i + 1]);
        const double f = u - static_cast<double>(k);
        if (f > 0.0) {
            const double b = pi[k] + f * (pi[k + 1] - pi[k]);
            s += 0.5 * f * (pi[k] + b);
        }
        return s;
    };
    return (integral(hi) - integral(lo)) / (hi - lo);
}

double pi_window_average(const Environment& env, const Migration& mig, double n, double delta, double x,
                         double origin) {
    return pi_window_average(reversible_pi(env, mig), n, delta, x, origin);
}

void save_environment(const Environment& env, Variant variant, std::ostream& os) {
    os << "# family=" << to_string(env.spec().family) << " K=" << fmt(env.K()) << " L=" << env.size()
       << " seed=" << env.seed() << " variant=" << to_string(variant) << '\n';
    for (double v : env.sizes()) os << fmt(v) << '\n';
}

void save_environment(const Environment& env, Variant variant, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_environment(env, variant, os);
    if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

Environment load_environment(std::istream& is, Boundary boundary) {
    std::vector<double> sizes;
    double K = 0.0;
    std::uint64_t seed = 0;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') {
            std::istringstream hs(line.substr(first + 1));
            std::string tok;
            while (hs >> tok) {
                const auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                if (key == "K") K = std::stod(val);
                if (key == "seed") seed = std::stoull(val);
            }
            continue;
        }
        std::istringstream ls(line);
        double v;
        if (!(ls >> v)) throw PreconditionError("line " + std::to_string(lineno) + ": expected a number");
        sizes.push_back(v);
    }
    Environment plain = environment_from_sizes(std::move(sizes), boundary, K);
    return Environment(plain.spec(), plain.sizes(), seed);
}

Environment load_environment(const std::string& path, Boundary boundary) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    return load_environment(is, boundary);
}

}  // namespace ssre
