#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ssre/environment.hpp"

namespace ssre {

// Window functionals of the environment seen from the origin.
enum class Functional {
    inv_n_shift,   // 1 / (N * T^1 N)
    n_n3,          // N * N3
    n_n3_sq,       // N * N3^2
    n_n3_squared,  // (N * N3)^2
    n,             // N
};

std::string_view to_string(Functional f);
Functional parse_functional(std::string_view name);

// Joint law of (N(-1), N(0), N(1)) as weighted atoms. Exact for constant,
// iid-discrete, periodic and Markov families; Gauss-Legendre product rule
// for iid-uniform.
struct TripleLaw {
    std::vector<std::array<double, 3>> points;
    std::vector<double> weights;
    bool exact = true;
};

TripleLaw triple_law(const EnvironmentSpec& spec);

struct AverageResult {
    double value = 0.0;
    double std_error = 0.0;
    std::string method;  // "enumeration", "quadrature" or "window"
    std::size_t window_length = 0;
};

// Exact/quadrature value when empirical_length == 0, otherwise the spatial
// mean over a sampled ring of that length with a batch-means error bar.
AverageResult ensemble_average(const EnvironmentSpec& spec, Functional f, const Migration& mig = {},
                               std::size_t empirical_length = 0, std::uint64_t seed = 0);

// Spatial mean over the window of a realized environment (ring wrap).
double window_average(const Environment& env, Functional f, const Migration& mig = {});

struct EffectiveParams {
    double sigma2 = 0.0;
    double gamma = 0.0;
    double c = 0.0;            // < 1 / (N T^1 N) >
    double n_n3 = 0.0;         // < N N3 >
    double n_n3_sq = 0.0;      // < N N3^2 >
    double n_n3_squared = 0.0; // < (N N3)^2 >
    double mean_n = 0.0;       // < N >
    double sigma2_dirichlet = 0.0;  // c^-2 < h pi >
    double gamma_pi = 0.0;          // < pi^2 / N > / < pi^2 >
    double mean_pi_sq = 0.0;        // < pi^2 >
    double m = 1.0;
    Variant variant = Variant::standard;
    std::string method;
};

EffectiveParams effective_params(const EnvironmentSpec& spec, double m, Variant variant = Variant::standard);
EffectiveParams effective_params(const Environment& env, const Migration& mig);

// Harmonic coordinate F(0) = 0, F(k) = sum_{i=0}^{k-1} 1 / (N(i) N(i+1)),
// F(-k) = -sum_{i=-k}^{-1} 1 / (N(i) N(i+1)).
class ScaleFunction {
public:
    explicit ScaleFunction(const Environment& env);

    // Defined on all integers for a ring, on [0, L-1] for a segment.
    double operator()(long k) const;
    const std::vector<double>& table() const { return table_; }
    double slope() const { return slope_; }  // F(L-1) / (L-1)
    double period_increment() const { return period_; }

private:
    std::vector<double> table_;
    double period_ = 0.0;
    double slope_ = 0.0;
    bool ring_ = true;
};

inline ScaleFunction scale_function(const Environment& env) { return ScaleFunction(env); }

}  // namespace ssre
