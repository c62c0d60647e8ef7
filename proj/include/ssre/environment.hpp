#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ssre/common.hpp"

namespace ssre {

enum class Family { constant, iid_discrete, iid_uniform, periodic, markov };

std::string_view to_string(Family f);
Family parse_family(std::string_view s);

// Law of the deme-size field together with the simulated window.
//
//   constant      values = {n0}
//   iid_discrete  values, probabilities
//   iid_uniform   lower, upper
//   periodic      values = pattern (tiled from site 0)
//   markov        values = states, transition = row-stochastic matrix
struct EnvironmentSpec {
    Family family = Family::constant;
    std::vector<double> values{1.0};
    std::vector<double> probabilities;
    double lower = 1.0;
    double upper = 1.0;
    std::vector<std::vector<double>> transition;
    double K = 1.0;
    std::size_t length = 64;
    Boundary boundary = Boundary::ring;

    static EnvironmentSpec constant(double n0, std::size_t length, double K = 0.0);
    static EnvironmentSpec iid_discrete(std::vector<double> values, std::vector<double> probs,
                                        std::size_t length, double K = 0.0);
    static EnvironmentSpec iid_uniform(double a, double b, std::size_t length, double K = 0.0);
    static EnvironmentSpec periodic(std::vector<double> pattern, std::size_t length, double K = 0.0);
    static EnvironmentSpec markov(std::vector<double> states, std::vector<std::vector<double>> P,
                                  std::size_t length, double K = 0.0);

    // Throws EllipticityError for values outside [1/K, K], PreconditionError
    // for any other malformed field (including a reducible Markov chain).
    void validate() const;

    // Smallest K >= 1 making every attainable value elliptic.
    double minimal_K() const;
    double mean_size() const;  // stationary mean of N
    bool is_iid() const { return family == Family::iid_discrete || family == Family::iid_uniform; }
    std::string describe() const;

    bool operator==(const EnvironmentSpec&) const = default;
};

// Stationary law of an irreducible row-stochastic matrix.
std::vector<double> markov_stationary(const std::vector<std::vector<double>>& P);

class Environment {
public:
    Environment(EnvironmentSpec spec, std::vector<double> sizes, std::uint64_t seed);

    std::size_t size() const { return sizes_.size(); }
    const std::vector<double>& sizes() const { return sizes_; }
    const EnvironmentSpec& spec() const { return spec_; }
    std::uint64_t seed() const { return seed_; }
    Boundary boundary() const { return spec_.boundary; }
    double K() const { return spec_.K; }

    // Index into the window. Ring mode wraps any integer; segment mode
    // throws OutOfWindowError outside [0, L-1].
    std::size_t index(long x) const;
    double operator()(long x) const { return sizes_[index(x)]; }

    // Environment shifted by k sites (ring mode), N'(i) = N(i + k).
    Environment shifted(long k) const;

private:
    EnvironmentSpec spec_;
    std::vector<double> sizes_;
    std::uint64_t seed_;
};

Environment sample_environment(const EnvironmentSpec& spec, std::uint64_t seed);

// Wraps explicit sizes as a periodic environment with one full period.
Environment environment_from_sizes(std::vector<double> sizes, Boundary boundary = Boundary::ring,
                                   double K = 0.0);

// N3 at site x. Segment mode throws OutOfWindowError at sites 0 and L-1.
double n3(const Environment& env, long x, const Migration& mig);

// N3 at every site. At segment end points the missing neighbour is dropped,
// which keeps the walk reversible with respect to N * N3.
std::vector<double> n3_profile(const Environment& env, const Migration& mig);

// pi(x) = N(x) N3(x) / mean(N N3) over the window.
std::vector<double> reversible_pi(const Environment& env, const Migration& mig);

// Window mean of pi over the open ball of radius delta*sqrt(n) centred at
// origin + sqrt(n)*x, using the piecewise-linear interpolation of pi.
double pi_window_average(const std::vector<double>& pi, double n, double delta, double x,
                         double origin);
double pi_window_average(const Environment& env, const Migration& mig, double n, double delta,
                         double x, double origin);

// Text format: "# family=<f> K=<K> L=<L> seed=<s> variant=<v>" then one size
// per line. load_environment also accepts a bare numeric column.
void save_environment(const Environment& env, Variant variant, std::ostream& os);
void save_environment(const Environment& env, Variant variant, const std::string& path);
Environment load_environment(std::istream& is, Boundary boundary = Boundary::ring);
Environment load_environment(const std::string& path, Boundary boundary = Boundary::ring);

}  // namespace ssre
