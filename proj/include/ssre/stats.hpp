#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ssre {

// Welford accumulator. merge() is associative up to rounding and is always
// applied in replicate order by callers, so merged results are reproducible.
class RunningStats {
public:
    void add(double x);
    void merge(const RunningStats& other);

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;  // unbiased sample variance
    double std_error() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

Estimate mean_estimate(std::span<const double> xs);

// Ratio estimator sum(num) / sum(den) with a delta-method standard error
// computed from batches of consecutive samples.
Estimate batch_ratio_estimate(std::span<const double> num, std::span<const double> den,
                              std::size_t batches = 50);

double normal_cdf(double x);
double normal_sf(double x);      // 1 - Phi(x), accurate in the upper tail
double log_normal_sf(double x);  // log(1 - Phi(x)) without underflow

// Half-width of the two-sided Dvoretzky-Kiefer-Wolfowitz band at level
// 1 - alpha: sqrt(log(2/alpha) / (2 n)).
double dkw_epsilon(std::size_t n, double alpha);

// Empirical CDF of `samples` (values may be +inf for "not yet happened")
// evaluated on `grid`.
std::vector<double> empirical_cdf(std::span<const double> samples, std::span<const double> grid);

// sup_x |F1(x) - F2(x)| over the union of jump points of both samples.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

// sup_x |F_n(x) - F(x)| for a continuous reference CDF F.
double ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf);

// Asymptotic Kolmogorov p-value for sqrt(n) * D = lambda.
double kolmogorov_pvalue(double lambda);

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace ssre
