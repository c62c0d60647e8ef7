#include "ssre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ssre/common.hpp"

namespace ssre {

void RunningStats::add(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
}

void RunningStats::merge(const RunningStats& o) {
    if (o.n_ == 0) return;
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
    const double d = o.mean_ - mean_;
    const double n = na + nb;
    mean_ += d * nb / n;
    m2_ += o.m2_ + d * d * na * nb / n;
    n_ += o.n_;
}

double RunningStats::variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningStats::std_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

Estimate mean_estimate(std::span<const double> xs) {
    RunningStats s;
    for (double x : xs) s.add(x);
    return {s.mean(), s.std_error()};
}

Estimate batch_ratio_estimate(std::span<const double> num, std::span<const double> den,
                              std::size_t batches) {
    if (num.size() != den.size()) throw PreconditionError("ratio estimate: length mismatch");
    double sn = 0.0, sd = 0.0;
    for (std::size_t i = 0; i < num.size(); ++i) {
        sn += num[i];
        sd += den[i];
    }
    if (!(sd > 0.0)) throw PreconditionError("ratio estimate: zero denominator");
    const double r = sn / sd;
    batches = std::min(batches, num.size());
    if (batches < 2) return {r, 0.0};
    // Residual sums per batch; var(r) ~ var(sum_b (num_b - r den_b)) / sd^2.
    const std::size_t per = num.size() / batches;
    double ss = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t lo = b * per;
        const std::size_t hi = (b + 1 == batches) ? num.size() : lo + per;
        double e = 0.0;
        for (std::size_t i = lo; i < hi; ++i) e += num[i] - r * den[i];
        ss += e * e;
    }
    const double bf = static_cast<double>(batches);
    return {r, std::sqrt(ss * bf / (bf - 1.0)) / sd};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double log_normal_sf(double x) {
    if (x < 30.0) return std::log(normal_sf(x));
    // Mills-ratio expansion: sf(x) = phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6 ...)
    const double x2 = x * x;
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double dkw_epsilon(std::size_t n, double alpha) {
    if (n == 0) throw PreconditionError("DKW band needs at least one sample");
    return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

std::vector<double> empirical_cdf(std::span<const double> samples, std::span<const double> grid) {
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(grid.size());
    const double n = static_cast<double>(sorted.size());
    for (double g : grid) {
        const auto it = std::upper_bound(sorted.begin(), sorted.end(), g);
        out.push_back(static_cast<double>(it - sorted.begin()) / n);
    }
    return out;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        if (std::isinf(v)) break;
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    // Remaining finite jumps of one sample against the plateau of the other.
    for (; i < x.size() && std::isfinite(x[i]); ++i)
        d = std::max(d, std::abs(static_cast<double>(i + 1) / na - static_cast<double>(j) / nb));
    for (; j < y.size() && std::isfinite(y[j]); ++j)
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j + 1) / nb));
    return d;
}

double ks_one_sample(std::span<const double> samples, const std::function<double(double)>& cdf) {
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (std::isinf(x[i])) break;
        const double f = cdf(x[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f),
                      std::abs(f - static_cast<double>(i) / n)});
    }
    return d;
}

double kolmogorov_pvalue(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw PreconditionError("least squares: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        fit.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    }
    return fit;
}

}  // namespace ssre
