#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ssre/effective.hpp"
#include "ssre/environment.hpp"

namespace ssre {

// Nearest-neighbour rate matrix of the single walk on a ring, stored as
// the two off-diagonal bands.
class GeneratorMatrix {
public:
    // Throws PreconditionError for a segment environment and
    // ConsistencyError when detailed balance fails by more than 1e-12.
    GeneratorMatrix(const Environment& env, const Migration& mig);

    std::size_t size() const { return left_.size(); }
    double left(std::size_t x) const { return left_[x]; }    // rate x -> x-1
    double right(std::size_t x) const { return right_[x]; }  // rate x -> x+1
    double exit_rate(std::size_t x) const { return left_[x] + right_[x]; }
    double max_exit_rate() const;
    const std::vector<double>& pi() const { return pi_; }
    const Migration& migration() const { return mig_; }

    double detailed_balance_residual() const;
    double row_sum_residual() const;
    Eigen::MatrixXd dense() const;

private:
    std::vector<double> left_, right_, pi_;
    Migration mig_;
};

// Poisson(a) weights w_0..w_kmax with right tail below tol.
std::vector<double> poisson_weights(double a, double tol);

// Row vectors (one per row of `rows`) pushed forward by exp(tQ) with
// uniformization at rate max exit rate; truncation error per call <= tol
// in total variation per row.
Eigen::MatrixXd propagate(const GeneratorMatrix& gen, const Eigen::MatrixXd& rows, double t, double tol = 1e-12);

// Same for the increasing times in `times`; visit(k, block) sees the rows
// at times[k].
void propagate_grid(const GeneratorMatrix& gen, const Eigen::MatrixXd& rows, const std::vector<double>& times,
                    const std::function<void(std::size_t, const Eigen::MatrixXd&)>& visit, double tol = 1e-12);

// Gaussian reference (2 pi sigma2 t)^{-1/2} exp(-x^2 / (2 sigma2 t)).
double gaussian_kernel(double sigma2, double t, double x);

struct HeatKernel {
    double t = 0.0;
    Eigen::MatrixXd g;       // g(x, y) = P_x(xi_t = y)
    std::vector<double> pi;  // window-normalized reversible measure
    double h(std::size_t x, std::size_t y) const { return g(x, y) / pi[y]; }
    double row_sum_residual() const;
    double symmetry_residual() const;  // max |h(x,y) - h(y,x)|
};

// Dense kernel for rings of moderate size. Throws PreconditionError for t < 0.
HeatKernel heat_kernel(const GeneratorMatrix& gen, double t, double tol = 1e-12);

struct LocalCltRow {
    double n = 0.0;
    double sup_error = 0.0;
    std::size_t ring = 0;
    double worst_t = 0.0;
    long worst_x = 0, worst_y = 0;
};

struct LocalCltOptions {
    std::vector<double> n_values{100.0, 1000.0, 10000.0};
    double t_min = 0.5, t_max = 2.0;
    double radius = 2.0;        // R in B(0, R sqrt(n))
    std::size_t time_points = 16;
    double sigma2 = 0.0;        // Gaussian reference; required
    double sigma2_upper = 2.0 / 3.0;
    std::size_t workers = 1;
};

// Minimum ring length for the anti-wrap rule.
std::size_t anti_wrap_length(double n, double t_max, double radius, double sigma2_upper);

// Sup error of sqrt(n) g_{nt}(x,y) / pi(y) against G_t((x-y)/sqrt(n)) over
// the time grid and the ball around the window's centre. `make_env(n)` must
// return a ring at least anti_wrap_length long; a shorter ring throws
// OutOfWindowError.
std::vector<LocalCltRow> local_clt_error(const std::function<Environment(double n)>& make_env, const Migration& mig,
                                         const LocalCltOptions& opt);

struct DirichletCheck {
    double form = 0.0;   // Q(h_t(x, .))
    double bound = 0.0;  // e^-1 t^-1 h_t(x, x)
    bool holds() const { return form <= bound + 1e-12; }
};

// Q(f) = 1/2 sum_x sum_z pi(x) rate(x, z) (f(x+z) - f(x))^2.
double dirichlet_form(const GeneratorMatrix& gen, const std::vector<double>& f);
DirichletCheck dirichlet_form_check(const GeneratorMatrix& gen, double t, std::size_t x);

struct KernelBoundReport {
    std::vector<double> times;
    std::vector<double> diagonal;        // max_x sqrt(t) h_t(x, x)
    double diagonal_bound = 0.0;         // 9 K^4 e^{-1/2}
    bool diagonal_ok = true;
    std::vector<double> holder;          // sup t^{3/4} |h(x,y) - h(x,z)| / |y-z|^{1/2}
    bool holder_growth = false;
    std::vector<double> integrated;      // sum_z int_0^t (g_s(x,z) - g_s(y,z))^2 ds / (t^{1/4} |x-y|^{1/2})
    bool integrated_growth = false;
};

struct SitePair {
    std::size_t x, y;
};

// Throws PreconditionError when the grid spans less than two decades.
KernelBoundReport kernel_bound_check(const GeneratorMatrix& gen, const std::vector<double>& times,
                                     const std::vector<SitePair>& pairs, double K);

struct MeetingChain {
    Eigen::MatrixXd q;            // L x L, rows sum to 0
    Eigen::MatrixXd hitting;      // hitting(x, y): first meeting at y from split position (x+1, x)
    std::vector<double> pi;
    double detailed_balance_residual = 0.0;  // max |pi(x)^2 q(x,y) - pi(y)^2 q(y,x)|
    double stationary_residual = 0.0;        // max |(pi^2)^T q| with pi^2 summing to 1
    double null_vector_distance = 0.0;       // computed null vector vs normalized pi^2
    double hitting_row_residual = 0.0;       // max |sum_y E(x, y) - 1|
    double q_row_residual = 0.0;
};

// Throws PreconditionError for L > 64 or a segment environment.
MeetingChain meeting_chain(const Environment& env, const Migration& mig);

}  // namespace ssre
