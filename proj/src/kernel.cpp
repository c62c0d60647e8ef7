#include "ssre/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <boost/math/distributions/poisson.hpp>

#include "ssre/parallel.hpp"
#include "ssre/stats.hpp"

namespace ssre {

GeneratorMatrix::GeneratorMatrix(const Environment& env, const Migration& mig) : mig_(mig) {
    if (env.boundary() != Boundary::ring) throw PreconditionError("generator matrices need a ring environment");
    mig.validate();
    const long L = static_cast<long>(env.size());
    const double pref = mig.rate_prefactor();
    left_.resize(env.size());
    right_.resize(env.size());
    for (long x = 0; x < L; ++x) {
        const double m3 = n3(env, x, mig);
        left_[x] = pref * env(x - 1) / m3;
        right_[x] = pref * env(x + 1) / m3;
    }
    pi_ = reversible_pi(env, mig);
    if (detailed_balance_residual() > 1e-12)
        throw ConsistencyError("generator violates detailed balance with respect to N N3");
}

double GeneratorMatrix::max_exit_rate() const {
    double m = 0.0;
    for (std::size_t x = 0; x < size(); ++x) m = std::max(m, exit_rate(x));
    return m;
}

double GeneratorMatrix::detailed_balance_residual() const {
    const std::size_t L = size();
    double worst = 0.0;
    for (std::size_t x = 0; x < L; ++x) {
        const std::size_t y = (x + 1) % L;
        worst = std::max(worst, std::abs(pi_[x] * right_[x] - pi_[y] * left_[y]));
    }
    return worst;
}

double GeneratorMatrix::row_sum_residual() const {
    const Eigen::MatrixXd Q = dense();
    return Q.rowwise().sum().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd GeneratorMatrix::dense() const {
    const auto L = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(L, L);
    for (Eigen::Index x = 0; x < L; ++x) {
        Q(x, (x + L - 1) % L) += left_[x];
        Q(x, (x + 1) % L) += right_[x];
        Q(x, x) -= left_[x] + right_[x];
    }
    return Q;
}

std::vector<double> poisson_weights(double a, double tol) {
    if (!(a >= 0.0)) throw PreconditionError("Poisson mean must be non-negative");
    if (a == 0.0) return {1.0};
    const boost::math::poisson_distribution<double> dist(a);
    const auto kmax = static_cast<std::size_t>(boost::math::quantile(boost::math::complement(dist, tol)));
    std::vector<double> w(kmax + 1);
    for (std::size_t k = 0; k <= kmax; ++k) w[k] = boost::math::pdf(dist, static_cast<double>(k));
    return w;
}

namespace {

// out = v P with P = I + Q / rate, rows of v are distributions over sites.
void uniformized_step(const GeneratorMatrix& gen, double rate, const Eigen::MatrixXd& v, Eigen::MatrixXd& out) {
    const auto L = static_cast<Eigen::Index>(gen.size());
    for (Eigen::Index j = 0; j < L; ++j) {
        const Eigen::Index jl = (j + L - 1) % L, jr = (j + 1) % L;
        const double stay = 1.0 - gen.exit_rate(j) / rate;
        out.col(j) = stay * v.col(j) + (gen.right(jl) / rate) * v.col(jl) + (gen.left(jr) / rate) * v.col(jr);
    }
}

Eigen::MatrixXd advance(const GeneratorMatrix& gen, const Eigen::MatrixXd& rows, double dt, double tol) {
    if (dt == 0.0) return rows;
    const double rate = gen.max_exit_rate();
    const auto w = poisson_weights(rate * dt, tol);
    Eigen::MatrixXd cur = rows, next(rows.rows(), rows.cols());
    Eigen::MatrixXd acc = w[0] * rows;
    for (std::size_t k = 1; k < w.size(); ++k) {
        uniformized_step(gen, rate, cur, next);
        cur.swap(next);
        if (w[k] > 0.0) acc.noalias() += w[k] * cur;
    }
    return acc;
}

double growth_slope(const std::vector<double>& times, const std::vector<double>& values) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < times.size(); ++i)
        if (values[i] > 0.0) {
            lx.push_back(std::log(times[i]));
            ly.push_back(std::log(values[i]));
        }
    if (lx.size() < 2) return 0.0;
    return least_squares(lx, ly).slope;
}

}  // namespace

Eigen::MatrixXd propagate(const GeneratorMatrix& gen, const Eigen::MatrixXd& rows, double t, double tol) {
    if (!(t >= 0.0)) throw PreconditionError("time must be non-negative");
    if (rows.cols() != static_cast<Eigen::Index>(gen.size())) throw PreconditionError("row length must equal ring size");
    return advance(gen, rows, t, tol);
}

void propagate_grid(const GeneratorMatrix& gen, const Eigen::MatrixXd& rows, const std::vector<double>& times,
                    const std::function<void(std::size_t, const Eigen::MatrixXd&)>& visit, double tol) {
    Eigen::MatrixXd cur = rows;
    double t = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!(times[k] >= t)) throw PreconditionError("time grid must be non-negative and increasing");
        cur = propagate(gen, cur, times[k] - t, tol);
        t = times[k];
        visit(k, cur);
    }
}

double gaussian_kernel(double sigma2, double t, double x) {
    return std::exp(-x * x / (2.0 * sigma2 * t)) / std::sqrt(2.0 * std::numbers::pi * sigma2 * t);
}

double HeatKernel::row_sum_residual() const {
    return (g.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

double HeatKernel::symmetry_residual() const {
    double worst = 0.0;
    for (Eigen::Index x = 0; x < g.rows(); ++x)
        for (Eigen::Index y = x + 1; y < g.cols(); ++y)
            worst = std::max(worst, std::abs(h(x, y) - h(y, x)));
    return worst;
}

HeatKernel heat_kernel(const GeneratorMatrix& gen, double t, double tol) {
    if (!(t >= 0.0)) throw PreconditionError("heat kernel time must be non-negative");
    const auto L = static_cast<Eigen::Index>(gen.size());
    HeatKernel k;
    k.t = t;
    k.pi = gen.pi();
    k.g = propagate(gen, Eigen::MatrixXd::Identity(L, L), t, tol);
    return k;
}

std::size_t anti_wrap_length(double n, double t_max, double radius, double sigma2_upper) {
    return static_cast<std::size_t>(std::ceil(10.0 * std::sqrt(sigma2_upper * n * t_max) + 2.0 * radius * std::sqrt(n)));
}

std::vector<LocalCltRow> local_clt_error(const std::function<Environment(double n)>& make_env, const Migration& mig,
                                         const LocalCltOptions& opt) {
    if (!(opt.sigma2 > 0.0)) throw PreconditionError("local CLT needs the reference sigma2");
    if (opt.time_points < 2 || !(opt.t_min > 0.0) || !(opt.t_max > opt.t_min))
        throw PreconditionError("local CLT needs a time range 0 < t_min < t_max");
    std::vector<LocalCltRow> rows;
    for (double n : opt.n_values) {
        const Environment env = make_env(n);
        const std::size_t need = anti_wrap_length(n, opt.t_max, opt.radius, opt.sigma2_upper);
        if (env.size() < need)
            throw OutOfWindowError("ring of " + std::to_string(env.size()) + " sites violates the anti-wrap rule (" +
                                   std::to_string(need) + " needed)");
        const GeneratorMatrix gen(env, mig);
        const long L = static_cast<long>(env.size());
        const long centre = L / 2;
        const double root = std::sqrt(n);
        const long reach = static_cast<long>(std::floor(opt.radius * root));
        std::vector<long> sites;
        for (long d = -reach; d <= reach; ++d) sites.push_back(centre + d);
        std::vector<double> times;
        for (std::size_t k = 0; k < opt.time_points; ++k)
            times.push_back(n * (opt.t_min + (opt.t_max - opt.t_min) * static_cast<double>(k) /
                                                 static_cast<double>(opt.time_points - 1)));

        // Split the sources into worker blocks; each block is independent.
        const std::size_t blocks = std::max<std::size_t>(1, std::min(opt.workers, sites.size()));
        std::vector<LocalCltRow> partial(blocks);
        const auto& pi = gen.pi();
        parallel_for(blocks, blocks, [&](std::size_t b) {
            const std::size_t lo = sites.size() * b / blocks, hi = sites.size() * (b + 1) / blocks;
            Eigen::MatrixXd start = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(hi - lo), L);
            for (std::size_t i = lo; i < hi; ++i) start(static_cast<Eigen::Index>(i - lo), sites[i]) = 1.0;
            LocalCltRow& best = partial[b];
            propagate_grid(gen, start, times, [&](std::size_t k, const Eigen::MatrixXd& g) {
                const double t = times[k] / n;
                for (std::size_t i = lo; i < hi; ++i)
                    for (long y : sites) {
                        const double lhs = root * g(static_cast<Eigen::Index>(i - lo), y) / pi[y];
                        const double rhs = gaussian_kernel(opt.sigma2, t, static_cast<double>(sites[i] - y) / root);
                        const double e = std::abs(lhs - rhs);
                        if (e > best.sup_error) {
                            best.sup_error = e;
                            best.worst_t = t;
                            best.worst_x = sites[i] - centre;
                            best.worst_y = y - centre;
                        }
                    }
            });
        });
        LocalCltRow row;
        for (const auto& p : partial)
            if (p.sup_error > row.sup_error) row = p;
        row.n = n;
        row.ring = env.size();
        rows.push_back(row);
    }
    return rows;
}

double dirichlet_form(const GeneratorMatrix& gen, const std::vector<double>& f) {
    const std::size_t L = gen.size();
    if (f.size() != L) throw PreconditionError("function length must equal ring size");
    const auto& pi = gen.pi();
    double q = 0.0;
    for (std::size_t x = 0; x < L; ++x) {
        const double dl = f[(x + L - 1) % L] - f[x], dr = f[(x + 1) % L] - f[x];
        q += pi[x] * (gen.left(x) * dl * dl + gen.right(x) * dr * dr);
    }
    return 0.5 * q;
}

DirichletCheck dirichlet_form_check(const GeneratorMatrix& gen, double t, std::size_t x) {
    if (!(t > 0.0)) throw PreconditionError("Dirichlet-form check needs t > 0");
    const auto L = static_cast<Eigen::Index>(gen.size());
    Eigen::MatrixXd start = Eigen::MatrixXd::Zero(1, L);
    start(0, static_cast<Eigen::Index>(x)) = 1.0;
    const Eigen::MatrixXd g = propagate(gen, start, t);
    std::vector<double> h(gen.size());
    for (Eigen::Index y = 0; y < L; ++y) h[y] = g(0, y) / gen.pi()[y];
    DirichletCheck c;
    c.form = dirichlet_form(gen, h);
    c.bound = h[x] / (std::numbers::e * t);
    return c;
}

KernelBoundReport kernel_bound_check(const GeneratorMatrix& gen, const std::vector<double>& times,
                                     const std::vector<SitePair>& pairs, double K) {
    if (times.size() < 2 || !(times.front() > 0.0) || times.back() < 100.0 * times.front())
        throw PreconditionError("time grid must span at least two decades");
    const auto L = static_cast<Eigen::Index>(gen.size());
    const auto& pi = gen.pi();
    KernelBoundReport rep;
    rep.times = times;
    rep.diagonal_bound = 9.0 * std::pow(K, 4) * std::exp(-0.5);

    // Fine quadrature grid for the time integrals: 0, then geometric points
    // reaching every requested time.
    std::vector<double> fine{0.0};
    const double t0 = times.front() / 64.0;
    const std::size_t per_decade = 48;
    const double ratio = std::pow(10.0, 1.0 / static_cast<double>(per_decade));
    for (double s = t0; s < times.back(); s *= ratio) fine.push_back(s);
    for (double t : times) fine.push_back(t);
    std::sort(fine.begin(), fine.end());
    fine.erase(std::unique(fine.begin(), fine.end()), fine.end());

    std::vector<double> integral(pairs.size(), 0.0), prev_sq(pairs.size(), 0.0);
    for (std::size_t p = 0; p < pairs.size(); ++p) prev_sq[p] = pairs[p].x == pairs[p].y ? 0.0 : 2.0;
    std::size_t next_report = 0;
    double prev_s = 0.0;
    std::vector<double> fine_tail(fine.begin() + 1, fine.end());
    propagate_grid(gen, Eigen::MatrixXd::Identity(L, L), fine_tail, [&](std::size_t k, const Eigen::MatrixXd& g) {
        const double s = fine_tail[k];
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const double sq = (g.row(pairs[p].x) - g.row(pairs[p].y)).squaredNorm();
            integral[p] += 0.5 * (s - prev_s) * (sq + prev_sq[p]);
            prev_sq[p] = sq;
        }
        prev_s = s;
        if (next_report >= times.size() || s != times[next_report]) return;
        const double t = s;
        double diag = 0.0;
        for (Eigen::Index x = 0; x < L; ++x) diag = std::max(diag, std::sqrt(t) * g(x, x) / pi[x]);
        rep.diagonal.push_back(diag);
        if (diag > rep.diagonal_bound + 1e-9) rep.diagonal_ok = false;
        double holder = 0.0;
        for (const auto& pr : pairs) {
            if (pr.x == pr.y) continue;
            const double gap = std::sqrt(std::abs(static_cast<double>(pr.x) - static_cast<double>(pr.y)));
            for (Eigen::Index x = 0; x < L; ++x) {
                const double d = std::abs(g(x, pr.x) / pi[pr.x] - g(x, pr.y) / pi[pr.y]);
                holder = std::max(holder, std::pow(t, 0.75) * d / gap);
            }
        }
        rep.holder.push_back(holder);
        double integ = 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            if (pairs[p].x == pairs[p].y) continue;
            const double gap = std::sqrt(std::abs(static_cast<double>(pairs[p].x) - static_cast<double>(pairs[p].y)));
            integ = std::max(integ, integral[p] / (std::pow(t, 0.25) * gap));
        }
        rep.integrated.push_back(integ);
        ++next_report;
    });
    rep.holder_growth = growth_slope(times, rep.holder) > 0.05;
    rep.integrated_growth = growth_slope(times, rep.integrated) > 0.05;
    return rep;
}

MeetingChain meeting_chain(const Environment& env, const Migration& mig) {
    if (env.boundary() != Boundary::ring) throw PreconditionError("meeting chain needs a ring environment");
    const auto L = static_cast<long>(env.size());
    if (L > 64) throw PreconditionError("meeting chain limited to rings of at most 64 sites");
    const GeneratorMatrix gen(env, mig);

    // Off-diagonal pair states (a, b), a != b.
    auto id = [&](long a, long b) { return a * (L - 1) + (b < a ? b : b - 1); };
    const long M = L * (L - 1);
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(M, L);
    auto wrap = [&](long v) { return ((v % L) + L) % L; };
    for (long a = 0; a < L; ++a)
        for (long b = 0; b < L; ++b) {
            if (a == b) continue;
            const long s = id(a, b);
            trip.emplace_back(s, s, -(gen.exit_rate(a) + gen.exit_rate(b)));
            const std::array<std::pair<long, long>, 4> moves{{{wrap(a - 1), b}, {wrap(a + 1), b}, {a, wrap(b - 1)}, {a, wrap(b + 1)}}};
            const std::array<double, 4> rates{gen.left(a), gen.right(a), gen.left(b), gen.right(b)};
            for (std::size_t k = 0; k < 4; ++k) {
                const auto [na, nb] = moves[k];
                if (na == nb) rhs(s, na) -= rates[k];
                else trip.emplace_back(s, id(na, nb), rates[k]);
            }
        }
    Eigen::SparseMatrix<double> A(M, M);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw ConsistencyError("meeting-chain hitting system is singular");
    const Eigen::MatrixXd u = lu.solve(rhs);
    if (lu.info() != Eigen::Success) throw ConsistencyError("meeting-chain solve failed");

    MeetingChain mc;
    mc.pi = gen.pi();
    mc.q = Eigen::MatrixXd::Zero(L, L);
    mc.hitting = Eigen::MatrixXd::Zero(L, L);
    for (long x = 0; x < L; ++x) {
        const long xl = wrap(x - 1), xr = wrap(x + 1);
        for (long y = 0; y < L; ++y) {
            mc.hitting(x, y) = u(id(xr, x), y);
            if (y == x) continue;
            mc.q(x, y) = gen.left(x) * (u(id(xl, x), y) + u(id(x, xl), y)) +
                         gen.right(x) * (u(id(xr, x), y) + u(id(x, xr), y));
        }
        mc.q(x, x) = -mc.q.row(x).sum();
    }
    mc.hitting_row_residual = (mc.hitting.rowwise().sum().array() - 1.0).abs().maxCoeff();
    mc.q_row_residual = mc.q.rowwise().sum().cwiseAbs().maxCoeff();

    Eigen::VectorXd w(L);
    for (long x = 0; x < L; ++x) w(x) = mc.pi[x] * mc.pi[x];
    w /= w.sum();
    for (long x = 0; x < L; ++x)
        for (long y = 0; y < L; ++y)
            mc.detailed_balance_residual =
                std::max(mc.detailed_balance_residual, std::abs(mc.pi[x] * mc.pi[x] * mc.q(x, y) - mc.pi[y] * mc.pi[y] * mc.q(y, x)));
    mc.stationary_residual = (w.transpose() * mc.q).cwiseAbs().maxCoeff();

    // Independent null vector of q^T with a normalization row.
    Eigen::MatrixXd B = mc.q.transpose();
    B.row(L - 1).setOnes();
    Eigen::VectorXd e = Eigen::VectorXd::Zero(L);
    e(L - 1) = 1.0;
    const Eigen::VectorXd nv = B.fullPivLu().solve(e);
    mc.null_vector_distance = (nv - w).cwiseAbs().maxCoeff();
    return mc;
}

}  // namespace ssre
