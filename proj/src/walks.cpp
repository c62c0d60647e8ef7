#include "ssre/walks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssre/parallel.hpp"

namespace ssre {

SiteRates jump_rates(const Environment& env, long x, const Migration& mig) {
    const long L = static_cast<long>(env.size());
    SiteRates r;
    const double pref = mig.rate_prefactor();
    if (env.boundary() == Boundary::segment) {
        if (x < 0 || x >= L) throw OutOfWindowError("site " + std::to_string(x) + " outside segment");
        const double m3 = n3_profile(env, mig)[static_cast<std::size_t>(x)];
        r.left = x > 0 ? pref * env(x - 1) / m3 : 0.0;
        r.right = x < L - 1 ? pref * env(x + 1) / m3 : 0.0;
        r.boundary = x == 0 || x == L - 1;
        return r;
    }
    const double m3 = mig.n3(env(x - 1), env(x), env(x + 1));
    r.left = pref * env(x - 1) / m3;
    r.right = pref * env(x + 1) / m3;
    return r;
}

JumpTable::JumpTable(const Environment& env, const Migration& mig) : ring_(env.boundary() == Boundary::ring) {
    mig.validate();
    const auto m3 = n3_profile(env, mig);
    const long L = static_cast<long>(env.size());
    const double pref = mig.rate_prefactor();
    left_.resize(env.size());
    right_.resize(env.size());
    total_.resize(env.size());
    for (long x = 0; x < L; ++x) {
        const bool lo_edge = !ring_ && x == 0, hi_edge = !ring_ && x == L - 1;
        left_[x] = lo_edge ? 0.0 : pref * env(x - 1) / m3[x];
        right_[x] = hi_edge ? 0.0 : pref * env(x + 1) / m3[x];
        total_[x] = left_[x] + right_[x];
    }
}

std::size_t JumpTable::index(long x) const {
    const long L = static_cast<long>(left_.size());
    if (ring_) {
        const long r = x % L;
        return static_cast<std::size_t>(r < 0 ? r + L : r);
    }
    if (x < 0 || x >= L) throw OutOfWindowError("walk left the segment at " + std::to_string(x));
    return static_cast<std::size_t>(x);
}

double JumpTable::max_total() const { return *std::max_element(total_.begin(), total_.end()); }

bool JumpTable::at_edge(long x) const {
    return !ring_ && (x == 0 || x == static_cast<long>(left_.size()) - 1);
}

long WalkPath::position_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return start;
    return sites[static_cast<std::size_t>(it - times.begin()) - 1];
}

WalkPath simulate_walk(const JumpTable& rates, long start, double T, std::uint64_t seed) {
    if (!(T > 0.0)) throw PreconditionError("walk horizon must be positive");
    Rng rng = make_rng(seed);
    WalkPath path;
    path.start = start;
    path.horizon = T;
    long x = start;
    double t = 0.0;
    path.boundary_touched = rates.at_edge(x);
    for (;;) {
        t += standard_exponential(rng) / rates.total(x);
        if (t > T) break;
        x = jump(rates, x, rng);
        path.times.push_back(t);
        path.sites.push_back(x);
        if (rates.at_edge(x)) path.boundary_touched = true;
    }
    return path;
}

std::vector<long> walk_positions(const JumpTable& rates, long start, const std::vector<double>& grid, Rng& rng,
                                 bool* touched) {
    std::vector<long> out;
    out.reserve(grid.size());
    long x = start;
    double t = 0.0;
    std::size_t k = 0;
    bool edge = rates.at_edge(x);
    while (k < grid.size()) {
        const double next = t + standard_exponential(rng) / rates.total(x);
        while (k < grid.size() && grid[k] < next) out.push_back(x), ++k;
        if (k == grid.size()) break;
        t = next;
        x = jump(rates, x, rng);
        if (rates.at_edge(x)) edge = true;
    }
    if (touched) *touched = edge;
    return out;
}

double martingale_identity_check(const Environment& env, const Migration& mig) {
    const ScaleFunction F(env);
    const JumpTable rates(env, mig);
    const long L = static_cast<long>(env.size());
    const bool ring = env.boundary() == Boundary::ring;
    double worst = 0.0;
    for (long x = ring ? 0 : 1; x < (ring ? L : L - 1); ++x) {
        const double r = rates.left(x) * (F(x - 1) - F(x)) + rates.right(x) * (F(x + 1) - F(x));
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

MsdReport msd_and_variance_bound(const std::vector<std::vector<double>>& displacements,
                                 const std::vector<double>& times, const std::vector<long>& starts,
                                 const Environment& env, const Migration& mig) {
    if (displacements.size() < 100) throw PreconditionError("MSD report needs at least 100 paths");
    if (starts.size() != displacements.size()) throw PreconditionError("MSD report: one start per path");
    MsdReport rep;
    rep.paths = displacements.size();
    rep.times = times;
    for (std::size_t k = 0; k < times.size(); ++k) {
        RunningStats s;
        for (const auto& d : displacements) s.add(d[k] * d[k]);
        rep.msd_over_t.push_back(s.mean() / times[k]);
        rep.se.push_back(s.std_error() / times[k]);
        rep.sup_ratio = std::max(rep.sup_ratio, rep.msd_over_t.back());
    }
    // Trend over the upper half of the grid against log t.
    if (times.size() >= 4) {
        std::vector<double> lx, ly;
        for (std::size_t k = times.size() / 2; k < times.size(); ++k) {
            lx.push_back(std::log(times[k]));
            ly.push_back(rep.msd_over_t[k]);
        }
        const LinearFit fit = least_squares(lx, ly);
        // Serially correlated points: use the largest pointwise SE as the scale.
        double se = 0.0;
        for (std::size_t k = times.size() / 2; k < times.size(); ++k) se = std::max(se, rep.se[k]);
        const double span = lx.back() - lx.front();
        rep.trend_slope = fit.slope;
        rep.trend_slope_se = std::max(fit.slope_se, span > 0.0 ? se / span : 0.0);
        rep.upward_trend = fit.slope > 3.0 * rep.trend_slope_se;
    }
    const ScaleFunction F(env);
    const JumpTable rates(env, mig);
    const EffectiveParams p = effective_params(env, mig);
    double sup_h = 0.0;
    for (long x = 0; x < static_cast<long>(env.size()); ++x) {
        if (rates.at_edge(x)) continue;
        const double dl = F(x - 1) - F(x), dr = F(x + 1) - F(x);
        sup_h = std::max(sup_h, rates.left(x) * dl * dl + rates.right(x) * dr * dr);
    }
    const double K = env.K();
    rep.bound_k2 = K * K * sup_h / (p.c * p.c);
    rep.bound_k4 = K * K * rep.bound_k2;
    long double tot = 0.0L;
    for (long s : starts) tot += rates.total(s);
    rep.total_exit_rate_mean = static_cast<double>(tot / static_cast<long double>(starts.size()));
    return rep;
}

void MeetingRecord::add(double duration, long site, std::size_t index, double inv_size) {
    if (!(duration > 0.0)) return;
    total_time += duration;
    weighted_inv_size += duration * inv_size;
    if (index < occupancy.size()) occupancy[index] += duration;
    if (keep_intervals) intervals.push_back({duration, site, inv_size});
}

void MeetingRecord::merge(const MeetingRecord& o) {
    total_time += o.total_time;
    weighted_inv_size += o.weighted_inv_size;
    meetings += o.meetings;
    if (occupancy.size() < o.occupancy.size()) occupancy.resize(o.occupancy.size(), 0.0);
    for (std::size_t i = 0; i < o.occupancy.size(); ++i) occupancy[i] += o.occupancy[i];
    if (keep_intervals) intervals.insert(intervals.end(), o.intervals.begin(), o.intervals.end());
}

PairResult simulate_pair(const JumpTable& rates, const Environment& env, long x1, long x2, const PairOptions& opt,
                         Rng& rng) {
    if (!(opt.lambda > 0.0)) throw PreconditionError("lambda must be positive");
    PairResult res{DualPairState{}, MeetingRecord(env.size(), opt.keep_intervals)};
    DualPairState& s = res.state;
    MeetingRecord& rec = res.record;
    s.x1 = x1;
    s.x2 = x2;
    s.lambda = opt.lambda;
    s.clock = standard_exponential(rng);
    s.boundary_touched = rates.at_edge(x1) || rates.at_edge(x2);
    bool coalesced = false;
    bool was_together = false;
    const double horizon = opt.horizon;
    for (;;) {
        const std::size_t i1 = rates.index(s.x1), i2 = rates.index(s.x2);
        const double r1 = rates.total_at(i1);
        const double rate = coalesced ? r1 : r1 + rates.total_at(i2);
        double t_next = s.time + standard_exponential(rng) / rate;
        const bool together = !coalesced && i1 == i2;
        if (together && !was_together) ++rec.meetings;
        was_together = together;
        bool stop = false;
        if (t_next >= horizon) {
            t_next = horizon;
            stop = true;
        }
        if (together) {
            double dt = t_next - s.time;
            if (opt.meeting_budget > 0.0 && s.meeting_time + dt >= opt.meeting_budget) {
                dt = opt.meeting_budget - s.meeting_time;
                t_next = s.time + dt;
                stop = true;
            }
            const double inv_n = 1.0 / env.sizes()[i1];
            const double kappa = inv_n / opt.lambda;
            if (opt.coalesce && s.local_time + kappa * dt >= s.clock) {
                const double tau = (s.clock - s.local_time) / kappa;
                rec.add(tau, s.x1, i1, inv_n);
                s.meeting_time += tau;
                s.local_time = s.clock;
                s.time += tau;
                s.coalescence_time = s.time;
                s.x2 = s.x1;
                coalesced = true;
                was_together = false;
                if (opt.stop_at_coalescence) break;
                // Holding times are memoryless: redraw for the single walker.
                continue;
            }
            rec.add(dt, s.x1, i1, inv_n);
            s.meeting_time += dt;
            if (opt.coalesce) s.local_time += kappa * dt;
        }
        s.time = t_next;
        if (stop) break;
        if (coalesced) {
            s.x1 = jump(rates, s.x1, rng);
            s.x2 = s.x1;
        } else if (uniform01(rng) * rate < r1) {
            s.x1 = jump(rates, s.x1, rng);
        } else {
            s.x2 = jump(rates, s.x2, rng);
        }
        if (rates.at_edge(s.x1) || rates.at_edge(s.x2)) s.boundary_touched = true;
    }
    return res;
}

PairResult simulate_pair(const JumpTable& rates, const Environment& env, long x1, long x2, const PairOptions& opt,
                         std::uint64_t seed) {
    Rng rng = make_rng(seed);
    return simulate_pair(rates, env, x1, x2, opt, rng);
}

GammaEstimate gamma_meeting_estimator(const std::vector<MeetingRecord>& records, const std::vector<double>* pi) {
    GammaEstimate g;
    std::vector<double> num, den;
    MeetingRecord all(records.empty() ? 0 : records.front().occupancy.size());
    for (const auto& r : records) {
        num.push_back(r.weighted_inv_size);
        den.push_back(r.total_time);
        all.merge(r);
    }
    if (!(all.total_time > 0.0)) throw PreconditionError("no meetings observed");
    g.total_meeting_time = all.total_time;
    if (records.size() >= 2) {
        const Estimate e = batch_ratio_estimate(num, den, std::min<std::size_t>(records.size(), 50));
        g.value = e.value;
        g.std_error = e.std_error;
    } else {
        g.value = all.weighted_inv_size / all.total_time;
    }
    g.occupancy_share = all.occupancy;
    for (auto& v : g.occupancy_share) v /= all.total_time;
    if (pi && pi->size() == all.occupancy.size()) {
        double z = 0.0;
        for (double v : *pi) z += v * v;
        g.pi_sq_share.resize(pi->size());
        for (std::size_t i = 0; i < pi->size(); ++i) {
            g.pi_sq_share[i] = (*pi)[i] * (*pi)[i] / z;
            const double d = g.occupancy_share[i] - g.pi_sq_share[i];
            g.chi_square += d * d / g.pi_sq_share[i];
        }
    }
    return g;
}

CoalescenceTable coalescence_stats(const Environment& env, const Migration& mig, const CoalescenceOptions& opt) {
    for (std::size_t i = 1; i < opt.n_values.size(); ++i)
        if (!(opt.n_values[i] > opt.n_values[i - 1])) throw PreconditionError("n list must be increasing");
    const JumpTable rates(env, mig);
    CoalescenceTable table;
    table.n_values = opt.n_values;
    table.horizon = opt.horizon;
    const long L = static_cast<long>(env.size());
    for (double n : opt.n_values) {
        const double root = std::sqrt(n);
        const long sep = std::lround(root * opt.offset);
        PairOptions po;
        po.lambda = root;
        po.horizon = n * opt.horizon;
        po.stop_at_coalescence = true;
        std::vector<double> out(opt.replicates, std::numeric_limits<double>::infinity());
        std::vector<char> aborted(opt.replicates, 0);
        const std::string tag = "coalescence/n=" + std::to_string(static_cast<long long>(n));
        parallel_for(opt.replicates, opt.workers, [&](std::size_t r) {
            Rng rng = make_rng(derive_seed(opt.seed, tag, r));
            long x1 = static_cast<long>(uniform01(rng) * static_cast<double>(L));
            if (!rates.ring()) x1 = L / 2 - sep / 2;
            const PairResult res = simulate_pair(rates, env, x1, x1 + sep, po, rng);
            if (res.state.boundary_touched) {
                aborted[r] = 1;
                return;
            }
            if (res.state.coalescence_time) out[r] = *res.state.coalescence_time / n;
        });
        std::vector<double> kept;
        for (std::size_t r = 0; r < opt.replicates; ++r) {
            if (aborted[r]) ++table.boundary_aborts;
            else kept.push_back(out[r]);
        }
        table.rescaled_times.push_back(std::move(kept));
    }
    return table;
}

}  // namespace ssre
