#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ssre/effective.hpp"
#include "ssre/environment.hpp"
#include "ssre/rng.hpp"
#include "ssre/stats.hpp"

namespace ssre {

struct SiteRates {
    double left = 0.0;
    double right = 0.0;
    bool boundary = false;  // a missing segment neighbour was given rate 0
};

// Rate m N(y) / N3(x) for y = x -/+ 1 (prefactor and N3 per variant).
SiteRates jump_rates(const Environment& env, long x, const Migration& mig);

// Precomputed per-site rates for fast simulation. Ring positions are kept
// unwrapped; lookups reduce them modulo L.
class JumpTable {
public:
    JumpTable(const Environment& env, const Migration& mig);

    std::size_t size() const { return left_.size(); }
    bool ring() const { return ring_; }
    std::size_t index(long x) const;
    double left(long x) const { return left_[index(x)]; }
    double right(long x) const { return right_[index(x)]; }
    double total(long x) const { return total_[index(x)]; }
    double left_at(std::size_t i) const { return left_[i]; }
    double total_at(std::size_t i) const { return total_[i]; }
    double max_total() const;
    // True at segment end points.
    bool at_edge(long x) const;

private:
    std::vector<double> left_, right_, total_;
    bool ring_;
};

// One jump: returns the new position given the current one.
inline long jump(const JumpTable& rates, long x, Rng& rng) {
    const std::size_t i = rates.index(x);
    return uniform01(rng) * rates.total_at(i) < rates.left_at(i) ? x - 1 : x + 1;
}

struct WalkPath {
    long start = 0;
    std::vector<double> times;  // jump times, strictly increasing
    std::vector<long> sites;    // position after each jump
    double horizon = 0.0;
    bool boundary_touched = false;

    long position_at(double t) const;
    long final_position() const { return sites.empty() ? start : sites.back(); }
};

WalkPath simulate_walk(const JumpTable& rates, long start, double T, std::uint64_t seed);

// Positions at the increasing times in `grid`, without storing the path.
// Sets *touched when a segment walk reaches an end point.
std::vector<long> walk_positions(const JumpTable& rates, long start, const std::vector<double>& grid, Rng& rng,
                                 bool* touched = nullptr);

// Max over sites of |sum_z rate(x,z) (F(x+z) - F(x))| (interior sites for a
// segment).
double martingale_identity_check(const Environment& env, const Migration& mig);

struct MsdReport {
    std::vector<double> times;
    std::vector<double> msd_over_t;
    std::vector<double> se;
    bool upward_trend = false;   // slope of the upper half of the curve > 3 SE
    double trend_slope = 0.0;
    double trend_slope_se = 0.0;
    double sup_ratio = 0.0;      // max_t MSD(t)/t
    double bound_k2 = 0.0;       // K^2 c^-2 sup h
    double bound_k4 = 0.0;       // K^4 c^-2 sup h
    double total_exit_rate_mean = 0.0;
    std::size_t paths = 0;
};

// displacements[i][k] = xi^i(t_k) - xi^i(0) for the walk started at starts[i].
MsdReport msd_and_variance_bound(const std::vector<std::vector<double>>& displacements,
                                 const std::vector<double>& times, const std::vector<long>& starts,
                                 const Environment& env, const Migration& mig);

struct MeetingInterval {
    double duration;
    long site;
    double inv_size;
};

struct MeetingRecord {
    double total_time = 0.0;
    double weighted_inv_size = 0.0;  // integral of 1/N(site) over time together
    std::size_t meetings = 0;
    std::vector<double> occupancy;   // per-site time together (window index)
    std::vector<MeetingInterval> intervals;
    bool keep_intervals = false;

    explicit MeetingRecord(std::size_t window = 0, bool keep = false)
        : occupancy(window, 0.0), keep_intervals(keep) {}
    void add(double duration, long site, std::size_t index, double inv_size);
    void merge(const MeetingRecord& other);
};

struct DualPairState {
    long x1 = 0, x2 = 0;
    double time = 0.0;
    double local_time = 0.0;    // L(t): integral of 1/(lambda N) while together
    double meeting_time = 0.0;  // L0(t): time together
    double clock = 0.0;         // E ~ Exp(1)
    std::optional<double> coalescence_time;
    double lambda = 1.0;
    bool boundary_touched = false;
};

struct PairOptions {
    double lambda = 1.0;
    double horizon = 1.0;
    bool coalesce = true;
    double meeting_budget = 0.0;  // > 0: stop once L0 reaches this value
    bool keep_intervals = false;
    bool stop_at_coalescence = false;
};

struct PairResult {
    DualPairState state;
    MeetingRecord record;
};

// Two independent walks with the exponential-clock coalescence rule; the
// crossing time of L over E is solved exactly inside the holding interval.
PairResult simulate_pair(const JumpTable& rates, const Environment& env, long x1, long x2, const PairOptions& opt,
                         Rng& rng);
PairResult simulate_pair(const JumpTable& rates, const Environment& env, long x1, long x2, const PairOptions& opt,
                         std::uint64_t seed);

struct GammaEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double total_meeting_time = 0.0;
    std::vector<double> occupancy_share;  // normalized occupancy histogram
    std::vector<double> pi_sq_share;      // pi^2 / sum pi^2 on the same sites
    double chi_square = 0.0;              // sum (occ - w)^2 / w
};

// Duration-weighted mean of 1/N over the records, with a batch error bar
// from per-record contributions. Throws if no meeting was observed.
GammaEstimate gamma_meeting_estimator(const std::vector<MeetingRecord>& records,
                                      const std::vector<double>* pi = nullptr);

struct CoalescenceTable {
    std::vector<double> n_values;
    std::vector<std::vector<double>> rescaled_times;  // T_c / n, +inf when not coalesced
    double horizon = 0.0;                             // rescaled horizon
    std::size_t boundary_aborts = 0;
};

struct CoalescenceOptions {
    std::vector<double> n_values;
    double offset = 0.0;      // rescaled start separation x2 - x1
    double horizon = 1.0;     // rescaled horizon
    std::size_t replicates = 1000;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
};

// Rescaled coalescence times with lambda = sqrt(n), starts spread over the
// ring so that the quenched samples average over many local environments.
CoalescenceTable coalescence_stats(const Environment& env, const Migration& mig, const CoalescenceOptions& opt);

}  // namespace ssre
