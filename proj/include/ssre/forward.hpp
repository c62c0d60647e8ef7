#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ssre/environment.hpp"
#include "ssre/rng.hpp"
#include "ssre/walks.hpp"

namespace ssre {

struct SdeParams {
    double m = 1.0;
    double lambda = 100.0;
    double dt = 0.01;
    double T = 1.0;
    Variant variant = Variant::standard;

    Migration migration() const { return {m, variant}; }
    // Largest admissible step: min(0.05 / m, 0.0025 lambda / K).
    double max_dt(double K) const;
    void validate(double K) const;

    bool operator==(const SdeParams&) const = default;
};

struct FrequencyField {
    std::vector<double> p;
    double t = 0.0;
};

enum class ProfileKind { constant, step, gaussian };

std::string_view to_string(ProfileKind k);
ProfileKind parse_profile(std::string_view s);

// Initial profiles in rescaled coordinates u = (x - origin) / sqrt(n).
//   constant  p = level
//   step      p = low + (high - low) clamp(1/2 - u / width, 0, 1)
//   gaussian  p = high exp(-u^2 / (2 width^2))
struct InitialProfile {
    ProfileKind kind = ProfileKind::constant;
    double level = 0.5;
    double low = 0.0;
    double high = 1.0;
    double width = 1.0;

    std::vector<double> instantiate(std::size_t L, double n, double origin) const;
    // C such that |p(x) - p(y)| <= C |x - y| / sqrt(n) at every scale n.
    double holder_budget() const;
    void validate() const;

    bool operator==(const InitialProfile&) const = default;
};

// m sum_z N(x+z)/N3(x) (p(x+z) - p(x)) with variant weights; segment end
// points drop the missing neighbour.
std::vector<double> drift(const JumpTable& rates, const std::vector<double>& p);
std::vector<double> drift(const Environment& env, const std::vector<double>& p, const SdeParams& params);

// One Euler-Maruyama step with clipping to [0, 1]. The variance uses the
// pre-step value. `noise` holds one standard normal per deme.
void em_step(const JumpTable& rates, const std::vector<double>& sizes, std::vector<double>& p, const SdeParams& params,
             const std::vector<double>& noise, std::vector<double>& scratch);
FrequencyField em_step(const Environment& env, const FrequencyField& p, const SdeParams& params, Rng& rng);

struct Trajectory {
    std::vector<FrequencyField> snapshots;
    bool boundary_touched = false;  // segment end point moved by more than 1e-6
};

// Snapshots at the requested times (each rounded up to the step grid).
// Throws PreconditionError for a requested time beyond params.T.
Trajectory simulate_forward(const Environment& env, const std::vector<double>& p0, const SdeParams& params,
                            std::uint64_t seed, const std::vector<double>& snapshot_times);

// Final fields at time T for replicates r = 0..R-1, seeded by
// derive_seed(master, tag, r).
std::vector<std::vector<double>> forward_replicates(const Environment& env, const std::vector<double>& p0,
                                                    const SdeParams& params, std::uint64_t master,
                                                    std::string_view tag, std::size_t replicates,
                                                    std::size_t workers);

// Paired runs at dt and dt/2 driven by the same Brownian increments.
struct RefinementPair {
    std::vector<double> coarse;
    std::vector<double> fine;
};
RefinementPair simulate_refinement_pair(const Environment& env, const std::vector<double>& p0, const SdeParams& params,
                                        std::uint64_t seed);

// n^{-1/2} sum_x p(x) phi((x - origin) / sqrt(n)); phi is supported in
// [support_lo, support_hi] (rescaled), which must fit in the window.
double pairing(const std::vector<double>& p, double n, const std::function<double(double)>& phi, double support_lo,
               double support_hi, double origin);

// max over snapshots and site pairs of n^{beta/2} |p(x) - p(y)| / |x - y|^beta.
// Requires 0 < beta < 2/15.
double holder_modulus(const std::vector<FrequencyField>& snapshots, double beta, double n);

}  // namespace ssre
