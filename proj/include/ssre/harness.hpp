#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssre/effective.hpp"
#include "ssre/environment.hpp"
#include "ssre/forward.hpp"
#include "ssre/walks.hpp"

namespace ssre {

struct DualityReport {
    std::string label;
    double forward = 0.0;
    double forward_se = 0.0;
    double dual = 0.0;
    double dual_se = 0.0;
    double z = 0.0;
    bool passed() const { return std::abs(z) <= 3.0; }
};

double z_score(double a, double a_se, double b, double b_se);

struct DualityOptions {
    double m = 1.0;
    Variant variant = Variant::standard;
    double lambda = 100.0;
    double t = 1.0;
    double dt = 0.05;
    std::size_t replicates = 400;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
};

// Forward Monte Carlo E[p_t(x)] against sum_y g_t(x,y) p0(y) at each probe.
std::vector<DualityReport> duality_k1(const Environment& env, const std::vector<double>& p0,
                                      const std::vector<long>& probes, const DualityOptions& opt);

struct DualityK2Report {
    DualityReport versus_exact;    // forward MC vs pair-coalescence chain
    DualityReport versus_dual_mc;  // forward MC vs simulate_pair MC
    DualityReport dual_mc_vs_exact;
    double exact_coalescence_probability = 0.0;
};

// Forward MC E[p_t(x) p_t(y)] against E[prod p0(surviving lineages)].
DualityK2Report duality_k2(const Environment& env, const std::vector<double>& p0, long x, long y,
                           const DualityOptions& opt);

enum class LocalTimeConvention { occupation, semimartingale };
std::string_view to_string(LocalTimeConvention c);

struct BrownianFlowParams {
    double sigma2 = 2.0 / 3.0;
    double gamma = 1.0;
    double x1 = 0.0, x2 = 0.0;
    double T = 1.0;
    double dt_b = 2.5e-5;
    std::size_t replicates = 10000;
    LocalTimeConvention convention = LocalTimeConvention::occupation;
    std::vector<double> extra_gammas;  // evaluated on the same paths
    std::size_t workers = 1;

    double epsilon() const;  // 4 sqrt(2 sigma2 dt_b)
    void validate() const;
};

struct BrownianFlowSample {
    std::vector<std::vector<double>> times;  // [gamma index][replicate], +inf if no coalescence by T
    std::vector<double> gammas;              // gamma followed by extra_gammas
    std::vector<double> final_x1, final_x2;  // for the primary gamma; equal after coalescence
    std::vector<char> coalesced;

    double cdf(std::size_t gamma_index, double t) const;
    // E[prod over surviving lineages of f(X_i(T))] for the primary gamma.
    double moment(const std::function<double(double)>& f) const;
};

BrownianFlowSample brownian_flow_reference(const BrownianFlowParams& params, std::uint64_t seed);

// P(T_c <= t) for the flow, from the law of Brownian local time at 0 after
// the first hit. Two evaluations: closed form and numerical quadrature.
double flow_coalescence_cdf(double sigma2, double gamma, double separation, double t,
                            LocalTimeConvention convention = LocalTimeConvention::occupation);
double flow_coalescence_cdf_quadrature(double sigma2, double gamma, double separation, double t,
                                       LocalTimeConvention convention = LocalTimeConvention::occupation);

struct RefinementReport {
    double coarse = 0.0, coarse_se = 0.0;
    double fine = 0.0, fine_se = 0.0;
    bool stable() const;  // |coarse - fine| < 2 pooled SE
};

// P(T_c <= T) at dt_b and dt_b / 2 (independent streams).
RefinementReport flow_refinement_check(const BrownianFlowParams& params, std::uint64_t seed);

struct KsComparison {
    std::string label;
    double gamma = 0.0;
    double ks = 0.0;
    double band = 0.0;  // eps_dual + eps_ref at level 0.99
    bool within() const { return ks < band; }
};

struct UniversalityRow {
    std::string environment;
    EffectiveParams params;
    double offset = 0.0;
    double n = 0.0;
    std::size_t dual_samples = 0;
    KsComparison formula;           // reference with the closed-form gamma
    KsComparison negative_control;  // gamma replaced by 1 / <N>
    KsComparison corrected;         // gamma scaled by <pi^2> (diagnostic)
    double oracle_ks = 0.0;         // dual vs exact flow CDF with formula gamma
    double cauchy_ks = 0.0;         // dual at the two largest n
    double cauchy_band = 0.0;
    double msd_ratio = 0.0;         // rescaled MSD / (sigma2 t)
    double msd_ratio_se = 0.0;
    std::size_t boundary_aborts = 0;
    std::vector<double> grid, dual_cdf, ref_cdf;
};

struct UniversalityOptions {
    double m = 1.0;
    std::vector<double> n_values{2500.0, 10000.0};
    double offset = 0.5;
    double horizon = 1.0;
    std::size_t replicates = 20000;
    std::size_t ref_replicates = 20000;
    double dt_b = 2.5e-5;
    std::size_t ring = 65536;
    std::size_t msd_paths = 2000;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    LocalTimeConvention convention = LocalTimeConvention::occupation;
};

struct ConventionChoice {
    LocalTimeConvention chosen = LocalTimeConvention::occupation;
    double ks_occupation = 0.0;
    double ks_semimartingale = 0.0;
};

// Picks the local-time normalization on a constant environment, where the
// coalescence constant is known exactly, by comparing the dual against both
// references.
ConventionChoice calibrate_local_time(double n0, const UniversalityOptions& opt);

std::vector<UniversalityRow> universality_report(const std::vector<EnvironmentSpec>& specs,
                                                 const UniversalityOptions& opt);

}  // namespace ssre
