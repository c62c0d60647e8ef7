#include "ssre/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ssre/parallel.hpp"

namespace ssre {

double SdeParams::max_dt(double K) const { return std::min(0.05 / m, 0.0025 * lambda / K); }

void SdeParams::validate(double K) const {
    if (!(m > 0.0)) throw PreconditionError("m must be positive");
    if (!(lambda > 0.0)) throw PreconditionError("lambda must be positive");
    migration().validate();
    if (!(dt > 0.0) || dt > max_dt(K) * (1.0 + 1e-12))
        throw PreconditionError("dt must lie in (0, min(0.05/m, 0.0025 lambda/K)]");
    if (!(T >= dt)) throw PreconditionError("horizon T must be at least dt");
}

std::string_view to_string(ProfileKind k) {
    switch (k) {
        case ProfileKind::constant: return "constant";
        case ProfileKind::step: return "step";
        case ProfileKind::gaussian: return "gaussian";
    }
    return "?";
}

ProfileKind parse_profile(std::string_view s) {
    if (s == "constant") return ProfileKind::constant;
    if (s == "step") return ProfileKind::step;
    if (s == "gaussian") return ProfileKind::gaussian;
    throw PreconditionError("unknown profile '" + std::string(s) + "'");
}

void InitialProfile::validate() const {
    auto unit = [](double v, const char* what) {
        if (!(v >= 0.0 && v <= 1.0)) throw PreconditionError(std::string(what) + " must lie in [0, 1]");
    };
    unit(level, "profile level");
    unit(low, "profile low value");
    unit(high, "profile high value");
    if (kind != ProfileKind::constant && !(width > 0.0)) throw PreconditionError("profile width must be positive");
}

std::vector<double> InitialProfile::instantiate(std::size_t L, double n, double origin) const {
    validate();
    std::vector<double> p(L);
    const double root = std::sqrt(n);
    for (std::size_t x = 0; x < L; ++x) {
        const double u = (static_cast<double>(x) - origin) / root;
        switch (kind) {
            case ProfileKind::constant: p[x] = level; break;
            case ProfileKind::step: p[x] = low + (high - low) * std::clamp(0.5 - u / width, 0.0, 1.0); break;
            case ProfileKind::gaussian: p[x] = high * std::exp(-u * u / (2.0 * width * width)); break;
        }
    }
    return p;
}

double InitialProfile::holder_budget() const {
    switch (kind) {
        case ProfileKind::constant: return 0.0;
        case ProfileKind::step: return std::abs(high - low) / width;
        case ProfileKind::gaussian: return high * std::exp(-0.5) / width;
    }
    return 0.0;
}

std::vector<double> drift(const JumpTable& rates, const std::vector<double>& p) {
    if (p.size() != rates.size()) throw PreconditionError("field and environment lengths differ");
    const long L = static_cast<long>(p.size());
    std::vector<double> d(p.size());
    for (long x = 0; x < L; ++x) {
        const double px = p[x];
        double v = 0.0;
        if (rates.left_at(x) > 0.0) v += rates.left_at(x) * (p[rates.index(x - 1)] - px);
        const double right = rates.total_at(x) - rates.left_at(x);
        if (right > 0.0) v += right * (p[rates.index(x + 1)] - px);
        d[x] = v;
    }
    return d;
}

std::vector<double> drift(const Environment& env, const std::vector<double>& p, const SdeParams& params) {
    return drift(JumpTable(env, params.migration()), p);
}

void em_step(const JumpTable& rates, const std::vector<double>& sizes, std::vector<double>& p, const SdeParams& params,
             const std::vector<double>& noise, std::vector<double>& scratch) {
    const std::size_t L = p.size();
    scratch.resize(L);
    const double dt = params.dt;
    const bool ring = rates.ring();
    for (std::size_t x = 0; x < L; ++x) {
        const double px = p[x];
        const std::size_t xl = x == 0 ? (ring ? L - 1 : 0) : x - 1;
        const std::size_t xr = x + 1 == L ? (ring ? 0 : L - 1) : x + 1;
        const double lr = rates.left_at(x), rr = rates.total_at(x) - lr;
        const double dr = lr * (p[xl] - px) + rr * (p[xr] - px);
        const double var = px * (1.0 - px) / (params.lambda * sizes[x]);
        const double next = px + dr * dt + std::sqrt(dt * std::max(var, 0.0)) * noise[x];
        scratch[x] = std::clamp(next, 0.0, 1.0);
    }
    p.swap(scratch);
}

FrequencyField em_step(const Environment& env, const FrequencyField& p, const SdeParams& params, Rng& rng) {
    params.validate(env.K());
    if (p.p.size() != env.size()) throw PreconditionError("field and environment lengths differ");
    const JumpTable rates(env, params.migration());
    std::normal_distribution<double> normal;
    std::vector<double> noise(env.size()), scratch;
    for (auto& z : noise) z = normal(rng);
    FrequencyField out = p;
    em_step(rates, env.sizes(), out.p, params, noise, scratch);
    out.t += params.dt;
    return out;
}

namespace {

std::size_t step_count(double T, double dt) {
    return static_cast<std::size_t>(std::llround(std::ceil(T / dt - 1e-9)));
}

}  // namespace

Trajectory simulate_forward(const Environment& env, const std::vector<double>& p0, const SdeParams& params,
                            std::uint64_t seed, const std::vector<double>& snapshot_times) {
    params.validate(env.K());
    if (p0.size() != env.size()) throw PreconditionError("profile and environment lengths differ");
    for (double t : snapshot_times)
        if (t > params.T + 1e-12) throw PreconditionError("snapshot time beyond the horizon T");
    const JumpTable rates(env, params.migration());
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> p = p0, noise(p0.size()), scratch;
    Trajectory traj;
    std::vector<double> wanted = snapshot_times;
    std::sort(wanted.begin(), wanted.end());
    std::size_t next = 0;
    auto emit = [&](double t) {
        while (next < wanted.size() && wanted[next] <= t + 1e-9 * params.dt) {
            traj.snapshots.push_back({p, t});
            ++next;
        }
    };
    emit(0.0);
    const std::size_t steps = step_count(params.T, params.dt);
    const std::size_t L = p.size();
    for (std::size_t k = 1; k <= steps && next < wanted.size(); ++k) {
        for (auto& z : noise) z = normal(rng);
        em_step(rates, env.sizes(), p, params, noise, scratch);
        if (!rates.ring() && (std::abs(p[0] - p0[0]) > 1e-6 || std::abs(p[L - 1] - p0[L - 1]) > 1e-6))
            traj.boundary_touched = true;
        emit(static_cast<double>(k) * params.dt);
    }
    return traj;
}

std::vector<std::vector<double>> forward_replicates(const Environment& env, const std::vector<double>& p0,
                                                    const SdeParams& params, std::uint64_t master,
                                                    std::string_view tag, std::size_t replicates,
                                                    std::size_t workers) {
    params.validate(env.K());
    std::vector<std::vector<double>> out(replicates);
    const double T = static_cast<double>(step_count(params.T, params.dt)) * params.dt;
    parallel_for(replicates, workers, [&](std::size_t r) {
        Trajectory tr = simulate_forward(env, p0, params, derive_seed(master, tag, r), {T});
        out[r] = std::move(tr.snapshots.back().p);
    });
    return out;
}

RefinementPair simulate_refinement_pair(const Environment& env, const std::vector<double>& p0, const SdeParams& params,
                                        std::uint64_t seed) {
    params.validate(env.K());
    const JumpTable rates(env, params.migration());
    SdeParams fine = params;
    fine.dt = 0.5 * params.dt;
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    const std::size_t L = p0.size();
    std::vector<double> pc = p0, pf = p0, z1(L), z2(L), zc(L), scratch;
    const std::size_t steps = step_count(params.T, params.dt);
    for (std::size_t k = 0; k < steps; ++k) {
        for (auto& z : z1) z = normal(rng);
        for (auto& z : z2) z = normal(rng);
        for (std::size_t x = 0; x < L; ++x) zc[x] = (z1[x] + z2[x]) / std::numbers::sqrt2;
        em_step(rates, env.sizes(), pf, fine, z1, scratch);
        em_step(rates, env.sizes(), pf, fine, z2, scratch);
        em_step(rates, env.sizes(), pc, params, zc, scratch);
    }
    return {std::move(pc), std::move(pf)};
}

double pairing(const std::vector<double>& p, double n, const std::function<double(double)>& phi, double support_lo,
               double support_hi, double origin) {
    const double root = std::sqrt(n);
    const double lo = origin + root * support_lo, hi = origin + root * support_hi;
    if (lo < 0.0 || hi > static_cast<double>(p.size()) - 1.0)
        throw OutOfWindowError("test-function support exceeds the window");
    double s = 0.0;
    const auto first = static_cast<std::size_t>(std::ceil(lo));
    const auto last = static_cast<std::size_t>(std::floor(hi));
    for (std::size_t x = first; x <= last; ++x) s += p[x] * phi((static_cast<double>(x) - origin) / root);
    return s / root;
}

double holder_modulus(const std::vector<FrequencyField>& snapshots, double beta, double n) {
    if (!(beta > 0.0 && beta < 2.0 / 15.0)) throw PreconditionError("Hoelder exponent must lie in (0, 2/15)");
    const double scale = std::pow(n, 0.5 * beta);
    double best = 0.0;
    std::vector<double> denom;
    for (const auto& f : snapshots) {
        const std::size_t L = f.p.size();
        if (denom.size() < L) {
            denom.assign(L, 0.0);
            for (std::size_t d = 1; d < L; ++d) denom[d] = std::pow(static_cast<double>(d), -beta);
        }
        for (std::size_t x = 0; x < L; ++x)
            for (std::size_t y = x + 1; y < L; ++y)
                best = std::max(best, std::abs(f.p[x] - f.p[y]) * denom[y - x]);
    }
    return scale * best;
}

}  // namespace ssre
