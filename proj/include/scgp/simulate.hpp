#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

#include "scgp/errors.hpp"
#include "scgp/rng.hpp"
#include "scgp/sim_config.hpp"

namespace scgp {

// One Monte Carlo draw of the crack growth model parameters.
struct MaterialSample {
    double c;       // Paris coefficient, (mm/cycle)/(MPa*sqrt(mm))^m
    double m;       // Paris exponent
    double alpha0;  // crack length at detection, mm
};

struct SeaState {
    double hs;        // m
    double tz;        // s
    double duration;  // hours
};

struct LoadPair {
    double delta_s;  // stress range, MPa
    double n_avg;    // cycles per hour
};

// One realization of the stochastic crack growth process. Times are years
// since detection; lengths are mm. Variable length: growth stops at the
// horizon or at alpha_cr, whichever comes first.
struct Trajectory {
    std::int64_t id = 0;
    MaterialSample material{};
    std::vector<double> times;
    std::vector<double> lengths;
    bool truncated_at_critical = false;
};

struct Ensemble {
    std::vector<Trajectory> trajectories;
    int overflow_warnings = 0;  // trajectories cut short by non-finite growth
};

// Per-substep evaluation record; lets tests replay increments at matched
// crack lengths (e.g. the C-scaling property).
struct StepRecord {
    double alpha;      // crack length the increment was evaluated at, mm
    double delta_s;    // MPa
    double cycles;     // cycles covered by this substep
    double increment;  // resulting da, mm
};

inline MaterialSample sample_material(Rng& rng, const SimConfig& cfg) {
    MaterialSample s;
    s.c = std::exp(draw_normal(rng, cfg.mu_ln_c, cfg.sigma_ln_c));
    s.m = draw_normal(rng, cfg.mu_m, cfg.sigma_m);
    // Gaussian alpha0 truncated to (0, alpha_cr); at realistic sigma the
    // rejection probability is negligible.
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const double a0 = draw_normal(rng, cfg.mu_alpha0, cfg.sigma_alpha0);
        if (a0 > 0.0 && a0 < cfg.alpha_cr) {
            s.alpha0 = a0;
            return s;
        }
    }
    throw config_error("alpha0 rejection sampling failed 1000 times; check mu/sigma vs alpha_cr");
}

inline SeaState sample_sea_state(Rng& rng, const SimConfig& cfg) {
    SeaState state{};
    const double u = draw_uniform(rng, 0.0, 1.0);
    double cum = 0.0;
    state.hs = cfg.scatter.back().hs;
    state.tz = cfg.scatter.back().tz;
    for (const auto& cell : cfg.scatter) {
        cum += cell.probability;
        if (u < cum) {
            state.hs = cell.hs;
            state.tz = cell.tz;
            break;
        }
    }
    state.duration = draw_uniform(rng, cfg.duration_min_hours, cfg.duration_max_hours);
    return state;
}

// Linear hydrodynamic transfer: dS = kappa * Hs, N_avg = one cycle per Tz.
inline LoadPair sea_state_to_load(const SeaState& state, const SimConfig& cfg) {
    return {cfg.kappa * state.hs, 3600.0 / state.tz};
}

// Stress intensity factor range for a center crack in a plate.
inline double delta_k(double a, double delta_s, const SimConfig& cfg) {
    if (a < 0.0) throw std::domain_error("delta_k: negative crack length");
    return cfg.geometry_factor * delta_s * std::sqrt(std::numbers::pi * a);
}

// Cycle-domain Euler increment over `cycles` cycles at entry length `a`.
inline double sea_state_increment(double a, double delta_s, double cycles, double c, double m,
                                  const SimConfig& cfg) {
    return c * std::pow(delta_k(a, delta_s, cfg), m) * cycles;
}

// Supplies the next sea state; either a live RNG draw or a recorded replay.
using SeaStateSource = std::function<SeaState()>;

inline SeaStateSource drawing_source(Rng& rng, const SimConfig& cfg) {
    return [&rng, &cfg] { return sample_sea_state(rng, cfg); };
}

namespace detail {

// Advances the crack across one sea state. The Euler step is split into
// equal substeps (doubling) until each substep obeys da <= frac * a, with a
// hard cap to guarantee termination on runaway growth. Returns false on
// non-finite growth.
inline bool advance_sea_state(double& alpha, double delta_s, double total_cycles,
                              const MaterialSample& mat, const SimConfig& cfg,
                              std::vector<StepRecord>* trace) {
    constexpr int max_splits = 20;
    for (int split = 0;; ++split) {
        double a = alpha;
        const int n_sub = 1 << split;
        const double cycles = total_cycles / n_sub;
        bool redo = false;
        std::size_t trace_mark = trace ? trace->size() : 0;
        for (int i = 0; i < n_sub; ++i) {
            const double inc = sea_state_increment(a, delta_s, cycles, mat.c, mat.m, cfg);
            if (!std::isfinite(inc) || !std::isfinite(a + inc)) {
                if (trace) trace->resize(trace_mark);
                return false;
            }
            if (inc > cfg.max_step_fraction * a && split < max_splits) {
                redo = true;
                break;
            }
            if (trace) trace->push_back({a, delta_s, cycles, inc});
            a += inc;
            if (a >= cfg.alpha_cr) break;  // will be clamped by the caller
        }
        if (!redo) {
            alpha = a;
            return true;
        }
        if (trace) trace->resize(trace_mark);
    }
}

}  // namespace detail

// Integrates the Paris-Erdogan law across a sequence of sea states. Records
// (time, length) after every sea state; stops at the horizon (final state
// clipped so the last time lands exactly on it) or when the crack reaches
// alpha_cr (final length clamped there).
inline Trajectory propagate_over(const MaterialSample& mat, const SeaStateSource& next_state,
                                 const SimConfig& cfg, int* overflow_warnings = nullptr,
                                 std::vector<StepRecord>* trace = nullptr) {
    if (!(mat.c >= 0.0) || !(mat.alpha0 > 0.0) || mat.alpha0 >= cfg.alpha_cr || !std::isfinite(mat.m))
        throw std::invalid_argument("propagate: invalid material sample");

    Trajectory traj;
    traj.material = mat;
    traj.times.push_back(0.0);
    traj.lengths.push_back(mat.alpha0);

    const double horizon = cfg.horizon_hours();
    double t_hours = 0.0;
    double alpha = mat.alpha0;

    while (true) {
        const SeaState state = next_state();
        const bool clipped = t_hours + state.duration >= horizon;
        const double hours = clipped ? horizon - t_hours : state.duration;
        const LoadPair load = sea_state_to_load(state, cfg);
        const double cycles = load.n_avg * hours;

        if (!detail::advance_sea_state(alpha, load.delta_s, cycles, mat, cfg, trace)) {
            // Overflow of dK^m; keep the last finite point and flag the cut.
            traj.truncated_at_critical = true;
            if (overflow_warnings) ++(*overflow_warnings);
            return traj;
        }
        t_hours = clipped ? horizon : t_hours + hours;

        if (alpha >= cfg.alpha_cr) {
            traj.times.push_back(t_hours / hours_per_year);
            traj.lengths.push_back(cfg.alpha_cr);
            traj.truncated_at_critical = true;
            return traj;
        }
        traj.times.push_back(t_hours / hours_per_year);
        traj.lengths.push_back(alpha);
        if (clipped) return traj;
    }
}

inline Trajectory propagate(const MaterialSample& mat, Rng& rng, const SimConfig& cfg,
                            int* overflow_warnings = nullptr) {
    return propagate_over(mat, drawing_source(rng, cfg), cfg, overflow_warnings);
}

// n_trajectories independent trajectories, one RNG substream per id, so the
// result is identical no matter how the loop is executed.
inline Ensemble generate_ensemble(const SimConfig& cfg) {
    validate(cfg);
    Ensemble ens;
    ens.trajectories.resize(static_cast<std::size_t>(cfg.n_trajectories));
    for (int id = 0; id < cfg.n_trajectories; ++id) {
        Rng rng = make_stream(cfg.seed, static_cast<std::uint64_t>(id));
        const MaterialSample mat = sample_material(rng, cfg);
        Trajectory traj = propagate(mat, rng, cfg, &ens.overflow_warnings);
        traj.id = id;
        ens.trajectories[static_cast<std::size_t>(id)] = std::move(traj);
    }
    return ens;
}

}  // namespace scgp
