#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "scgp/rng.hpp"
#include "scgp/simulate.hpp"

namespace scgp {

// The three monitoring parametrizations: inputs [t], [t, C, m], [t, C, m, alpha0].
enum class Task { I, II, III };

inline int task_dim(Task t) {
    switch (t) {
        case Task::I: return 1;
        case Task::II: return 3;
        case Task::III: return 4;
    }
    throw std::invalid_argument("unknown task");
}

inline std::string task_name(Task t) {
    switch (t) {
        case Task::I: return "I";
        case Task::II: return "II";
        case Task::III: return "III";
    }
    throw std::invalid_argument("unknown task");
}

inline Task task_from_name(const std::string& s) {
    if (s == "I") return Task::I;
    if (s == "II") return Task::II;
    if (s == "III") return Task::III;
    throw std::invalid_argument("unknown task '" + s + "' (expected I, II or III)");
}

constexpr double bimonthly_step_years = 1.0 / 6.0;

// A trajectory reduced to the common bimonthly grid. Grid length varies per
// trajectory: points stop at the last grid time the raw trajectory covers.
struct SubsampledTrajectory {
    std::int64_t id = 0;
    MaterialSample material{};
    std::vector<double> grid_times;
    std::vector<double> lengths;
    bool truncated_at_critical = false;
};

// Point-wise regression data for one task; rows keep their source trajectory.
struct RegressionDataset {
    Task task = Task::I;
    Eigen::MatrixXd inputs;   // n x task_dim
    Eigen::VectorXd targets;  // crack lengths, mm
    std::vector<std::int64_t> traj_ids;
};

// Empirical mean and central 95% band of the process per grid time, over the
// trajectories still alive there. Grid times with fewer than 2 survivors are
// omitted.
struct ProcessStats {
    std::vector<double> grid_times;
    std::vector<double> mean;
    std::vector<double> lower95;
    std::vector<double> upper95;
    std::vector<int> counts;
};

// Predecessor (zero-order-hold) sampling: crack length is a physical state,
// so the value at a grid time is the last recorded point at or before it.
inline SubsampledTrajectory subsample(const Trajectory& traj) {
    if (traj.times.empty() || traj.times.front() != 0.0)
        throw std::invalid_argument("subsample: trajectory must start at t = 0");
    SubsampledTrajectory out;
    out.id = traj.id;
    out.material = traj.material;
    out.truncated_at_critical = traj.truncated_at_critical;

    const double t_last = traj.times.back();
    const int n_grid = static_cast<int>(std::floor((t_last + 1e-9) / bimonthly_step_years)) + 1;
    out.grid_times.reserve(n_grid);
    out.lengths.reserve(n_grid);
    std::size_t i = 0;
    for (int k = 0; k < n_grid; ++k) {
        const double g = k / 6.0;
        while (i + 1 < traj.times.size() && traj.times[i + 1] <= g + 1e-12) ++i;
        out.grid_times.push_back(g);
        out.lengths.push_back(traj.lengths[i]);
    }
    return out;
}

inline std::vector<SubsampledTrajectory> subsample_all(const std::vector<Trajectory>& trajs) {
    std::vector<SubsampledTrajectory> out;
    out.reserve(trajs.size());
    for (const auto& t : trajs) out.push_back(subsample(t));
    return out;
}

namespace detail {

// Linear interpolation between order statistics (the common "type 7" rule).
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

inline ProcessStats empirical_stats(const std::vector<SubsampledTrajectory>& trajs) {
    if (trajs.empty()) throw std::invalid_argument("empirical_stats: empty ensemble");
    std::size_t max_len = 0;
    for (const auto& t : trajs) max_len = std::max(max_len, t.grid_times.size());

    ProcessStats stats;
    std::vector<double> alive;
    for (std::size_t k = 0; k < max_len; ++k) {
        alive.clear();
        for (const auto& t : trajs) {
            if (k < t.lengths.size()) alive.push_back(t.lengths[k]);
        }
        if (alive.size() < 2) continue;
        std::sort(alive.begin(), alive.end());
        double sum = 0.0;
        for (double v : alive) sum += v;
        stats.grid_times.push_back(static_cast<double>(k) / 6.0);
        stats.mean.push_back(sum / static_cast<double>(alive.size()));
        stats.lower95.push_back(detail::percentile_sorted(alive, 0.025));
        stats.upper95.push_back(detail::percentile_sorted(alive, 0.975));
        stats.counts.push_back(static_cast<int>(alive.size()));
    }
    return stats;
}

// Trajectory-level holdout: whole trajectories are assigned to one side, so
// train and test never share points from the same realization.
inline std::pair<std::vector<SubsampledTrajectory>, std::vector<SubsampledTrajectory>> holdout_split(
    const std::vector<SubsampledTrajectory>& trajs, double fraction, Rng& rng) {
    if (trajs.size() < 2) throw std::invalid_argument("holdout_split: need at least 2 trajectories");
    if (!(fraction > 0.0) || !(fraction < 1.0))
        throw std::invalid_argument("holdout_split: fraction must be in (0, 1)");

    std::vector<std::size_t> idx(trajs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    shuffle(idx, rng);

    std::size_t n_train = static_cast<std::size_t>(std::floor(static_cast<double>(trajs.size()) * fraction));
    n_train = std::clamp<std::size_t>(n_train, 1, trajs.size() - 1);

    std::pair<std::vector<SubsampledTrajectory>, std::vector<SubsampledTrajectory>> out;
    out.first.reserve(n_train);
    out.second.reserve(trajs.size() - n_train);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        (i < n_train ? out.first : out.second).push_back(trajs[idx[i]]);
    }
    return out;
}

inline Eigen::RowVectorXd task_input_row(Task task, double t, const MaterialSample& mat) {
    Eigen::RowVectorXd row(task_dim(task));
    row(0) = t;
    if (task != Task::I) {
        row(1) = mat.c;
        row(2) = mat.m;
    }
    if (task == Task::III) row(3) = mat.alpha0;
    return row;
}

// Flattens every grid point of every trajectory into one regression row.
inline RegressionDataset build_dataset(const std::vector<SubsampledTrajectory>& trajs, Task task) {
    std::size_t n = 0;
    for (const auto& t : trajs) n += t.grid_times.size();

    RegressionDataset ds;
    ds.task = task;
    ds.inputs.resize(static_cast<Eigen::Index>(n), task_dim(task));
    ds.targets.resize(static_cast<Eigen::Index>(n));
    ds.traj_ids.reserve(n);

    Eigen::Index row = 0;
    for (const auto& t : trajs) {
        for (std::size_t k = 0; k < t.grid_times.size(); ++k) {
            ds.inputs.row(row) = task_input_row(task, t.grid_times[k], t.material);
            ds.targets(row) = t.lengths[k];
            ds.traj_ids.push_back(t.id);
            ++row;
        }
    }
    return ds;
}

}  // namespace scgp
