#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "scgp/dataset.hpp"
#include "scgp/svgp.hpp"
#include "scgp/svgp_train.hpp"

namespace scgp {

// Crack growth model variables a prior can be conditioned on. Which ones are
// required is dictated by the model's task.
struct Conditioning {
    std::optional<double> c;
    std::optional<double> m;
    std::optional<double> alpha0;
};

// The artifact's end product: a Gaussian over crack length at a query input.
struct GaussianPrior {
    double mean_mm = 0.0;
    double std_mm = 0.0;
    double t_years = 0.0;
    Conditioning conditioning;
};

// Predicted vs. observed spread of the test targets per grid time; exposes
// the early-time variance depletion of the time-only parametrization.
struct VarianceDiagnostic {
    std::vector<double> grid_times;
    std::vector<double> predicted_variance;  // mean observation-space predictive variance
    std::vector<double> empirical_variance;  // population variance of test targets
    std::vector<int> counts;
};

struct EvalReport {
    Task task = Task::I;
    double nmse = 0.0;
    std::vector<std::pair<std::int64_t, double>> per_trajectory_loglik;  // sorted by id
    double mean_loglik = 0.0;
    VarianceDiagnostic variance_diagnostic;
};

inline TrainResult train_task(const std::vector<SubsampledTrajectory>& train_trajs, Task task,
                              const TrainConfig& cfg) {
    if (train_trajs.empty()) throw std::invalid_argument("train_task: no training trajectories");
    return train(build_dataset(train_trajs, task), cfg);
}

namespace detail {

inline Eigen::RowVectorXd conditioning_row(Task task, double t, const Conditioning& cond) {
    const bool needs_cm = task != Task::I;
    const bool needs_a0 = task == Task::III;
    if (cond.c.has_value() != needs_cm || cond.m.has_value() != needs_cm ||
        cond.alpha0.has_value() != needs_a0) {
        throw std::invalid_argument("conditioning variables do not match task " + task_name(task) +
                                    " (task I: none; II: c, m; III: c, m, alpha0)");
    }
    Eigen::RowVectorXd row(task_dim(task));
    row(0) = t;
    if (needs_cm) {
        row(1) = *cond.c;
        row(2) = *cond.m;
    }
    if (needs_a0) row(3) = *cond.alpha0;
    return row;
}

}  // namespace detail

// Observation-space Gaussian prior over crack length at time t, conditioned
// on exactly the variables the model's task requires.
inline GaussianPrior prior_at(const SvgpModel& model, double t, const Conditioning& cond = {}) {
    Eigen::MatrixXd query(1, task_dim(model.task));
    query.row(0) = detail::conditioning_row(model.task, t, cond);
    const SparsePrediction pred = predict(model, query);
    GaussianPrior prior;
    prior.mean_mm = pred.mean(0);
    prior.std_mm = std::sqrt(pred.observed_variance(0));
    prior.t_years = t;
    prior.conditioning = cond;
    return prior;
}

// Score scaled so 0 is a perfect fit and a constant mean predictor scores 100.
inline double nmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
    if (y_true.size() != y_pred.size() || y_true.size() == 0)
        throw std::invalid_argument("nmse: length mismatch or empty");
    const double n = static_cast<double>(y_true.size());
    const double mean = y_true.mean();
    const double var = (y_true.array() - mean).square().sum() / n;
    if (!(var > 0.0)) throw std::invalid_argument("nmse: zero target variance");
    return 100.0 / (n * var) * (y_true - y_pred).squaredNorm();
}

inline Eigen::MatrixXd trajectory_inputs(const SubsampledTrajectory& traj, Task task) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(traj.grid_times.size()), task_dim(task));
    for (std::size_t k = 0; k < traj.grid_times.size(); ++k)
        x.row(static_cast<Eigen::Index>(k)) = task_input_row(task, traj.grid_times[k], traj.material);
    return x;
}

// Independent-Gaussian log score of the observed crack lengths under the
// model's observation-space predictive marginals.
inline double trajectory_loglik(const SvgpModel& model, const SubsampledTrajectory& traj) {
    const SparsePrediction pred = predict(model, trajectory_inputs(traj, model.task));
    double loglik = 0.0;
    for (std::size_t k = 0; k < traj.lengths.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const double v = pred.observed_variance(i);
        const double e = traj.lengths[k] - pred.mean(i);
        loglik += -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * e * e / v;
    }
    return loglik;
}

inline EvalReport evaluate(const SvgpModel& model, const std::vector<SubsampledTrajectory>& test_trajs) {
    if (test_trajs.empty()) throw std::invalid_argument("evaluate: empty test set");

    EvalReport report;
    report.task = model.task;

    std::vector<double> y_true, y_pred;
    // grid index -> (targets, predicted observation variances)
    std::map<int, std::pair<std::vector<double>, std::vector<double>>> per_grid;

    double loglik_sum = 0.0;
    for (const auto& traj : test_trajs) {
        const SparsePrediction pred = predict(model, trajectory_inputs(traj, model.task));
        double loglik = 0.0;
        for (std::size_t k = 0; k < traj.lengths.size(); ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            const double v = pred.observed_variance(i);
            const double e = traj.lengths[k] - pred.mean(i);
            loglik += -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * e * e / v;
            y_true.push_back(traj.lengths[k]);
            y_pred.push_back(pred.mean(i));
            const int grid_idx = static_cast<int>(std::lround(traj.grid_times[k] * 6.0));
            auto& bucket = per_grid[grid_idx];
            bucket.first.push_back(traj.lengths[k]);
            bucket.second.push_back(v);
        }
        report.per_trajectory_loglik.emplace_back(traj.id, loglik);
        loglik_sum += loglik;
    }
    std::sort(report.per_trajectory_loglik.begin(), report.per_trajectory_loglik.end());
    report.mean_loglik = loglik_sum / static_cast<double>(test_trajs.size());

    const Eigen::Map<const Eigen::VectorXd> yt(y_true.data(), static_cast<Eigen::Index>(y_true.size()));
    const Eigen::Map<const Eigen::VectorXd> yp(y_pred.data(), static_cast<Eigen::Index>(y_pred.size()));
    report.nmse = nmse(yt, yp);

    for (const auto& [grid_idx, bucket] : per_grid) {
        const auto& [targets, pred_vars] = bucket;
        if (targets.size() < 2) continue;
        const double n = static_cast<double>(targets.size());
        double mean = 0.0, pv = 0.0;
        for (double v : targets) mean += v;
        mean /= n;
        double ev = 0.0;
        for (double v : targets) ev += (v - mean) * (v - mean);
        for (double v : pred_vars) pv += v;
        report.variance_diagnostic.grid_times.push_back(static_cast<double>(grid_idx) / 6.0);
        report.variance_diagnostic.predicted_variance.push_back(pv / n);
        report.variance_diagnostic.empirical_variance.push_back(ev / n);
        report.variance_diagnostic.counts.push_back(static_cast<int>(targets.size()));
    }
    return report;
}

struct BandRow {
    double t_years;
    double mean_mm;
    double lo95_mm;
    double hi95_mm;
};

// 95% band of the observation-space predictive process over a uniform grid.
inline std::vector<BandRow> prediction_band(const SvgpModel& model, const Conditioning& cond,
                                            double t_min, double t_max, int n_grid) {
    if (n_grid < 1) throw std::invalid_argument("prediction_band: grid size must be >= 1");
    if (!(t_max >= t_min)) throw std::invalid_argument("prediction_band: need t_max >= t_min");
    constexpr double z95 = 1.959964;
    std::vector<BandRow> rows;
    rows.reserve(static_cast<std::size_t>(n_grid));
    for (int i = 0; i < n_grid; ++i) {
        const double t =
            n_grid == 1 ? t_min : t_min + (t_max - t_min) * static_cast<double>(i) / (n_grid - 1);
        const GaussianPrior p = prior_at(model, t, cond);
        rows.push_back({t, p.mean_mm, p.mean_mm - z95 * p.std_mm, p.mean_mm + z95 * p.std_mm});
    }
    return rows;
}

}  // namespace scgp
