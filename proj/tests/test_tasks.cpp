#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "scgp/tasks.hpp"

#include "support/toys.hpp"

using namespace scgp;

namespace {

// One small trained model per task, shared across test cases.
const TrainResult& cached_model(Task task) {
    static std::map<Task, TrainResult> cache;
    auto it = cache.find(task);
    if (it == cache.end()) {
        const auto subs = toys::tiny_subsampled(60, 19);
        TrainConfig cfg;
        cfg.m_inducing = 25;
        cfg.iterations = 120;
        cfg.minibatch_size = 256;
        cfg.seed = 3;
        it = cache.emplace(task, train_task(subs, task, cfg)).first;
    }
    return it->second;
}

Conditioning cond_for(Task task, const MaterialSample& mat) {
    Conditioning c;
    if (task != Task::I) {
        c.c = mat.c;
        c.m = mat.m;
    }
    if (task == Task::III) c.alpha0 = mat.alpha0;
    return c;
}

}  // namespace

TEST_CASE("nmse: calibration anchors and hand-computed case") {
    Eigen::VectorXd y(4);
    y << 10.0, 12.0, 14.0, 20.0;
    CHECK(nmse(y, y) == 0.0);

    const Eigen::VectorXd mean_pred = Eigen::VectorXd::Constant(4, y.mean());
    CHECK(nmse(y, mean_pred) == Catch::Approx(100.0).margin(1e-10));

    Eigen::VectorXd y2(2), yhat2(2);
    y2 << 0.0, 2.0;
    yhat2 << 1.0, 1.0;
    CHECK(nmse(y2, yhat2) == Catch::Approx(100.0).margin(1e-10));

    const Eigen::VectorXd constant = Eigen::VectorXd::Constant(4, 3.0);
    CHECK_THROWS_AS(nmse(constant, y), std::invalid_argument);  // zero target variance
    Eigen::VectorXd shorter(2);
    shorter << 1.0, 2.0;
    CHECK_THROWS_AS(nmse(y, shorter), std::invalid_argument);
}

TEST_CASE("trajectory_loglik: exact on-mean maximum and 10-sigma penalty") {
    const auto& tr = cached_model(Task::I);
    const auto subs = toys::tiny_subsampled(3, 23);

    SubsampledTrajectory traj = subs[0];
    const auto pred = predict(tr.model, trajectory_inputs(traj, Task::I));

    double max_loglik = 0.0;
    for (Eigen::Index i = 0; i < pred.mean.size(); ++i) {
        traj.lengths[static_cast<std::size_t>(i)] = pred.mean(i);
        max_loglik += -0.5 * std::log(2.0 * std::numbers::pi * pred.observed_variance(i));
    }
    CHECK(trajectory_loglik(tr.model, traj) == Catch::Approx(max_loglik).epsilon(1e-12));

    // shifting every observation by 10 predictive stds costs 50 nats per point
    SubsampledTrajectory shifted = traj;
    for (Eigen::Index i = 0; i < pred.mean.size(); ++i)
        shifted.lengths[static_cast<std::size_t>(i)] =
            pred.mean(i) + 10.0 * std::sqrt(pred.observed_variance(i));
    const double drop = max_loglik - trajectory_loglik(tr.model, shifted);
    CHECK(drop == Catch::Approx(50.0 * static_cast<double>(pred.mean.size())).epsilon(1e-9));
}

TEST_CASE("prior_at: purity, conditioning contract, no hidden variance inflation") {
    const auto& tr1 = cached_model(Task::I);
    const auto& tr3 = cached_model(Task::III);

    const auto p1 = prior_at(tr1.model, 1.5);
    const auto p2 = prior_at(tr1.model, 1.5);
    CHECK(p1.mean_mm == p2.mean_mm);
    CHECK(p1.std_mm == p2.std_mm);
    CHECK(p1.std_mm > 0.0);

    // task I takes no conditioning; extra variables are an error
    Conditioning extra;
    extra.c = 1e-13;
    extra.m = 3.0;
    CHECK_THROWS_AS(prior_at(tr1.model, 1.5, extra), std::invalid_argument);

    // task III needs all three; missing alpha0 is an error
    CHECK_THROWS_AS(prior_at(tr3.model, 1.5, extra), std::invalid_argument);

    const auto subs = toys::tiny_subsampled(2, 27);
    const auto cond = cond_for(Task::III, subs[0].material);
    const auto p3 = prior_at(tr3.model, 1.5, cond);

    Eigen::MatrixXd q(1, 4);
    q << 1.5, subs[0].material.c, subs[0].material.m, subs[0].material.alpha0;
    const auto pred = predict(tr3.model, q);
    CHECK(p3.std_mm * p3.std_mm == Catch::Approx(pred.observed_variance(0)).epsilon(1e-12));
    CHECK(p3.mean_mm == pred.mean(0));
}

TEST_CASE("prior_at: task I model accepts 1-D queries only") {
    const auto& tr = cached_model(Task::I);
    Eigen::MatrixXd bad(1, 3);
    bad.setZero();
    CHECK_THROWS_AS(predict(tr.model, bad), std::invalid_argument);
}

TEST_CASE("evaluate: pseudo-data at predictive means scores zero NMSE") {
    const auto& tr = cached_model(Task::I);
    auto subs = toys::tiny_subsampled(10, 29);
    for (auto& traj : subs) {
        const auto pred = predict(tr.model, trajectory_inputs(traj, Task::I));
        for (std::size_t k = 0; k < traj.lengths.size(); ++k)
            traj.lengths[k] = pred.mean(static_cast<Eigen::Index>(k));
    }
    const auto report = evaluate(tr.model, subs);
    CHECK(report.nmse == Catch::Approx(0.0).margin(1e-18));
    CHECK(report.per_trajectory_loglik.size() == subs.size());
}

TEST_CASE("evaluate: report covers every test trajectory and is sorted by id") {
    const auto& tr = cached_model(Task::II);
    const auto subs = toys::tiny_subsampled(15, 31);
    const auto report = evaluate(tr.model, subs);
    REQUIRE(report.per_trajectory_loglik.size() == 15);
    for (std::size_t i = 1; i < report.per_trajectory_loglik.size(); ++i)
        CHECK(report.per_trajectory_loglik[i].first > report.per_trajectory_loglik[i - 1].first);
    CHECK(std::isfinite(report.mean_loglik));
    CHECK(report.nmse >= 0.0);
}

TEST_CASE("evaluate: variance diagnostic compares predicted and empirical spread per grid time") {
    const auto& tr = cached_model(Task::I);
    const auto subs = toys::tiny_subsampled(30, 33);
    const auto report = evaluate(tr.model, subs);

    const auto& diag = report.variance_diagnostic;
    REQUIRE(!diag.grid_times.empty());
    REQUIRE(diag.predicted_variance.size() == diag.grid_times.size());
    REQUIRE(diag.empirical_variance.size() == diag.grid_times.size());
    REQUIRE(diag.counts.size() == diag.grid_times.size());
    CHECK(diag.grid_times.front() == 0.0);
    for (std::size_t k = 0; k < diag.grid_times.size(); ++k) {
        CHECK(diag.predicted_variance[k] > 0.0);
        CHECK(diag.empirical_variance[k] >= 0.0);
        CHECK(diag.counts[k] >= 2);
    }
}

TEST_CASE("prediction_band: covers the grid, mean centered, ordered bounds") {
    const auto& tr = cached_model(Task::I);
    const auto rows = prediction_band(tr.model, {}, 0.0, 3.0, 25);
    REQUIRE(rows.size() == 25);
    CHECK(rows.front().t_years == 0.0);
    CHECK(rows.back().t_years == 3.0);
    for (const auto& r : rows) {
        CHECK(r.lo95_mm < r.mean_mm);
        CHECK(r.mean_mm < r.hi95_mm);
        const auto p = prior_at(tr.model, r.t_years);
        CHECK(r.hi95_mm - r.mean_mm == Catch::Approx(1.959964 * p.std_mm).epsilon(1e-12));
    }
    CHECK_THROWS_AS(prediction_band(tr.model, {}, 0.0, 3.0, 0), std::invalid_argument);
}

TEST_CASE("train_task: identical seeds, input columns differ by task only") {
    const auto subs = toys::tiny_subsampled(20, 37);
    TrainConfig cfg;
    cfg.m_inducing = 10;
    cfg.iterations = 15;
    cfg.minibatch_size = 128;
    cfg.seed = 11;
    const auto r2 = train_task(subs, Task::II, cfg);
    const auto r3 = train_task(subs, Task::III, cfg);
    CHECK(r2.model.variational.z.cols() == 3);
    CHECK(r3.model.variational.z.cols() == 4);
    CHECK_THROWS_AS(train_task({}, Task::I, cfg), std::invalid_argument);
}
