// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier pilot artifacts (ensembles, trained surrogates) are built
// once and shared by the criteria that need them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scgp/dataset.hpp"
#include "scgp/gp_exact.hpp"
#include "scgp/pipeline.hpp"
#include "scgp/simulate.hpp"
#include "scgp/svgp.hpp"
#include "scgp/svgp_train.hpp"
#include "scgp/tasks.hpp"

namespace fs = std::filesystem;
using namespace scgp;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::MatrixXd random_inputs(int n, int d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = unif(rng);
    return x;
}

Eigen::VectorXd random_targets(const Eigen::MatrixXd& x, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 0.2);
    Eigen::VectorXd y(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        y(i) = std::sin(1.3 * x.row(i).sum()) + 0.4 * x.row(i).sum() + noise(rng);
    return y;
}

SvgpModel random_state(const RegressionDataset& ds, int m, unsigned seed) {
    TrainConfig cfg;
    cfg.m_inducing = m;
    cfg.iterations = 0;
    cfg.seed = seed;
    SvgpModel model = init_model(ds, cfg);
    std::mt19937_64 rng(seed * 7919 + 13);
    std::uniform_real_distribution<double> small(-0.5, 0.5);
    model.kernel.log_amplitude = small(rng);
    model.kernel.log_lengthscales.array() += small(rng);
    model.noise.log_sigma2 = std::log(0.05) + small(rng);
    for (Eigen::Index i = 0; i < model.variational.m_u.size(); ++i) {
        model.variational.m_u(i) = small(rng);
        model.variational.log_s_u(i) = -0.3 + 0.4 * small(rng);
    }
    return model;
}

struct PilotArtifacts {
    std::vector<SubsampledTrajectory> train_set;
    std::vector<SubsampledTrajectory> test_set;
    std::map<Task, TrainResult> models;
    std::map<Task, EvalReport> reports;
    double build_seconds = 0.0;
};

// Seeded 2000-trajectory pilot with the three task surrogates, built on
// demand and reused by criteria 7 and 9.
const PilotArtifacts& pilot() {
    static PilotArtifacts art;
    static bool built = false;
    if (built) return art;
    const auto t0 = std::chrono::steady_clock::now();

    SimConfig cfg = load_sim_config(std::string(SCGP_REPO_DIR) + "/configs/sim_default.json");
    cfg.n_trajectories = 2000;
    const Ensemble ens = generate_ensemble(cfg);
    const auto subs = subsample_all(ens.trajectories);
    Rng split_rng = make_stream(cfg.seed, 99);
    auto [train_set, test_set] = holdout_split(subs, 0.5, split_rng);
    art.train_set = std::move(train_set);
    art.test_set = std::move(test_set);

    for (Task task : {Task::I, Task::II, Task::III}) {
        TrainConfig tc = default_train_config(task);
        tc.seed = cfg.seed;
        tc.learning_rate = 0.02;  // tuned on the pilot, same for all three tasks
        art.models.emplace(task, train_task(art.train_set, task, tc));
        art.reports.emplace(task, evaluate(art.models.at(task).model, art.test_set));
    }
    art.build_seconds = seconds_since(t0);
    built = true;
    return art;
}

bool criterion_elbo_bound(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> n_dist(30, 200), d_dist(1, 4);
    double worst_gap = -1e18;
    for (int inst = 0; inst < 20; ++inst) {
        const int n = n_dist(rng);
        const int d = d_dist(rng);
        const int m = std::min(n, 5 + static_cast<int>(rng() % 46));
        const Eigen::MatrixXd x = random_inputs(n, d, rng);
        const Eigen::VectorXd y = random_targets(x, rng);

        RegressionDataset ds;
        ds.task = Task::I;
        ds.inputs = x;
        ds.targets = y;
        ds.traj_ids.assign(static_cast<std::size_t>(n), 0);
        const SvgpModel model = random_state(ds, m, 500 + inst);

        const Eigen::MatrixXd x_std = model.input_stats.apply(x);
        const Eigen::VectorXd y_std = model.output_stats.apply(y);
        const double bound = elbo(model, x_std, y_std, n).value;
        const double exact = log_marginal(x_std, y_std, model.kernel, model.noise, /*jitter=*/0.0);
        worst_gap = std::max(worst_gap, bound - exact);
    }
    const double elapsed = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max(elbo - logml) = %.3e over 20 instances, %.1fs", worst_gap,
                  elapsed);
    detail = buf;
    return worst_gap <= 1e-8 && elapsed < 30.0;
}

bool criterion_sparse_exact_equivalence(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(202);
    const int n = 40;
    const Eigen::MatrixXd x = random_inputs(n, 1, rng);
    const Eigen::VectorXd y = random_targets(x, rng);
    KernelParams kp;
    kp.log_amplitude = 0.1;
    kp.log_lengthscales = Eigen::VectorXd::Constant(1, -0.1);
    NoiseParams np;
    np.log_sigma2 = std::log(0.05);

    // q(u) from the exact posterior over u = f(x)
    const Eigen::MatrixXd k_nn = cov_matrix(x, x, kp);
    const Eigen::MatrixXd sys = k_nn + np.sigma2() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd sys_inv = sys.inverse();
    const Eigen::VectorXd m_star = k_nn * sys_inv * y;
    const Eigen::MatrixXd s_star = k_nn - k_nn * sys_inv * k_nn;

    const Eigen::MatrixXd xq = random_inputs(30, 1, rng);
    const auto sparse = sparse_predict_full_s(kp, np, x, m_star, s_star, xq, /*jitter=*/0.0);
    const auto exact = exact_posterior_predict(x, y, xq, kp, np, /*jitter=*/0.0);

    const double mean_gap = (sparse.mean - exact.mean).cwiseAbs().maxCoeff();
    const double var_gap = (sparse.latent_variance - exact.latent_variance).cwiseAbs().maxCoeff();
    const double elapsed = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "max |mean gap| = %.2e, max |var gap| = %.2e, %.1fs", mean_gap,
                  var_gap, elapsed);
    detail = buf;
    return mean_gap < 1e-6 && var_gap < 1e-6 && elapsed < 10.0;
}

bool criterion_gradient(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(303);
    double worst_rel = 0.0;
    const int dims[3] = {1, 3, 4};
    for (int inst = 0; inst < 10; ++inst) {
        const int d = dims[inst % 3];
        const int n = 24;
        const Eigen::MatrixXd x = random_inputs(n, d, rng);
        const Eigen::VectorXd y = random_targets(x, rng);
        RegressionDataset ds;
        ds.task = Task::I;
        ds.inputs = x;
        ds.targets = y;
        ds.traj_ids.assign(static_cast<std::size_t>(n), 0);
        SvgpModel model = random_state(ds, 6, 800 + inst);
        if (inst % 2 == 1) {
            model.kernel.log_lengthscales =
                Eigen::VectorXd::Constant(d, model.kernel.log_lengthscales(0));
        }
        const Eigen::MatrixXd x_std = model.input_stats.apply(x);
        const Eigen::VectorXd y_std = model.output_stats.apply(y);

        const auto eg = elbo_with_grad(model, x_std, y_std, n);
        Eigen::VectorXd theta = pack_params(model);
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            const double step = 1e-5;
            SvgpModel mp = model;
            Eigen::VectorXd tp = theta;
            tp(i) = theta(i) + step;
            unpack_params(mp, tp);
            const double up = elbo(mp, x_std, y_std, n).value;
            tp(i) = theta(i) - step;
            unpack_params(mp, tp);
            const double down = elbo(mp, x_std, y_std, n).value;
            const double fd = (up - down) / (2.0 * step);
            const double rel = std::abs(eg.grad(i) - fd) / std::max(1e-6, std::abs(fd));
            worst_rel = std::max(worst_rel, rel);
        }
    }
    const double elapsed = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "worst relative error = %.2e over 10 instances, %.1fs",
                  worst_rel, elapsed);
    detail = buf;
    return worst_rel < 1e-4 && elapsed < 60.0;
}

bool criterion_nmse_anchors(std::string& detail) {
    Eigen::VectorXd y(5);
    y << 31.0, 28.5, 40.0, 55.2, 33.3;
    const double perfect = nmse(y, y);
    const Eigen::VectorXd mean_pred = Eigen::VectorXd::Constant(5, y.mean());
    const double mean_score = nmse(y, mean_pred);
    char buf[120];
    std::snprintf(buf, sizeof(buf), "perfect = %.1e, constant-mean = 100 %+.1e", perfect,
                  mean_score - 100.0);
    detail = buf;
    return perfect == 0.0 && std::abs(mean_score - 100.0) < 1e-10;
}

bool criterion_simulator_invariants(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const SimConfig cfg = load_sim_config(std::string(SCGP_REPO_DIR) + "/configs/sim_default.json");
    const Ensemble ens = generate_ensemble(cfg);

    std::size_t bad = 0;
    int truncated = 0;
    for (const auto& traj : ens.trajectories) {
        bool ok = traj.times.front() == 0.0 && traj.lengths.front() == traj.material.alpha0;
        for (std::size_t k = 1; k < traj.lengths.size() && ok; ++k) {
            ok = traj.lengths[k] >= traj.lengths[k - 1] && traj.times[k] > traj.times[k - 1];
        }
        ok = ok && traj.lengths.back() <= cfg.alpha_cr && traj.times.back() <= cfg.horizon_years;
        ok = ok && (traj.truncated_at_critical ? traj.lengths.back() == cfg.alpha_cr
                                               : traj.times.back() == cfg.horizon_years);
        if (!ok) ++bad;
        if (traj.truncated_at_critical) ++truncated;
    }

    // replayed C-doubling must double every recorded increment bitwise
    std::size_t scaling_violations = 0;
    for (std::uint64_t id = 0; id < 200; ++id) {
        Rng rng = make_stream(cfg.seed, id);
        const MaterialSample mat = sample_material(rng, cfg);
        std::vector<StepRecord> trace;
        int warn = 0;
        (void)propagate_over(mat, drawing_source(rng, cfg), cfg, &warn, &trace);
        for (const auto& rec : trace) {
            const double doubled =
                sea_state_increment(rec.alpha, rec.delta_s, rec.cycles, 2.0 * mat.c, mat.m, cfg);
            if (doubled != 2.0 * rec.increment) ++scaling_violations;
        }
    }
    const double elapsed = seconds_since(t0);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "%zu invariant violations in 10^4 trajectories (%d truncated), %zu scaling "
                  "violations, %.1fs",
                  bad, truncated, scaling_violations, elapsed);
    detail = buf;
    return bad == 0 && scaling_violations == 0 && truncated > 0 && elapsed < 60.0;
}

bool criterion_subsampling_fidelity(std::string& detail) {
    const SimConfig cfg = load_sim_config(std::string(SCGP_REPO_DIR) + "/configs/sim_default.json");
    const Ensemble ens = generate_ensemble(cfg);
    const auto stats = empirical_stats(subsample_all(ens.trajectories));

    // full-resolution oracle: linear interpolation of each raw trajectory
    double worst_mean = 0.0, worst_band = 0.0;
    for (std::size_t k = 0; k < stats.grid_times.size(); ++k) {
        const double g = stats.grid_times[k];
        std::vector<double> full;
        for (const auto& traj : ens.trajectories) {
            if (traj.times.back() + 1e-9 < g) continue;
            std::size_t i = 0;
            while (i + 1 < traj.times.size() && traj.times[i + 1] <= g) ++i;
            double v = traj.lengths[i];
            if (i + 1 < traj.times.size() && traj.times[i + 1] > traj.times[i]) {
                const double w = (g - traj.times[i]) / (traj.times[i + 1] - traj.times[i]);
                v += w * (traj.lengths[i + 1] - traj.lengths[i]);
            }
            full.push_back(v);
        }
        std::sort(full.begin(), full.end());
        double mean = 0.0;
        for (double v : full) mean += v;
        mean /= static_cast<double>(full.size());
        auto pct = [&](double p) {
            const double h = (static_cast<double>(full.size()) - 1.0) * p;
            const std::size_t lo = static_cast<std::size_t>(h);
            if (lo + 1 >= full.size()) return full.back();
            return full[lo] + (h - lo) * (full[lo + 1] - full[lo]);
        };
        worst_mean = std::max(worst_mean, std::abs(stats.mean[k] - mean) / mean);
        worst_band = std::max(worst_band, std::abs(stats.lower95[k] - pct(0.025)) / pct(0.025));
        worst_band = std::max(worst_band, std::abs(stats.upper95[k] - pct(0.975)) / pct(0.975));
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "worst mean error %.3f%%, worst band-endpoint error %.3f%%",
                  100.0 * worst_mean, 100.0 * worst_band);
    detail = buf;
    return worst_mean < 0.01 && worst_band < 0.03;
}

bool criterion_information_ordering(std::string& detail) {
    const auto& art = pilot();

    const double ll1 = art.reports.at(Task::I).mean_loglik;
    const double ll2 = art.reports.at(Task::II).mean_loglik;
    const double ll3 = art.reports.at(Task::III).mean_loglik;
    const double nmse2 = art.reports.at(Task::II).nmse;
    const double nmse3 = art.reports.at(Task::III).nmse;

    // matched conditioning: the test trajectory with median final crack length
    std::vector<std::pair<double, std::size_t>> finals;
    for (std::size_t i = 0; i < art.test_set.size(); ++i)
        finals.emplace_back(art.test_set[i].lengths.back(), i);
    std::sort(finals.begin(), finals.end());
    const auto& ref = art.test_set[finals[finals.size() / 2].second];

    Conditioning cond2;
    cond2.c = ref.material.c;
    cond2.m = ref.material.m;
    Conditioning cond3 = cond2;
    cond3.alpha0 = ref.material.alpha0;

    const double std1 = prior_at(art.models.at(Task::I).model, 1.5).std_mm;
    const double std2 = prior_at(art.models.at(Task::II).model, 1.5, cond2).std_mm;
    const double std3 = prior_at(art.models.at(Task::III).model, 1.5, cond3).std_mm;

    char buf[320];
    std::snprintf(buf, sizeof(buf),
                  "loglik %.1f < %.1f < %.1f; nmse II %.3f, III %.3f; prior std %.2f > %.2f > %.2f "
                  "mm; build %.0fs",
                  ll1, ll2, ll3, nmse2, nmse3, std1, std2, std3, art.build_seconds);
    detail = buf;
    const bool loglik_ok = ll1 < ll2 && ll2 < ll3;
    const bool nmse_ok = nmse2 <= 1.0 && nmse3 <= 1.0 && nmse3 < nmse2;
    const bool prior_ok = std1 > std2 && std2 > std3;
    return loglik_ok && nmse_ok && prior_ok && art.build_seconds < 1800.0;
}

bool criterion_determinism(std::string& detail) {
    const fs::path dir = fs::temp_directory_path() / "scgp_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // small but complete pipeline config
    SimConfig sim = load_sim_config(std::string(SCGP_REPO_DIR) + "/configs/sim_default.json");
    sim.n_trajectories = 400;
    {
        std::ofstream out(dir / "sim.json");
        out << sim_config_to_json(sim).dump(2);
    }
    {
        nlohmann::json tc = {{"m_inducing", 50},      {"iterations", 150}, {"learning_rate", 0.01},
                             {"minibatch_size", 512}, {"seed", 7},         {"jitter", 1e-6},
                             {"ard", false}};
        std::ofstream out(dir / "train.json");
        out << tc.dump(2);
    }

    const std::string cli = SCGP_CLI_PATH;
    auto run_pipeline = [&](const std::string& tag) {
        const fs::path d = dir / tag;
        fs::create_directories(d);
        const std::string sim_cmd = cli + " --config " + (dir / "sim.json").string() +
                                    " simulate --out " + (d / "ens.csv").string();
        const std::string prep_cmd = cli + " prepare --in " + (d / "ens.csv").string() +
                                     " --out-dir " + (d / "split").string() +
                                     " --fraction 0.5 --split-seed 11";
        const std::string train_cmd = cli + " --config " + (dir / "train.json").string() +
                                      " train --in " + (d / "split/train.csv").string() +
                                      " --task II --model-out " + (d / "model.json").string();
        const std::string eval_cmd = cli + " evaluate --model " + (d / "model.json").string() +
                                     " --test " + (d / "split/test.csv").string() +
                                     " --report-out " + (d / "report.json").string();
        for (const auto& cmd : {sim_cmd, prep_cmd, train_cmd, eval_cmd}) {
            if (std::system((cmd + " > /dev/null 2>&1").c_str()) != 0) return false;
        }
        return true;
    };

    if (!run_pipeline("a") || !run_pipeline("b")) {
        detail = "pipeline run failed";
        return false;
    }

    const std::vector<std::string> artifacts = {"ens.csv",    "split/train.csv",
                                                "split/test.csv", "model.json",
                                                "model.json.trace.csv", "report.json"};
    std::string mismatches;
    for (const auto& rel : artifacts) {
        const std::string a = checksum_file((dir / "a" / rel).string());
        const std::string b = checksum_file((dir / "b" / rel).string());
        if (a != b) mismatches += rel + " ";
    }
    fs::remove_all(dir);
    detail = mismatches.empty() ? "all 6 artifacts byte-identical across two runs"
                                : "mismatch: " + mismatches;
    return mismatches.empty();
}

bool criterion_variance_diagnostic(std::string& detail) {
    const auto& art = pilot();
    const fs::path dir = fs::temp_directory_path() / "scgp_acceptance_diag";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const std::string path = (dir / "report_taskI.json").string();
    atomic_write(path, report_to_json(art.reports.at(Task::I)).dump(2) + "\n", true);

    std::ifstream in(path);
    nlohmann::json j;
    in >> j;
    const auto& diag = j.at("variance_diagnostic");
    const auto n = diag.at("grid_times").size();
    const bool ok = n >= 10 && diag.at("predicted_variance").size() == n &&
                    diag.at("empirical_variance").size() == n && diag.at("counts").size() == n;

    // record (not assert) the paper's early-time underestimation observation
    double early_ratio = 0.0;
    if (ok) {
        early_ratio = diag.at("predicted_variance")[1].get<double>() /
                      std::max(1e-12, diag.at("empirical_variance")[1].get<double>());
    }
    fs::remove_all(dir);
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "diagnostic exported with %zu grid times; early predicted/empirical variance "
                  "ratio %.2f",
                  static_cast<std::size_t>(n), early_ratio);
    detail = buf;
    return ok;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "ELBO lower-bound property", criterion_elbo_bound},
        {2, "sparse-exact equivalence", criterion_sparse_exact_equivalence},
        {3, "ELBO gradient vs finite differences", criterion_gradient},
        {4, "NMSE calibration anchors", criterion_nmse_anchors},
        {5, "simulator invariants and C-scaling", criterion_simulator_invariants},
        {6, "subsampling fidelity", criterion_subsampling_fidelity},
        {7, "information ordering I -> II -> III", criterion_information_ordering},
        {8, "end-to-end determinism", criterion_determinism},
        {9, "variance-depletion diagnostic export", criterion_variance_diagnostic},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", c.id, c.name,
                    detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
