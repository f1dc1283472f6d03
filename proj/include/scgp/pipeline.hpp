#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scgp/dataset_io.hpp"
#include "scgp/errors.hpp"
#include "scgp/sim_config.hpp"
#include "scgp/simulate.hpp"
#include "scgp/svgp_io.hpp"
#include "scgp/tasks.hpp"
#include "scgp/trajectory_io.hpp"

namespace scgp {

// FNV-1a over the file bytes; integrity marker for manifests, not security.
inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string checksum_hex(const std::string& bytes) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string checksum_file(const std::string& path) { return checksum_hex(read_file(path)); }

// Refuses to clobber existing outputs unless forced; writes via a temp file
// and rename so readers never see partial output.
inline void atomic_write(const std::string& path, const std::string& content, bool force) {
    namespace fs = std::filesystem;
    if (!force && fs::exists(path)) throw config_error("output exists (use --force): " + path);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw config_error("cannot open for writing: " + tmp);
        out << content;
    }
    fs::rename(tmp, path);
}

struct RunManifest {
    std::string command;
    std::string config_checksum;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::pair<std::string, std::string>> outputs;  // path, checksum
    double duration_seconds = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json outs = nlohmann::json::array();
        for (const auto& [path, sum] : outputs) outs.push_back({{"path", path}, {"checksum", sum}});
        return {{"command", command},     {"config_checksum", config_checksum},
                {"seed", seed},           {"inputs", inputs},
                {"outputs", outs},        {"duration_seconds", duration_seconds}};
    }
};

namespace detail {

class ManifestTimer {
public:
    explicit ManifestTimer(RunManifest& m) : manifest_(m), start_(std::chrono::steady_clock::now()) {}

    void finish(const std::string& manifest_path, bool force) {
        manifest_.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        atomic_write(manifest_path, manifest_.to_json().dump(2) + "\n", force);
    }

private:
    RunManifest& manifest_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

inline void cmd_simulate(const std::string& config_path, const std::string& out_path, bool force,
                         std::optional<std::uint64_t> seed_override = {}) {
    SimConfig cfg = load_sim_config(config_path);
    if (seed_override) cfg.seed = *seed_override;

    RunManifest manifest;
    manifest.command = "simulate";
    manifest.config_checksum = checksum_file(config_path);
    manifest.seed = cfg.seed;
    manifest.inputs = {config_path};
    detail::ManifestTimer timer(manifest);

    const Ensemble ens = generate_ensemble(cfg);
    const std::string csv = trajectories_to_csv(ens.trajectories);
    atomic_write(out_path, csv, force);
    manifest.outputs.emplace_back(out_path, checksum_hex(csv));
    timer.finish(out_path + ".manifest.json", force);
}

inline void cmd_prepare(const std::string& in_path, double split_fraction, std::uint64_t seed,
                        const std::string& out_dir, bool force) {
    namespace fs = std::filesystem;
    RunManifest manifest;
    manifest.command = "prepare";
    manifest.config_checksum = checksum_file(in_path);
    manifest.seed = seed;
    manifest.inputs = {in_path};
    detail::ManifestTimer timer(manifest);

    const auto trajs = read_trajectories(in_path);
    const auto sub = subsample_all(trajs);
    Rng rng = make_stream(seed, 0);
    const auto [train_set, test_set] = holdout_split(sub, split_fraction, rng);

    fs::create_directories(out_dir);
    const std::string train_path = (fs::path(out_dir) / "train.csv").string();
    const std::string test_path = (fs::path(out_dir) / "test.csv").string();

    std::vector<Trajectory> carrier;
    auto to_csv = [&carrier](const std::vector<SubsampledTrajectory>& set) {
        carrier.clear();
        for (const auto& t : set)
            carrier.push_back({t.id, t.material, t.grid_times, t.lengths, t.truncated_at_critical});
        return trajectories_to_csv(carrier);
    };
    const std::string train_csv = to_csv(train_set);
    const std::string test_csv = to_csv(test_set);
    atomic_write(train_path, train_csv, force);
    atomic_write(test_path, test_csv, force);
    manifest.outputs.emplace_back(train_path, checksum_hex(train_csv));
    manifest.outputs.emplace_back(test_path, checksum_hex(test_csv));
    timer.finish((fs::path(out_dir) / "prepare.manifest.json").string(), force);
}

inline void cmd_train(const std::string& train_path, Task task,
                      const std::optional<std::string>& train_config_path, const std::string& model_out,
                      const std::string& trace_out, bool force,
                      std::optional<std::uint64_t> seed_override = {}) {
    TrainConfig cfg =
        train_config_path ? load_train_config(*train_config_path) : default_train_config(task);
    if (seed_override) cfg.seed = *seed_override;

    RunManifest manifest;
    manifest.command = "train";
    manifest.config_checksum = train_config_path ? checksum_file(*train_config_path) : "";
    manifest.seed = cfg.seed;
    manifest.inputs = {train_path};
    if (train_config_path) manifest.inputs.push_back(*train_config_path);
    detail::ManifestTimer timer(manifest);

    const auto train_set = read_subsampled(train_path);
    const TrainResult result = train_task(train_set, task, cfg);

    const std::string model_json = model_to_json(result.model).dump(2) + "\n";
    atomic_write(model_out, model_json, force);
    std::string trace_csv = "iteration,elbo\n";
    {
        char buf[48];
        for (std::size_t i = 0; i < result.elbo_trace.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, result.elbo_trace[i]);
            trace_csv += buf;
        }
    }
    atomic_write(trace_out, trace_csv, force);
    manifest.outputs.emplace_back(model_out, checksum_hex(model_json));
    manifest.outputs.emplace_back(trace_out, checksum_hex(trace_csv));
    timer.finish(model_out + ".manifest.json", force);
}

inline nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json per_traj = nlohmann::json::array();
    for (const auto& [id, ll] : report.per_trajectory_loglik)
        per_traj.push_back({{"traj_id", id}, {"loglik", ll}});
    nlohmann::json diag = {{"grid_times", report.variance_diagnostic.grid_times},
                           {"predicted_variance", report.variance_diagnostic.predicted_variance},
                           {"empirical_variance", report.variance_diagnostic.empirical_variance},
                           {"counts", report.variance_diagnostic.counts}};
    return {{"task", task_name(report.task)},
            {"nmse", report.nmse},
            {"mean_loglik", report.mean_loglik},
            {"per_trajectory_loglik", per_traj},
            {"variance_diagnostic", diag}};
}

inline void cmd_evaluate(const std::string& model_path, const std::string& test_path,
                         const std::string& report_out, bool force) {
    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.config_checksum = checksum_file(model_path);
    manifest.inputs = {model_path, test_path};
    detail::ManifestTimer timer(manifest);

    const SvgpModel model = load_model(model_path);
    manifest.seed = model.train_config.seed;
    const auto test_set = read_subsampled(test_path);
    const EvalReport report = evaluate(model, test_set);

    const std::string json = report_to_json(report).dump(2) + "\n";
    atomic_write(report_out, json, force);
    manifest.outputs.emplace_back(report_out, checksum_hex(json));
    timer.finish(report_out + ".manifest.json", force);
}

inline nlohmann::json prior_to_json(const GaussianPrior& prior) {
    nlohmann::json cond = nlohmann::json::object();
    cond["t_years"] = prior.t_years;
    if (prior.conditioning.c) cond["c"] = *prior.conditioning.c;
    if (prior.conditioning.m) cond["m"] = *prior.conditioning.m;
    if (prior.conditioning.alpha0) cond["alpha0"] = *prior.conditioning.alpha0;
    return {{"mean_mm", prior.mean_mm}, {"std_mm", prior.std_mm}, {"conditioning", cond}};
}

// Conditioning values may be given explicitly or pulled from a trajectory
// file by id, mirroring how the reference realizations are picked.
inline Conditioning conditioning_from_trajectory(const std::string& traj_path, std::int64_t traj_id,
                                                 Task task) {
    for (const auto& t : read_trajectories(traj_path)) {
        if (t.id != traj_id) continue;
        Conditioning cond;
        if (task != Task::I) {
            cond.c = t.material.c;
            cond.m = t.material.m;
        }
        if (task == Task::III) cond.alpha0 = t.material.alpha0;
        return cond;
    }
    throw config_error("trajectory id " + std::to_string(traj_id) + " not found in " + traj_path);
}

inline void cmd_prior(const std::string& model_path, double t, const Conditioning& cond,
                      const std::string& out_path, bool force) {
    RunManifest manifest;
    manifest.command = "prior";
    manifest.config_checksum = checksum_file(model_path);
    manifest.inputs = {model_path};
    detail::ManifestTimer timer(manifest);

    const SvgpModel model = load_model(model_path);
    manifest.seed = model.train_config.seed;
    const GaussianPrior prior = prior_at(model, t, cond);
    const std::string json = prior_to_json(prior).dump(2) + "\n";
    atomic_write(out_path, json, force);
    manifest.outputs.emplace_back(out_path, checksum_hex(json));
    timer.finish(out_path + ".manifest.json", force);
}

inline std::string band_to_csv(const std::vector<BandRow>& rows) {
    std::string out = "t_years,mean_mm,lo95_mm,hi95_mm\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", r.t_years, r.mean_mm, r.lo95_mm,
                      r.hi95_mm);
        out += buf;
    }
    return out;
}

inline void cmd_band(const std::string& model_path, const Conditioning& cond, double t_min, double t_max,
                     int n_grid, const std::string& out_path, bool force) {
    RunManifest manifest;
    manifest.command = "band";
    manifest.config_checksum = checksum_file(model_path);
    manifest.inputs = {model_path};
    detail::ManifestTimer timer(manifest);

    const SvgpModel model = load_model(model_path);
    manifest.seed = model.train_config.seed;
    const std::string csv = band_to_csv(prediction_band(model, cond, t_min, t_max, n_grid));
    atomic_write(out_path, csv, force);
    manifest.outputs.emplace_back(out_path, checksum_hex(csv));
    timer.finish(out_path + ".manifest.json", force);
}

}  // namespace scgp
