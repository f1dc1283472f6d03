// scgp: stochastic crack growth ensembles and sparse-GP crack length priors.
//
// Pipeline: simulate -> prepare -> train -> evaluate / prior / band.
// Exit codes: 0 success, 2 usage error, 3 config/IO error, 4 numerical failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "scgp/pipeline.hpp"

namespace {

scgp::Conditioning make_conditioning(const std::optional<double>& c, const std::optional<double>& m,
                                     const std::optional<double>& alpha0,
                                     const std::optional<std::int64_t>& from_traj,
                                     const std::optional<std::string>& traj_file, scgp::Task task) {
    if (from_traj) {
        if (!traj_file)
            throw std::invalid_argument("--from-traj requires --traj-file");
        return scgp::conditioning_from_trajectory(*traj_file, *from_traj, task);
    }
    scgp::Conditioning cond;
    cond.c = c;
    cond.m = m;
    cond.alpha0 = alpha0;
    return cond;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stochastic crack growth simulation and GP surrogate priors"};
    app.require_subcommand(1);

    bool force = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config_path;
    app.add_flag("--force", force, "overwrite existing outputs");
    app.add_option("--seed", seed, "override the seed from the config");
    app.add_option("--config", config_path,
                   "config JSON for the subcommand (simulation config for simulate, "
                   "training config for train)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a trajectory ensemble");
    std::string sim_out;
    sim->add_option("--out", sim_out, "output trajectory CSV")->required();

    // prepare
    auto* prep = app.add_subcommand("prepare", "subsample and split into train/test");
    std::string prep_in, prep_out_dir;
    double prep_fraction = 0.5;
    std::uint64_t prep_seed = 0;
    prep->add_option("--in", prep_in, "raw trajectory CSV")->required();
    prep->add_option("--out-dir", prep_out_dir, "directory for train.csv/test.csv")->required();
    prep->add_option("--fraction", prep_fraction, "train fraction (default 0.5)");
    auto* prep_seed_opt = prep->add_option("--split-seed", prep_seed, "seed for the trajectory split");

    // train
    auto* tr = app.add_subcommand("train", "train a sparse GP surrogate");
    std::string tr_in, tr_task, tr_model_out, tr_trace_out;
    tr->add_option("--in", tr_in, "subsampled training CSV")->required();
    tr->add_option("--task", tr_task, "task parametrization: I, II or III")->required();
    tr->add_option("--model-out", tr_model_out, "output model JSON")->required();
    tr->add_option("--trace-out", tr_trace_out, "output ELBO trace CSV (default <model>.trace.csv)");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "score a model on a test set");
    std::string ev_model, ev_test, ev_out;
    ev->add_option("--model", ev_model, "model JSON")->required();
    ev->add_option("--test", ev_test, "subsampled test CSV")->required();
    ev->add_option("--report-out", ev_out, "output report JSON")->required();

    // prior
    auto* pr = app.add_subcommand("prior", "Gaussian prior over crack length at time t");
    std::string pr_model, pr_out;
    double pr_t = 0.0;
    std::optional<double> pr_c, pr_m, pr_a0;
    std::optional<std::int64_t> pr_from_traj;
    std::optional<std::string> pr_traj_file;
    pr->add_option("--model", pr_model, "model JSON")->required();
    pr->add_option("--t", pr_t, "query time, years")->required();
    pr->add_option("--c", pr_c, "Paris coefficient conditioning value");
    pr->add_option("--m", pr_m, "Paris exponent conditioning value");
    pr->add_option("--alpha0", pr_a0, "initial crack length conditioning value, mm");
    pr->add_option("--from-traj", pr_from_traj, "pull conditioning values from this trajectory id");
    pr->add_option("--traj-file", pr_traj_file, "trajectory CSV for --from-traj");
    pr->add_option("--out", pr_out, "output prior JSON")->required();

    // band
    auto* bd = app.add_subcommand("band", "predictive 95% band over a time grid");
    std::string bd_model, bd_out;
    double bd_tmin = 0.0, bd_tmax = 3.0;
    int bd_n = 100;
    std::optional<double> bd_c, bd_m, bd_a0;
    std::optional<std::int64_t> bd_from_traj;
    std::optional<std::string> bd_traj_file;
    bd->add_option("--model", bd_model, "model JSON")->required();
    bd->add_option("--t-min", bd_tmin, "grid start, years");
    bd->add_option("--t-max", bd_tmax, "grid end, years");
    bd->add_option("--grid", bd_n, "number of grid points");
    bd->add_option("--c", bd_c, "Paris coefficient conditioning value");
    bd->add_option("--m", bd_m, "Paris exponent conditioning value");
    bd->add_option("--alpha0", bd_a0, "initial crack length conditioning value, mm");
    bd->add_option("--from-traj", bd_from_traj, "pull conditioning values from this trajectory id");
    bd->add_option("--traj-file", bd_traj_file, "trajectory CSV for --from-traj");
    bd->add_option("--out", bd_out, "output band CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            if (!config_path) throw std::invalid_argument("simulate requires --config");
            scgp::cmd_simulate(*config_path, sim_out, force, seed);
        } else if (prep->parsed()) {
            if (!seed && prep_seed_opt->count() == 0)
                throw std::invalid_argument("prepare requires --split-seed or --seed");
            scgp::cmd_prepare(prep_in, prep_fraction, seed.value_or(prep_seed), prep_out_dir, force);
        } else if (tr->parsed()) {
            const scgp::Task task = scgp::task_from_name(tr_task);
            const std::string trace = tr_trace_out.empty() ? tr_model_out + ".trace.csv" : tr_trace_out;
            scgp::cmd_train(tr_in, task, config_path, tr_model_out, trace, force, seed);
        } else if (ev->parsed()) {
            scgp::cmd_evaluate(ev_model, ev_test, ev_out, force);
        } else if (pr->parsed()) {
            const scgp::SvgpModel model = scgp::load_model(pr_model);
            const auto cond =
                make_conditioning(pr_c, pr_m, pr_a0, pr_from_traj, pr_traj_file, model.task);
            scgp::cmd_prior(pr_model, pr_t, cond, pr_out, force);
        } else if (bd->parsed()) {
            const scgp::SvgpModel model = scgp::load_model(bd_model);
            const auto cond =
                make_conditioning(bd_c, bd_m, bd_a0, bd_from_traj, bd_traj_file, model.task);
            scgp::cmd_band(bd_model, cond, bd_tmin, bd_tmax, bd_n, bd_out, force);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const scgp::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const scgp::numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
