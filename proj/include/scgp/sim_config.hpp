#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scgp/errors.hpp"

namespace scgp {

constexpr double hours_per_year = 8766.0;

// One cell of the discrete (Hs, Tz) scatter diagram. The joint sea-state
// model is a categorical distribution over these cells.
struct ScatterCell {
    double hs;           // significant wave height, m
    double tz;           // zero up-crossing period, s
    double probability;  // cell mass; cells must sum to 1
};

struct SimConfig {
    int n_trajectories = 0;
    double alpha_cr = 0.0;       // critical crack length, mm
    double horizon_years = 0.0;  // propagation window after detection

    // ln C ~ N(mu_ln_c, sigma_ln_c^2), m ~ N(mu_m, sigma_m^2),
    // alpha0 ~ N(mu_alpha0, sigma_alpha0^2) truncated to (0, alpha_cr)
    double mu_ln_c = 0.0;
    double sigma_ln_c = 0.0;
    double mu_m = 0.0;
    double sigma_m = 0.0;
    double mu_alpha0 = 0.0;
    double sigma_alpha0 = 0.0;

    double duration_min_hours = 0.0;
    double duration_max_hours = 0.0;

    std::vector<ScatterCell> scatter;
    double kappa = 0.0;            // stress transfer, MPa per m of Hs
    double geometry_factor = 0.0;  // Y in dK = Y * dS * sqrt(pi * a)

    std::uint64_t seed = 0;
    double max_step_fraction = 0.0;  // sub-stepping guard on da per step

    double horizon_hours() const { return horizon_years * hours_per_year; }
};

inline void validate(const SimConfig& c) {
    auto fail = [](const std::string& msg) { throw config_error("sim config: " + msg); };
    if (c.n_trajectories < 1) fail("n_trajectories must be >= 1");
    if (!(c.alpha_cr > 0.0)) fail("alpha_cr must be > 0");
    if (!(c.horizon_years > 0.0)) fail("horizon must be > 0");
    if (!std::isfinite(c.mu_ln_c) || !(c.sigma_ln_c >= 0.0)) fail("invalid ln C parameters");
    if (!std::isfinite(c.mu_m) || !(c.sigma_m >= 0.0)) fail("invalid m parameters");
    if (!(c.mu_alpha0 > 0.0) || !(c.sigma_alpha0 >= 0.0)) fail("invalid alpha0 parameters");
    if (!(c.alpha_cr > c.mu_alpha0)) fail("alpha_cr must exceed mean initial crack length");
    if (!(c.duration_min_hours > 0.0) || !(c.duration_max_hours >= c.duration_min_hours))
        fail("invalid sea-state duration bounds");
    if (c.scatter.empty()) fail("scatter diagram must have at least one cell");
    double mass = 0.0;
    for (const auto& cell : c.scatter) {
        if (!(cell.hs > 0.0) || !(cell.tz > 0.0)) fail("scatter cell needs hs > 0 and tz > 0");
        if (!(cell.probability > 0.0)) fail("scatter cell probability must be > 0");
        mass += cell.probability;
    }
    if (std::abs(mass - 1.0) > 1e-9) fail("scatter probabilities must sum to 1");
    if (!(c.kappa > 0.0)) fail("kappa must be > 0");
    if (!(c.geometry_factor > 0.0)) fail("geometry factor must be > 0");
    if (!(c.max_step_fraction > 0.0)) fail("max_step_fraction must be > 0");
}

// All fields are required; defaults ship as config files, not parse fallbacks.
inline SimConfig sim_config_from_json(const nlohmann::json& j) {
    SimConfig c;
    try {
        c.n_trajectories = j.at("n_trajectories").get<int>();
        c.alpha_cr = j.at("alpha_cr_mm").get<double>();
        c.horizon_years = j.at("horizon_years").get<double>();
        c.mu_ln_c = j.at("mu_ln_c").get<double>();
        c.sigma_ln_c = j.at("sigma_ln_c").get<double>();
        c.mu_m = j.at("mu_m").get<double>();
        c.sigma_m = j.at("sigma_m").get<double>();
        c.mu_alpha0 = j.at("mu_alpha0_mm").get<double>();
        c.sigma_alpha0 = j.at("sigma_alpha0_mm").get<double>();
        c.duration_min_hours = j.at("duration_min_hours").get<double>();
        c.duration_max_hours = j.at("duration_max_hours").get<double>();
        for (const auto& cell : j.at("scatter")) {
            c.scatter.push_back({cell.at("hs_m").get<double>(), cell.at("tz_s").get<double>(),
                                 cell.at("probability").get<double>()});
        }
        c.kappa = j.at("kappa_mpa_per_m").get<double>();
        c.geometry_factor = j.at("geometry_factor").get<double>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.max_step_fraction = j.at("max_step_fraction").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("sim config: ") + e.what());
    }
    validate(c);
    return c;
}

inline nlohmann::json sim_config_to_json(const SimConfig& c) {
    nlohmann::json scatter = nlohmann::json::array();
    for (const auto& cell : c.scatter) {
        scatter.push_back({{"hs_m", cell.hs}, {"tz_s", cell.tz}, {"probability", cell.probability}});
    }
    return {
        {"n_trajectories", c.n_trajectories},
        {"alpha_cr_mm", c.alpha_cr},
        {"horizon_years", c.horizon_years},
        {"mu_ln_c", c.mu_ln_c},
        {"sigma_ln_c", c.sigma_ln_c},
        {"mu_m", c.mu_m},
        {"sigma_m", c.sigma_m},
        {"mu_alpha0_mm", c.mu_alpha0},
        {"sigma_alpha0_mm", c.sigma_alpha0},
        {"duration_min_hours", c.duration_min_hours},
        {"duration_max_hours", c.duration_max_hours},
        {"scatter", scatter},
        {"kappa_mpa_per_m", c.kappa},
        {"geometry_factor", c.geometry_factor},
        {"seed", c.seed},
        {"max_step_fraction", c.max_step_fraction},
    };
}

inline SimConfig load_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open sim config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("cannot parse sim config " + path + ": " + e.what());
    }
    return sim_config_from_json(j);
}

}  // namespace scgp
