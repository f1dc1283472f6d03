#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scgp/errors.hpp"
#include "scgp/svgp.hpp"

namespace scgp {

namespace detail {

inline nlohmann::json vec_to_json(const Eigen::VectorXd& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Eigen::VectorXd vec_from_json(const nlohmann::json& a) {
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

inline Eigen::MatrixXd mat_from_json(const nlohmann::json& rows) {
    if (rows.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    return m;
}

}  // namespace detail

// Everything needed to reproduce predictions bit-exactly, plus the training
// config and seed for provenance. Raw log-space values are stored as-is.
inline nlohmann::json model_to_json(const SvgpModel& model) {
    const TrainConfig& tc = model.train_config;
    return {
        {"task", task_name(model.task)},
        {"kernel",
         {{"log_amplitude", model.kernel.log_amplitude},
          {"log_lengthscales", detail::vec_to_json(model.kernel.log_lengthscales)}}},
        {"noise", {{"log_sigma2", model.noise.log_sigma2}}},
        {"variational",
         {{"z", detail::mat_to_json(model.variational.z)},
          {"m_u", detail::vec_to_json(model.variational.m_u)},
          {"log_s_u", detail::vec_to_json(model.variational.log_s_u)}}},
        {"input_stats",
         {{"mean", detail::vec_to_json(model.input_stats.mean)},
          {"std", detail::vec_to_json(model.input_stats.std)}}},
        {"output_stats", {{"mean", model.output_stats.mean}, {"std", model.output_stats.std}}},
        {"jitter", model.jitter},
        {"train_config",
         {{"m_inducing", tc.m_inducing},
          {"iterations", tc.iterations},
          {"learning_rate", tc.learning_rate},
          {"minibatch_size", tc.minibatch_size},
          {"seed", tc.seed},
          {"jitter", tc.jitter},
          {"ard", tc.ard}}},
    };
}

inline SvgpModel model_from_json(const nlohmann::json& j) {
    SvgpModel model;
    try {
        model.task = task_from_name(j.at("task").get<std::string>());
        model.kernel.log_amplitude = j.at("kernel").at("log_amplitude").get<double>();
        model.kernel.log_lengthscales = detail::vec_from_json(j.at("kernel").at("log_lengthscales"));
        model.noise.log_sigma2 = j.at("noise").at("log_sigma2").get<double>();
        model.variational.z = detail::mat_from_json(j.at("variational").at("z"));
        model.variational.m_u = detail::vec_from_json(j.at("variational").at("m_u"));
        model.variational.log_s_u = detail::vec_from_json(j.at("variational").at("log_s_u"));
        model.input_stats.mean = detail::vec_from_json(j.at("input_stats").at("mean"));
        model.input_stats.std = detail::vec_from_json(j.at("input_stats").at("std"));
        model.output_stats.mean = j.at("output_stats").at("mean").get<double>();
        model.output_stats.std = j.at("output_stats").at("std").get<double>();
        model.jitter = j.at("jitter").get<double>();
        const auto& tc = j.at("train_config");
        model.train_config.m_inducing = tc.at("m_inducing").get<int>();
        model.train_config.iterations = tc.at("iterations").get<int>();
        model.train_config.learning_rate = tc.at("learning_rate").get<double>();
        model.train_config.minibatch_size = tc.at("minibatch_size").get<int>();
        model.train_config.seed = tc.at("seed").get<std::uint64_t>();
        model.train_config.jitter = tc.at("jitter").get<double>();
        model.train_config.ard = tc.at("ard").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("model json: ") + e.what());
    }
    if (model.variational.z.cols() != task_dim(model.task))
        throw config_error("model json: z dimension does not match task");
    return model;
}

inline void save_model(const SvgpModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open for writing: " + path);
    out << model_to_json(model).dump(2) << '\n';
}

inline SvgpModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("cannot parse model " + path + ": " + e.what());
    }
    return model_from_json(j);
}

// Training config files are all-fields-required, like the sim config.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    try {
        cfg.m_inducing = j.at("m_inducing").get<int>();
        cfg.iterations = j.at("iterations").get<int>();
        cfg.learning_rate = j.at("learning_rate").get<double>();
        cfg.minibatch_size = j.at("minibatch_size").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.jitter = j.at("jitter").get<double>();
        cfg.ard = j.at("ard").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("train config: ") + e.what());
    }
    if (cfg.m_inducing < 1 || cfg.iterations < 0 || !(cfg.learning_rate > 0.0) ||
        cfg.minibatch_size < 1 || !(cfg.jitter >= 0.0))
        throw config_error("train config: parameters out of range");
    return cfg;
}

inline TrainConfig load_train_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open train config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("cannot parse train config " + path + ": " + e.what());
    }
    return train_config_from_json(j);
}

inline void write_elbo_trace(const std::vector<double>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open for writing: " + path);
    out << "iteration,elbo\n";
    char buf[48];
    for (std::size_t i = 0; i < trace.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, trace[i]);
        out << buf;
    }
}

}  // namespace scgp
