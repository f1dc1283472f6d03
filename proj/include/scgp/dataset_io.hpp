#pragma once

#include <cinttypes>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scgp/dataset.hpp"
#include "scgp/errors.hpp"
#include "scgp/trajectory_io.hpp"

namespace scgp {

// Subsampled trajectories share the raw trajectory CSV schema.
inline void write_subsampled(const std::vector<SubsampledTrajectory>& trajs, const std::string& path) {
    std::vector<Trajectory> carrier;
    carrier.reserve(trajs.size());
    for (const auto& t : trajs) {
        carrier.push_back({t.id, t.material, t.grid_times, t.lengths, t.truncated_at_critical});
    }
    write_trajectories(carrier, path);
}

inline std::vector<SubsampledTrajectory> read_subsampled(const std::string& path) {
    std::vector<SubsampledTrajectory> out;
    for (auto& t : read_trajectories(path)) {
        out.push_back({t.id, t.material, std::move(t.times), std::move(t.lengths), t.truncated_at_critical});
    }
    return out;
}

inline std::string dataset_csv_header(Task task) {
    switch (task) {
        case Task::I: return "traj_id,t_years,a_mm";
        case Task::II: return "traj_id,t_years,c,m,a_mm";
        case Task::III: return "traj_id,t_years,c,m,alpha0,a_mm";
    }
    throw std::invalid_argument("unknown task");
}

// Dataset rows are written at full precision (17 significant digits) so a
// file round trip reproduces the dataset exactly.
inline std::string dataset_to_csv(const RegressionDataset& ds) {
    std::string out = dataset_csv_header(ds.task);
    out += '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < ds.targets.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%" PRId64, ds.traj_ids[static_cast<std::size_t>(i)]);
        out += buf;
        for (Eigen::Index j = 0; j < ds.inputs.cols(); ++j) {
            out += ',';
            out += detail::fmt17(ds.inputs(i, j));
        }
        out += ',';
        out += detail::fmt17(ds.targets(i));
        out += '\n';
    }
    return out;
}

inline RegressionDataset dataset_from_csv_text(const std::string& text,
                                               const std::string& context = "dataset csv") {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw config_error("empty dataset file: " + context);
    Task task;
    if (line == dataset_csv_header(Task::I)) task = Task::I;
    else if (line == dataset_csv_header(Task::II)) task = Task::II;
    else if (line == dataset_csv_header(Task::III)) task = Task::III;
    else throw config_error("unrecognized dataset header in " + context);

    const int d = task_dim(task);
    std::vector<std::vector<double>> rows;
    std::vector<std::int64_t> ids;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (static_cast<int>(f.size()) != d + 2) throw config_error("bad column count in " + context);
        ids.push_back(static_cast<std::int64_t>(detail::parse_double(f[0], context)));
        std::vector<double> row(static_cast<std::size_t>(d) + 1);
        for (int j = 0; j <= d; ++j) row[static_cast<std::size_t>(j)] = detail::parse_double(f[static_cast<std::size_t>(j) + 1], context);
        rows.push_back(std::move(row));
    }

    RegressionDataset ds;
    ds.task = task;
    ds.inputs.resize(static_cast<Eigen::Index>(rows.size()), d);
    ds.targets.resize(static_cast<Eigen::Index>(rows.size()));
    ds.traj_ids = std::move(ids);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (int j = 0; j < d; ++j) ds.inputs(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
        ds.targets(static_cast<Eigen::Index>(i)) = rows[i][static_cast<std::size_t>(d)];
    }
    return ds;
}

// Sidecar records what the file holds and where it came from.
inline void write_dataset(const RegressionDataset& ds, const std::string& path,
                          const std::string& source_checksum = "") {
    {
        std::ofstream out(path);
        if (!out) throw config_error("cannot open for writing: " + path);
        out << dataset_to_csv(ds);
    }
    nlohmann::json meta = {
        {"task", task_name(ds.task)},
        {"rows", ds.targets.size()},
        {"source_checksum", source_checksum},
    };
    std::ofstream meta_out(path + ".meta.json");
    if (!meta_out) throw config_error("cannot open for writing: " + path + ".meta.json");
    meta_out << meta.dump(2) << '\n';
}

inline RegressionDataset read_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return dataset_from_csv_text(ss.str(), path);
}

}  // namespace scgp
