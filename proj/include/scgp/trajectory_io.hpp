#pragma once

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scgp/errors.hpp"
#include "scgp/simulate.hpp"

namespace scgp {

inline constexpr const char* trajectory_csv_header = "traj_id,c,m,alpha0,t_years,a_mm,truncated";

namespace detail {

inline std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

inline std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw config_error("bad numeric field '" + s + "' in " + context);
    }
}

}  // namespace detail

// One row per recorded point; material columns repeated per row so the file
// is self-contained. Floats at 9 significant digits.
inline std::string trajectories_to_csv(const std::vector<Trajectory>& trajs) {
    std::string out(trajectory_csv_header);
    out += '\n';
    char head[160];
    for (const auto& t : trajs) {
        std::snprintf(head, sizeof(head), "%" PRId64 ",%s,%s,%s,", t.id, detail::fmt9(t.material.c).c_str(),
                      detail::fmt9(t.material.m).c_str(), detail::fmt9(t.material.alpha0).c_str());
        for (std::size_t i = 0; i < t.times.size(); ++i) {
            out += head;
            out += detail::fmt9(t.times[i]);
            out += ',';
            out += detail::fmt9(t.lengths[i]);
            out += ',';
            out += t.truncated_at_critical ? '1' : '0';
            out += '\n';
        }
    }
    return out;
}

inline std::vector<Trajectory> trajectories_from_csv_text(const std::string& text,
                                                          const std::string& context = "trajectory csv") {
    std::vector<Trajectory> trajs;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != trajectory_csv_header)
        throw config_error("missing or wrong header in " + context);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 7) throw config_error("expected 7 columns in " + context);
        const std::int64_t id = static_cast<std::int64_t>(detail::parse_double(f[0], context));
        if (trajs.empty() || trajs.back().id != id) {
            Trajectory t;
            t.id = id;
            t.material = {detail::parse_double(f[1], context), detail::parse_double(f[2], context),
                          detail::parse_double(f[3], context)};
            trajs.push_back(std::move(t));
        }
        trajs.back().times.push_back(detail::parse_double(f[4], context));
        trajs.back().lengths.push_back(detail::parse_double(f[5], context));
        trajs.back().truncated_at_critical = f[6] == "1";
    }
    return trajs;
}

inline void write_trajectories(const std::vector<Trajectory>& trajs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot open for writing: " + path);
    out << trajectories_to_csv(trajs);
}

inline std::vector<Trajectory> read_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return trajectories_from_csv_text(ss.str(), path);
}

}  // namespace scgp
