#pragma once

#include <cmath>

#include <Eigen/Core>

#include "scgp/errors.hpp"

namespace scgp {

// Per-dimension affine map to zero mean, unit variance. The GP operates in
// standardized space; predictions are mapped back to mm on the way out.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;

    static Standardizer fit(const Eigen::MatrixXd& x) {
        Standardizer s;
        s.mean = x.colwise().mean();
        Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
        s.std = (centered.array().square().colwise().sum() / static_cast<double>(x.rows()))
                    .sqrt()
                    .matrix();
        for (Eigen::Index j = 0; j < s.std.size(); ++j) {
            if (!(s.std(j) > 0.0))
                throw numerical_error("standardizer: column " + std::to_string(j) + " has zero variance");
        }
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        return (x.rowwise() - mean.transpose()) * std.cwiseInverse().asDiagonal();
    }

    Eigen::MatrixXd invert(const Eigen::MatrixXd& z) const {
        return (z * std.asDiagonal()).rowwise() + mean.transpose();
    }
};

struct OutputStats {
    double mean = 0.0;
    double std = 1.0;

    static OutputStats fit(const Eigen::VectorXd& y) {
        OutputStats s;
        s.mean = y.mean();
        s.std = std::sqrt((y.array() - s.mean).square().sum() / static_cast<double>(y.size()));
        if (!(s.std > 0.0)) throw numerical_error("standardizer: targets have zero variance");
        return s;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& y) const { return (y.array() - mean) / std; }
    double de_standardize_mean(double m) const { return m * std + mean; }
    double de_standardize_var(double v) const { return v * std * std; }
};

}  // namespace scgp
