#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

namespace scgp {

// Matern 3/2 hyperparameters, stored as logs so optimization is
// unconstrained. One shared lengthscale by default; size-d vector for ARD.
struct KernelParams {
    double log_amplitude = 0.0;
    Eigen::VectorXd log_lengthscales = Eigen::VectorXd::Zero(1);

    double amplitude() const { return std::exp(log_amplitude); }
    double amplitude2() const { return std::exp(2.0 * log_amplitude); }
    bool ard() const { return log_lengthscales.size() > 1; }

    // Lengthscale for input dimension j.
    double lengthscale(Eigen::Index j) const {
        return std::exp(log_lengthscales(ard() ? j : 0));
    }
};

namespace detail {

constexpr double sqrt3 = 1.7320508075688772;

}  // namespace detail

// Lengthscale-scaled Euclidean distances between row sets.
inline Eigen::MatrixXd scaled_distance(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                                       const KernelParams& p) {
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(xa.rows(), xb.rows());
    for (Eigen::Index j = 0; j < xa.cols(); ++j) {
        const double inv_l = 1.0 / p.lengthscale(j);
        const Eigen::ArrayXd a = xa.col(j).array() * inv_l;
        const Eigen::ArrayXd b = xb.col(j).array() * inv_l;
        d2 += ((a.matrix() * Eigen::RowVectorXd::Ones(xb.rows())).rowwise() - b.matrix().transpose())
                  .array()
                  .square()
                  .matrix();
    }
    return d2.array().sqrt();
}

// Matern 3/2 pieces for a precomputed scaled-distance matrix:
//   E = amp^2 * exp(-sqrt3 * D),  K = (1 + sqrt3 * D) .* E
// E is kept because every kernel derivative reuses it.
struct KernelEval {
    Eigen::MatrixXd K;
    Eigen::MatrixXd E;
    Eigen::MatrixXd D;
};

inline KernelEval matern32_eval(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                                const KernelParams& p) {
    KernelEval ev;
    ev.D = scaled_distance(xa, xb, p);
    ev.E = (p.amplitude2() * (-detail::sqrt3 * ev.D.array()).exp()).matrix();
    ev.K = ((1.0 + detail::sqrt3 * ev.D.array()) * ev.E.array()).matrix();
    return ev;
}

inline Eigen::MatrixXd cov_matrix(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                                  const KernelParams& p) {
    return matern32_eval(xa, xb, p).K;
}

inline double matern32(const Eigen::VectorXd& x, const Eigen::VectorXd& x_prime, const KernelParams& p) {
    if (x.size() != x_prime.size()) throw std::invalid_argument("matern32: dimension mismatch");
    double d2 = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double u = (x(j) - x_prime(j)) / p.lengthscale(j);
        d2 += u * u;
    }
    const double d = std::sqrt(d2);
    return p.amplitude2() * (1.0 + detail::sqrt3 * d) * std::exp(-detail::sqrt3 * d);
}

// dK/dlog(lengthscale_j) = 3 * E .* Usq_j with Usq_j the squared scaled
// coordinate differences; for a shared lengthscale Usq sums to D^2.
inline Eigen::MatrixXd scaled_sqdiff(const Eigen::MatrixXd& xa, const Eigen::MatrixXd& xb,
                                     const KernelParams& p, Eigen::Index j) {
    const double inv_l = 1.0 / p.lengthscale(j);
    const Eigen::ArrayXd a = xa.col(j).array() * inv_l;
    const Eigen::ArrayXd b = xb.col(j).array() * inv_l;
    return ((a.matrix() * Eigen::RowVectorXd::Ones(xb.rows())).rowwise() - b.matrix().transpose())
        .array()
        .square()
        .matrix();
}

}  // namespace scgp
