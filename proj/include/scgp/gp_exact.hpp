#pragma once

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "scgp/errors.hpp"
#include "scgp/kernel.hpp"

namespace scgp {

struct NoiseParams {
    double log_sigma2 = 0.0;
    double sigma2() const { return std::exp(log_sigma2); }
};

struct GaussianPrediction {
    double mean = 0.0;
    double variance = 0.0;
};

constexpr double default_jitter = 1e-6;

// Cholesky with the diagonal nudged by jitter * amp^2, escalating tenfold up
// to 1e-2 * amp^2 before giving up.
inline Eigen::LLT<Eigen::MatrixXd> chol_with_jitter(const Eigen::MatrixXd& k, double amp2,
                                                    double jitter = default_jitter) {
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(k.rows(), k.cols());
    double j = jitter;
    for (;;) {
        Eigen::LLT<Eigen::MatrixXd> llt(k + j * amp2 * identity);
        if (llt.info() == Eigen::Success) return llt;
        j = (j == 0.0) ? default_jitter : j * 10.0;
        if (j > 1e-2) {
            throw numerical_error("Cholesky failed for " + std::to_string(k.rows()) + "x" +
                                  std::to_string(k.cols()) + " matrix even at jitter 1e-2 * amp^2");
        }
    }
}

struct ExactPrediction {
    Eigen::VectorXd mean;
    Eigen::VectorXd latent_variance;
    Eigen::VectorXd observed_variance;  // latent + sigma2
};

// Dense GP posterior predictive: mean = K_*n (K_nn + s2 I)^-1 y and the
// matching variance, all through one Cholesky factorization.
inline ExactPrediction exact_posterior_predict(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y,
                                               const Eigen::MatrixXd& x_query, const KernelParams& kp,
                                               const NoiseParams& np, double jitter = default_jitter) {
    if (x_train.rows() < 1) throw std::invalid_argument("exact_posterior_predict: no training points");
    const Eigen::MatrixXd k_nn =
        cov_matrix(x_train, x_train, kp) +
        np.sigma2() * Eigen::MatrixXd::Identity(x_train.rows(), x_train.rows());
    const auto llt = chol_with_jitter(k_nn, kp.amplitude2(), jitter);

    const Eigen::MatrixXd k_qn = cov_matrix(x_query, x_train, kp);
    const Eigen::VectorXd alpha = llt.solve(y);

    ExactPrediction pred;
    pred.mean = k_qn * alpha;
    const Eigen::MatrixXd w = llt.matrixL().solve(k_qn.transpose());  // L^-1 K_nq
    pred.latent_variance =
        (kp.amplitude2() - w.array().square().colwise().sum().transpose()).cwiseMax(0.0).matrix();
    pred.observed_variance = pred.latent_variance.array() + np.sigma2();
    return pred;
}

// Full posterior covariance over a query batch.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> exact_posterior_predict_full(
    const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y, const Eigen::MatrixXd& x_query,
    const KernelParams& kp, const NoiseParams& np, double jitter = default_jitter) {
    const Eigen::MatrixXd k_nn =
        cov_matrix(x_train, x_train, kp) +
        np.sigma2() * Eigen::MatrixXd::Identity(x_train.rows(), x_train.rows());
    const auto llt = chol_with_jitter(k_nn, kp.amplitude2(), jitter);
    const Eigen::MatrixXd k_qn = cov_matrix(x_query, x_train, kp);
    const Eigen::MatrixXd k_qq = cov_matrix(x_query, x_query, kp);
    const Eigen::MatrixXd w = llt.matrixL().solve(k_qn.transpose());
    return {k_qn * llt.solve(y), k_qq - w.transpose() * w};
}

// log N(y | 0, K_nn + s2 I) via Cholesky; no explicit inverse or determinant.
inline double log_marginal(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y,
                           const KernelParams& kp, const NoiseParams& np,
                           double jitter = default_jitter) {
    const Eigen::Index n = x_train.rows();
    const Eigen::MatrixXd k_nn = cov_matrix(x_train, x_train, kp) +
                                 np.sigma2() * Eigen::MatrixXd::Identity(n, n);
    const auto llt = chol_with_jitter(k_nn, kp.amplitude2(), jitter);
    const Eigen::VectorXd alpha = llt.solve(y);
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * y.dot(alpha) - 0.5 * log_det -
           0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

// Gradient of log_marginal over [log_amplitude, log_lengthscales..., log_sigma2]
// via 0.5 * tr((beta beta^T - A^-1) dA/dtheta). The jitter term scales with
// amp^2 and is part of the derivative, matching what finite differences see.
inline Eigen::VectorXd log_marginal_grad(const Eigen::MatrixXd& x_train, const Eigen::VectorXd& y,
                                         const KernelParams& kp, const NoiseParams& np,
                                         double jitter = default_jitter) {
    const Eigen::Index n = x_train.rows();
    const auto ev = matern32_eval(x_train, x_train, kp);
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd a_sys = ev.K + (np.sigma2() + jitter * kp.amplitude2()) * identity;

    Eigen::LLT<Eigen::MatrixXd> llt(a_sys);
    if (llt.info() != Eigen::Success)
        throw numerical_error("log_marginal_grad: Cholesky failed at base jitter");
    const Eigen::VectorXd beta = llt.solve(y);
    const Eigen::MatrixXd a_inv = llt.solve(identity);
    const Eigen::MatrixXd r = beta * beta.transpose() - a_inv;  // 0.5 * tr(R dA)

    const Eigen::Index n_ls = kp.log_lengthscales.size();
    Eigen::VectorXd grad(1 + n_ls + 1);
    const Eigen::MatrixXd d_amp = 2.0 * (ev.K + jitter * kp.amplitude2() * identity);
    grad(0) = 0.5 * r.cwiseProduct(d_amp).sum();
    if (!kp.ard()) {
        const Eigen::MatrixXd d_ls = 3.0 * ev.E.cwiseProduct(ev.D.cwiseProduct(ev.D));
        grad(1) = 0.5 * r.cwiseProduct(d_ls).sum();
    } else {
        for (Eigen::Index j = 0; j < n_ls; ++j) {
            const Eigen::MatrixXd d_ls = 3.0 * ev.E.cwiseProduct(scaled_sqdiff(x_train, x_train, kp, j));
            grad(1 + j) = 0.5 * r.cwiseProduct(d_ls).sum();
        }
    }
    grad(1 + n_ls) = 0.5 * np.sigma2() * r.trace();
    return grad;
}

}  // namespace scgp
