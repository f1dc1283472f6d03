#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "scgp/dataset.hpp"
#include "scgp/errors.hpp"
#include "scgp/gp_exact.hpp"
#include "scgp/kernel.hpp"
#include "scgp/rng.hpp"
#include "scgp/standardize.hpp"

namespace scgp {

// Mean-field Gaussian q(u) = N(m_u, diag(exp(log_s_u)^2)) over the inducing
// variables at rows of z. The inducing inputs are trainable.
struct VariationalParams {
    Eigen::MatrixXd z;        // M x d, standardized input space
    Eigen::VectorXd m_u;      // M
    Eigen::VectorXd log_s_u;  // M
};

struct TrainConfig {
    int m_inducing = 100;
    int iterations = 1000;
    double learning_rate = 0.01;
    int minibatch_size = 1024;
    std::uint64_t seed = 0;
    double jitter = default_jitter;
    bool ard = false;
};

// 2000 iterations for the 4-D parametrization, 1000 otherwise.
inline TrainConfig default_train_config(Task task) {
    TrainConfig cfg;
    cfg.iterations = (task == Task::III) ? 2000 : 1000;
    return cfg;
}

struct SvgpModel {
    Task task = Task::I;
    KernelParams kernel;
    NoiseParams noise;
    VariationalParams variational;
    Standardizer input_stats;
    OutputStats output_stats;
    double jitter = default_jitter;
    TrainConfig train_config;  // provenance

    int m_inducing() const { return static_cast<int>(variational.z.rows()); }
};

// Standardizers fitted, z a random subset of the standardized inputs plus a
// small jitter so coincident rows (shared grid times) separate.
inline SvgpModel init_model(const RegressionDataset& dataset, const TrainConfig& cfg) {
    const Eigen::Index n = dataset.inputs.rows();
    if (n == 0) throw std::invalid_argument("init_model: empty dataset");
    if (cfg.m_inducing < 1 || cfg.m_inducing > n)
        throw std::invalid_argument("init_model: need 1 <= M <= N");

    SvgpModel model;
    model.task = dataset.task;
    model.jitter = cfg.jitter;
    model.train_config = cfg;
    model.input_stats = Standardizer::fit(dataset.inputs);
    model.output_stats = OutputStats::fit(dataset.targets);

    model.kernel.log_amplitude = 0.0;
    model.kernel.log_lengthscales =
        Eigen::VectorXd::Zero(cfg.ard ? dataset.inputs.cols() : 1);
    model.noise.log_sigma2 = std::log(0.01);

    const Eigen::MatrixXd x_std = model.input_stats.apply(dataset.inputs);
    Rng rng = make_stream(cfg.seed, 0);
    const auto subset =
        sample_without_replacement(static_cast<std::size_t>(n), static_cast<std::size_t>(cfg.m_inducing), rng);

    const int m = cfg.m_inducing;
    model.variational.z.resize(m, dataset.inputs.cols());
    for (int i = 0; i < m; ++i) model.variational.z.row(i) = x_std.row(static_cast<Eigen::Index>(subset[static_cast<std::size_t>(i)]));
    for (int attempt = 0; attempt < 100; ++attempt) {
        Eigen::MatrixXd jittered = model.variational.z;
        for (Eigen::Index i = 0; i < jittered.rows(); ++i)
            for (Eigen::Index j = 0; j < jittered.cols(); ++j)
                jittered(i, j) += 1e-6 * draw_normal(rng, 0.0, 1.0);
        double min_sep = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < jittered.rows(); ++i)
            for (Eigen::Index j = i + 1; j < jittered.rows(); ++j)
                min_sep = std::min(min_sep, (jittered.row(i) - jittered.row(j)).norm());
        if (m == 1 || min_sep > 1e-8) {
            model.variational.z = jittered;
            break;
        }
        if (attempt == 99) throw numerical_error("init_model: could not separate inducing inputs");
    }

    model.variational.m_u = Eigen::VectorXd::Zero(m);
    model.variational.log_s_u = Eigen::VectorXd::Zero(m);
    return model;
}

struct ElboParts {
    double value = 0.0;
    double expected_loglik = 0.0;  // (n_total / batch) * sum of per-point terms
    double kl = 0.0;
};

namespace detail {

// Shared pieces of the sparse predictive marginals for a point set X:
//   A = K_xm K_mm^-1, mu = A m_u, q_n = a_n^T K_mm a_n (Nystrom part).
struct SparseMoments {
    Eigen::MatrixXd a;       // B x M
    Eigen::VectorXd mu;      // B
    Eigen::VectorXd q_diag;  // B
    KernelEval k_xm;
    Eigen::MatrixXd k_mm;    // jittered
    Eigen::LLT<Eigen::MatrixXd> llt_mm;
    KernelEval k_mm_eval;    // unjittered pieces (E, D) for gradients
};

inline SparseMoments sparse_moments(const KernelParams& kp, const Eigen::MatrixXd& z,
                                    const Eigen::VectorXd& m_u, const Eigen::MatrixXd& x,
                                    double jitter) {
    SparseMoments sm;
    sm.k_mm_eval = matern32_eval(z, z, kp);
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(z.rows(), z.rows());
    double j = jitter;
    for (;;) {
        sm.k_mm = sm.k_mm_eval.K + j * kp.amplitude2() * identity;
        sm.llt_mm.compute(sm.k_mm);
        if (sm.llt_mm.info() == Eigen::Success) break;
        j = (j == 0.0) ? default_jitter : j * 10.0;
        if (j > 1e-2) throw numerical_error("sparse_moments: K_mm Cholesky failed at jitter 1e-2");
    }
    sm.k_xm = matern32_eval(x, z, kp);
    const Eigen::MatrixXd w = sm.llt_mm.matrixL().solve(sm.k_xm.K.transpose());  // M x B
    sm.q_diag = w.array().square().colwise().sum().transpose();
    sm.a = sm.llt_mm.matrixU().solve(w).transpose();  // (L^-T W)^T = A
    sm.mu = sm.a * m_u;
    return sm;
}

}  // namespace detail

// KL[ N(m_u, S) || N(0, K_mm) ] for diagonal S, via one Cholesky of K_mm.
inline double kl_qu_pu(const KernelParams& kp, const VariationalParams& vp,
                       double jitter = default_jitter) {
    const Eigen::Index m = vp.z.rows();
    const Eigen::MatrixXd k_mm =
        cov_matrix(vp.z, vp.z, kp) + jitter * kp.amplitude2() * Eigen::MatrixXd::Identity(m, m);
    Eigen::LLT<Eigen::MatrixXd> llt(k_mm);
    if (llt.info() != Eigen::Success) throw numerical_error("kl_qu_pu: Cholesky failed");
    const Eigen::MatrixXd p = llt.solve(Eigen::MatrixXd::Identity(m, m));
    const Eigen::VectorXd s2 = (2.0 * vp.log_s_u.array()).exp();
    const double log_det_k = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    const double trace_term = (p.diagonal().array() * s2.array()).sum();
    const double quad = vp.m_u.dot(p * vp.m_u);
    const double log_det_s = 2.0 * vp.log_s_u.sum();
    return 0.5 * (trace_term + quad - static_cast<double>(m) + log_det_k - log_det_s);
}

// Full-covariance variant, used where q(u) is set analytically.
inline double kl_qu_pu_full(const KernelParams& kp, const Eigen::MatrixXd& z,
                            const Eigen::VectorXd& m_u, const Eigen::MatrixXd& s_full,
                            double jitter = default_jitter) {
    const Eigen::Index m = z.rows();
    const Eigen::MatrixXd k_mm =
        cov_matrix(z, z, kp) + jitter * kp.amplitude2() * Eigen::MatrixXd::Identity(m, m);
    Eigen::LLT<Eigen::MatrixXd> llt_k(k_mm);
    Eigen::LLT<Eigen::MatrixXd> llt_s(s_full);
    if (llt_k.info() != Eigen::Success || llt_s.info() != Eigen::Success)
        throw numerical_error("kl_qu_pu_full: Cholesky failed");
    const double log_det_k = 2.0 * llt_k.matrixLLT().diagonal().array().log().sum();
    const double log_det_s = 2.0 * llt_s.matrixLLT().diagonal().array().log().sum();
    const double trace_term = llt_k.solve(s_full).trace();
    const double quad = m_u.dot(llt_k.solve(m_u));
    return 0.5 * (trace_term + quad - static_cast<double>(m) + log_det_k - log_det_s);
}

namespace detail {

inline ElboParts elbo_impl(const KernelParams& kp, const NoiseParams& np, const Eigen::MatrixXd& z,
                           const Eigen::VectorXd& m_u, const Eigen::VectorXd* log_s_u,
                           const Eigen::MatrixXd* s_full, const Eigen::MatrixXd& x_batch,
                           const Eigen::VectorXd& y_batch, double n_total, double jitter) {
    const auto sm = sparse_moments(kp, z, m_u, x_batch, jitter);
    const double sigma2 = np.sigma2();

    Eigen::VectorXd t_diag;
    if (log_s_u) {
        const Eigen::VectorXd s2 = (2.0 * log_s_u->array()).exp();
        t_diag = sm.a.cwiseProduct(sm.a) * s2;
    } else {
        t_diag = ((sm.a * *s_full).array() * sm.a.array()).rowwise().sum();
    }
    const Eigen::ArrayXd v = kp.amplitude2() - sm.q_diag.array() + t_diag.array();
    const Eigen::ArrayXd err = y_batch.array() - sm.mu.array();

    const double scale = n_total / static_cast<double>(x_batch.rows());
    ElboParts parts;
    parts.expected_loglik =
        scale * (-0.5 * std::log(2.0 * std::numbers::pi * sigma2) * static_cast<double>(x_batch.rows()) -
                 0.5 / sigma2 * (err.square() + v).sum());
    VariationalParams vp_tmp;
    if (log_s_u) {
        vp_tmp.z = z;
        vp_tmp.m_u = m_u;
        vp_tmp.log_s_u = *log_s_u;
        parts.kl = kl_qu_pu(kp, vp_tmp, jitter);
    } else {
        parts.kl = kl_qu_pu_full(kp, z, m_u, *s_full, jitter);
    }
    parts.value = parts.expected_loglik - parts.kl;
    return parts;
}

}  // namespace detail

// Stochastic ELBO estimate: the batch likelihood term is rescaled by
// n_total / batch so the full-data bound is estimated without bias.
inline ElboParts elbo(const SvgpModel& model, const Eigen::MatrixXd& x_batch,
                      const Eigen::VectorXd& y_batch, double n_total) {
    if (x_batch.rows() == 0) throw std::invalid_argument("elbo: empty batch");
    return detail::elbo_impl(model.kernel, model.noise, model.variational.z, model.variational.m_u,
                             &model.variational.log_s_u, nullptr, x_batch, y_batch, n_total,
                             model.jitter);
}

// Full-covariance q(u) variant (tests use this with the analytically optimal q).
inline ElboParts elbo_full_s(const KernelParams& kp, const NoiseParams& np, const Eigen::MatrixXd& z,
                             const Eigen::VectorXd& m_u, const Eigen::MatrixXd& s_full,
                             const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double n_total,
                             double jitter) {
    return detail::elbo_impl(kp, np, z, m_u, nullptr, &s_full, x, y, n_total, jitter);
}

// Flat parameter vector layout used by the optimizer and gradient checks:
// [log_amplitude, log_lengthscales, log_sigma2, m_u, log_s_u, vec(z) row-major]
inline Eigen::VectorXd pack_params(const SvgpModel& model) {
    const Eigen::Index n_ls = model.kernel.log_lengthscales.size();
    const Eigen::Index m = model.variational.z.rows();
    const Eigen::Index d = model.variational.z.cols();
    Eigen::VectorXd v(1 + n_ls + 1 + 2 * m + m * d);
    Eigen::Index at = 0;
    v(at++) = model.kernel.log_amplitude;
    v.segment(at, n_ls) = model.kernel.log_lengthscales;
    at += n_ls;
    v(at++) = model.noise.log_sigma2;
    v.segment(at, m) = model.variational.m_u;
    at += m;
    v.segment(at, m) = model.variational.log_s_u;
    at += m;
    for (Eigen::Index i = 0; i < m; ++i, at += d) v.segment(at, d) = model.variational.z.row(i);
    return v;
}

inline void unpack_params(SvgpModel& model, const Eigen::VectorXd& v) {
    const Eigen::Index n_ls = model.kernel.log_lengthscales.size();
    const Eigen::Index m = model.variational.z.rows();
    const Eigen::Index d = model.variational.z.cols();
    Eigen::Index at = 0;
    model.kernel.log_amplitude = v(at++);
    model.kernel.log_lengthscales = v.segment(at, n_ls);
    at += n_ls;
    model.noise.log_sigma2 = v(at++);
    model.variational.m_u = v.segment(at, m);
    at += m;
    model.variational.log_s_u = v.segment(at, m);
    at += m;
    for (Eigen::Index i = 0; i < m; ++i, at += d) model.variational.z.row(i) = v.segment(at, d).transpose();
}

struct ElboWithGrad {
    ElboParts parts;
    Eigen::VectorXd grad;  // pack_params layout
};

// Analytic ELBO gradient. Adjoints are accumulated on K_mm (jitter included,
// so the amp^2-scaled jitter is differentiated too), K_xm and the diagonal,
// then contracted with the Matern derivative stencils.
inline ElboWithGrad elbo_with_grad(const SvgpModel& model, const Eigen::MatrixXd& x_batch,
                                   const Eigen::VectorXd& y_batch, double n_total) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    if (x_batch.rows() == 0) throw std::invalid_argument("elbo_with_grad: empty batch");

    const KernelParams& kp = model.kernel;
    const VariationalParams& vp = model.variational;
    const double sigma2 = model.noise.sigma2();
    const Eigen::Index b = x_batch.rows();
    const Eigen::Index m = vp.z.rows();
    const Eigen::Index d = vp.z.cols();
    const double scale = n_total / static_cast<double>(b);

    const auto sm = detail::sparse_moments(kp, vp.z, vp.m_u, x_batch, model.jitter);
    const MatrixXd identity_m = MatrixXd::Identity(m, m);
    const MatrixXd p = sm.llt_mm.solve(identity_m);  // K_mm^-1

    const VectorXd s2 = (2.0 * vp.log_s_u.array()).exp();
    const VectorXd t_diag = sm.a.cwiseProduct(sm.a) * s2;
    const VectorXd v = (kp.amplitude2() - sm.q_diag.array() + t_diag.array()).matrix();
    const VectorXd err = y_batch - sm.mu;

    ElboWithGrad out;
    const double log_det_k = 2.0 * sm.llt_mm.matrixLLT().diagonal().array().log().sum();
    const double kl = 0.5 * ((p.diagonal().array() * s2.array()).sum() + vp.m_u.dot(p * vp.m_u) -
                             static_cast<double>(m) + log_det_k - 2.0 * vp.log_s_u.sum());
    out.parts.expected_loglik =
        scale * (-0.5 * std::log(2.0 * std::numbers::pi * sigma2) * static_cast<double>(b) -
                 0.5 / sigma2 * (err.array().square() + v.array()).sum());
    out.parts.kl = kl;
    out.parts.value = out.parts.expected_loglik - kl;

    // Likelihood-term adjoints.
    const VectorXd g_mu = (scale / sigma2) * err;           // dL/dmu
    const double g_v = -0.5 * scale / sigma2;               // dL/dv_n (same for all n)
    const double g_log_sigma2 =
        scale * (-0.5 * static_cast<double>(b) + 0.5 / sigma2 * (err.array().square() + v.array()).sum());

    VectorXd g_m_u = sm.a.transpose() * g_mu;
    VectorXd g_log_s = VectorXd::Zero(m);
    {
        const VectorXd col_sq = sm.a.cwiseProduct(sm.a).colwise().sum().transpose() * g_v;
        g_log_s += 2.0 * col_sq.cwiseProduct(s2);
    }

    // Adjoint on A from mu and from v_n = amp^2 - a^T K a + a^T S a.
    MatrixXd g_a = g_mu * vp.m_u.transpose();
    g_a.noalias() += (2.0 * g_v) * (sm.a * s2.asDiagonal() - sm.a * sm.k_mm);

    MatrixXd g_kmm = (-g_v) * (sm.a.transpose() * sm.a);  // from -a^T K a
    const double g_kdiag_sum = g_v * static_cast<double>(b);  // dL/d(amp^2 diag), summed

    // A = K_xm K_mm^-1 backward.
    const MatrixXd h = sm.llt_mm.solve(g_a.transpose()).transpose();  // G K_mm^-1
    MatrixXd g_kxm = h;
    g_kmm.noalias() -= sm.a.transpose() * h;

    // KL adjoints (ELBO subtracts KL).
    g_m_u.noalias() -= p * vp.m_u;
    g_log_s -= ((p.diagonal().array() * s2.array()) - 1.0).matrix();
    {
        const MatrixXd pm = p * vp.m_u * (p * vp.m_u).transpose();
        const MatrixXd psp = p * s2.asDiagonal() * p;
        g_kmm -= 0.5 * (p - psp - pm);
    }

    // Kernel-parameter contraction. Every entry of K_mm (jitter included) and
    // K_xm scales with amp^2, so dlog_amp collects 2 * <gK, K>.
    double g_log_amp = 2.0 * (g_kmm.cwiseProduct(sm.k_mm).sum() + g_kxm.cwiseProduct(sm.k_xm.K).sum()) +
                       2.0 * kp.amplitude2() * g_kdiag_sum;

    const Eigen::Index n_ls = kp.log_lengthscales.size();
    VectorXd g_log_ls(n_ls);
    if (!kp.ard()) {
        g_log_ls(0) =
            3.0 * (g_kmm.cwiseProduct(sm.k_mm_eval.E.cwiseProduct(sm.k_mm_eval.D.array().square().matrix()))
                       .sum() +
                   g_kxm.cwiseProduct(sm.k_xm.E.cwiseProduct(sm.k_xm.D.array().square().matrix())).sum());
    } else {
        for (Eigen::Index j = 0; j < n_ls; ++j) {
            g_log_ls(j) =
                3.0 * (g_kmm.cwiseProduct(sm.k_mm_eval.E.cwiseProduct(scaled_sqdiff(vp.z, vp.z, kp, j))).sum() +
                       g_kxm.cwiseProduct(sm.k_xm.E.cwiseProduct(scaled_sqdiff(x_batch, vp.z, kp, j))).sum());
        }
    }

    // Inducing-input gradients: dk(x, z_j)/dz_jk = 3 E (x_k - z_jk) / l_k^2.
    MatrixXd g_z = MatrixXd::Zero(m, d);
    const MatrixXd t_mm = 3.0 * (g_kmm + g_kmm.transpose()).cwiseProduct(sm.k_mm_eval.E);
    const MatrixXd f_bm = 3.0 * g_kxm.cwiseProduct(sm.k_xm.E);
    const VectorXd t_row_sum = t_mm.rowwise().sum();
    const VectorXd f_col_sum = f_bm.colwise().sum().transpose();
    for (Eigen::Index k = 0; k < d; ++k) {
        const double inv_l2 = 1.0 / (kp.lengthscale(k) * kp.lengthscale(k));
        const VectorXd zk = vp.z.col(k);
        const VectorXd xk = x_batch.col(k);
        g_z.col(k) = inv_l2 * ((t_mm * zk - t_row_sum.cwiseProduct(zk)) +
                               (f_bm.transpose() * xk - f_col_sum.cwiseProduct(zk)));
    }

    out.grad.resize(1 + n_ls + 1 + 2 * m + m * d);
    Eigen::Index at = 0;
    out.grad(at++) = g_log_amp;
    out.grad.segment(at, n_ls) = g_log_ls;
    at += n_ls;
    out.grad(at++) = g_log_sigma2;
    out.grad.segment(at, m) = g_m_u;
    at += m;
    out.grad.segment(at, m) = g_log_s;
    at += m;
    for (Eigen::Index i = 0; i < m; ++i, at += d) out.grad.segment(at, d) = g_z.row(i);
    return out;
}

struct SparsePrediction {
    Eigen::VectorXd mean;               // mm
    Eigen::VectorXd latent_variance;    // mm^2
    Eigen::VectorXd observed_variance;  // mm^2, latent + noise
};

// Predictive marginals in standardized space for an already-standardized
// query batch; the core shared by model predictions and the full-S tests.
inline SparsePrediction sparse_predict_std(const KernelParams& kp, const NoiseParams& np,
                                           const Eigen::MatrixXd& z, const Eigen::VectorXd& m_u,
                                           const Eigen::VectorXd* log_s_u, const Eigen::MatrixXd* s_full,
                                           const Eigen::MatrixXd& x_query, double jitter) {
    const auto sm = detail::sparse_moments(kp, z, m_u, x_query, jitter);
    Eigen::VectorXd t_diag;
    if (log_s_u) {
        const Eigen::VectorXd s2 = (2.0 * log_s_u->array()).exp();
        t_diag = sm.a.cwiseProduct(sm.a) * s2;
    } else {
        t_diag = ((sm.a * *s_full).array() * sm.a.array()).rowwise().sum();
    }
    SparsePrediction pred;
    pred.mean = sm.mu;
    pred.latent_variance =
        (kp.amplitude2() - sm.q_diag.array() + t_diag.array()).cwiseMax(0.0).matrix();
    pred.observed_variance = pred.latent_variance.array() + np.sigma2();
    return pred;
}

inline SparsePrediction sparse_predict_full_s(const KernelParams& kp, const NoiseParams& np,
                                              const Eigen::MatrixXd& z, const Eigen::VectorXd& m_u,
                                              const Eigen::MatrixXd& s_full, const Eigen::MatrixXd& x_query,
                                              double jitter) {
    return sparse_predict_std(kp, np, z, m_u, nullptr, &s_full, x_query, jitter);
}

// Model predictions at raw (mm/physical units) query inputs.
inline SparsePrediction predict(const SvgpModel& model, const Eigen::MatrixXd& x_query) {
    if (x_query.cols() != task_dim(model.task))
        throw std::invalid_argument("predict: query dimension does not match task " +
                                    task_name(model.task));
    const Eigen::MatrixXd xq = model.input_stats.apply(x_query);
    SparsePrediction pred =
        sparse_predict_std(model.kernel, model.noise, model.variational.z, model.variational.m_u,
                           &model.variational.log_s_u, nullptr, xq, model.jitter);
    const double ys = model.output_stats.std;
    pred.mean = pred.mean.array() * ys + model.output_stats.mean;
    pred.latent_variance *= ys * ys;
    pred.observed_variance *= ys * ys;
    return pred;
}

}  // namespace scgp
