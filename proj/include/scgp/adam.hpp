#pragma once

#include <cmath>

#include <Eigen/Core>

namespace scgp {

// Standard Adam with bias correction; `ascend` flips the update so the same
// state machine maximizes the ELBO.
struct AdamState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    explicit AdamState(Eigen::Index n)
        : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

inline void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, AdamState& state,
                      double lr, bool ascend = true) {
    ++state.t;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    const Eigen::VectorXd step =
        (state.m / c1).array() / ((state.v / c2).array().sqrt() + state.eps);
    params += (ascend ? lr : -lr) * step;
}

}  // namespace scgp
