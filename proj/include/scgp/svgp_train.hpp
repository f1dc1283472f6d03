#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "scgp/adam.hpp"
#include "scgp/dataset.hpp"
#include "scgp/rng.hpp"
#include "scgp/svgp.hpp"

namespace scgp {

struct TrainResult {
    SvgpModel model;
    std::vector<double> elbo_trace;  // stochastic estimate per iteration
};

// Adam ascent on the minibatch ELBO over seeded random batches. Deterministic
// under a fixed config: batch draws come from their own substream.
inline TrainResult train(const RegressionDataset& dataset, const TrainConfig& cfg) {
    TrainResult result;
    result.model = init_model(dataset, cfg);
    SvgpModel& model = result.model;

    const Eigen::Index n = dataset.inputs.rows();
    const Eigen::MatrixXd x_std = model.input_stats.apply(dataset.inputs);
    const Eigen::VectorXd y_std = model.output_stats.apply(dataset.targets);
    const Eigen::Index batch_size = std::min<Eigen::Index>(cfg.minibatch_size, n);

    Rng batch_rng = make_stream(cfg.seed, 1);
    Eigen::VectorXd params = pack_params(model);
    AdamState adam(params.size());
    Eigen::MatrixXd x_batch(batch_size, x_std.cols());
    Eigen::VectorXd y_batch(batch_size);

    result.elbo_trace.reserve(static_cast<std::size_t>(cfg.iterations));
    for (int it = 0; it < cfg.iterations; ++it) {
        const auto idx = sample_without_replacement(static_cast<std::size_t>(n),
                                                    static_cast<std::size_t>(batch_size), batch_rng);
        for (Eigen::Index i = 0; i < batch_size; ++i) {
            x_batch.row(i) = x_std.row(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
            y_batch(i) = y_std(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]));
        }
        const auto eg = elbo_with_grad(model, x_batch, y_batch, static_cast<double>(n));
        if (!std::isfinite(eg.parts.value)) {
            throw numerical_error("train: non-finite ELBO at iteration " + std::to_string(it) +
                                  " (|params| = " + std::to_string(params.norm()) + ")");
        }
        result.elbo_trace.push_back(eg.parts.value);
        adam_step(params, eg.grad, adam, cfg.learning_rate, /*ascend=*/true);
        unpack_params(model, params);
    }
    return result;
}

}  // namespace scgp
