#include "consim/protocol.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "consim/digraph.hpp"

namespace consim {

namespace {

std::vector<double> laplacian_gamma(const NetworkModel& network) {
    return laplacian(build_digraph(network)).gamma;
}

void require_converged(const Trajectory& traj, const std::string& run_name) {
    if (!traj.converged_at)
        throw std::runtime_error("protocol: the " + run_name +
                                 " run did not converge; increase the horizon or check the "
                                 "network conditions");
}

} // namespace

CompensationResult compensate(const NetworkModel& network, const SimConfig& config) {
    const std::vector<double> gamma = laplacian_gamma(network); // throws NonQscError when not QSC

    CompensationResult result;
    result.run_y = simulate(network, config);
    result.run_ones =
        simulate(network, config.with_inputs(std::vector<double>(network.node_count, 1.0)));
    require_converged(result.run_y, "input (y)");
    require_converged(result.run_ones, "all-ones");

    result.alpha_y = result.run_y.limit_mean();
    result.alpha_ones = result.run_ones.limit_mean();
    if (std::abs(result.alpha_ones) < 1e-12)
        throw std::runtime_error("compensate: the all-ones normalization run converged to ~0 "
                                 "(|alpha(1)| < 1e-12); the ratio is degenerate");
    result.ratio = result.alpha_y / result.alpha_ones;

    double num = 0.0, den = 0.0;
    for (int i = 0; i < network.node_count; ++i) {
        num += gamma[static_cast<size_t>(i)] * config.c[static_cast<size_t>(i)] *
               config.u[static_cast<size_t>(i)];
        den += gamma[static_cast<size_t>(i)] * config.c[static_cast<size_t>(i)];
    }
    result.predicted_ratio = num / den;

    const int horizon = result.run_y.horizon;
    result.ratio_timeseries.assign(static_cast<size_t>(network.node_count) * horizon, 0.0);
    for (int i = 0; i < network.node_count; ++i)
        for (int k = 0; k < horizon; ++k) {
            const double denom = result.run_ones.deriv(i, k);
            result.ratio_timeseries[static_cast<size_t>(i) * horizon + k] =
                std::abs(denom) > 1e-300 ? result.run_y.deriv(i, k) / denom
                                         : std::numeric_limits<double>::quiet_NaN();
        }
    return result;
}

GammaEstimate estimate_gamma(const NetworkModel& network, const SimConfig& config) {
    laplacian_gamma(network); // QSC gate

    const int n = network.node_count;
    config.validate(n);

    // All estimation runs use c = 1: the ratio alpha(e_i)/alpha(1) then
    // equals gamma_i / sum_k gamma_k exactly, independent of the caller's
    // coefficients (which are restored by simply not touching them).
    const SimConfig base = config.with_coefficients(std::vector<double>(n, 1.0));

    GammaEstimate estimate;
    estimate.runs_used = n + 1;

    const Trajectory ones_run = simulate(network, base.with_inputs(std::vector<double>(n, 1.0)));
    require_converged(ones_run, "all-ones normalization");
    estimate.alpha_ones = ones_run.limit_mean();
    if (std::abs(estimate.alpha_ones) < 1e-12)
        throw std::runtime_error("estimate_gamma: degenerate all-ones run (|alpha(1)| < 1e-12)");

    estimate.alpha_unit.resize(static_cast<size_t>(n));
    estimate.gamma_tilde.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        std::vector<double> unit(static_cast<size_t>(n), 0.0);
        unit[static_cast<size_t>(i)] = 1.0;
        const Trajectory run = simulate(network, base.with_inputs(std::move(unit)));
        require_converged(run, "canonical e_" + std::to_string(i));
        estimate.alpha_unit[static_cast<size_t>(i)] = run.limit_mean();
        estimate.gamma_tilde[static_cast<size_t>(i)] =
            run.limit_mean() / estimate.alpha_ones;
    }

    // Clamp estimation noise (nodes outside the root SCC come out at ~0,
    // occasionally slightly negative) and renormalize over the support.
    double max_entry = 0.0;
    for (double v : estimate.gamma_tilde) max_entry = std::max(max_entry, v);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double& v = estimate.gamma_tilde[static_cast<size_t>(i)];
        if (v < 1e-6 * max_entry) v = 0.0;
        total += v;
    }
    for (int i = 0; i < n; ++i) {
        double& v = estimate.gamma_tilde[static_cast<size_t>(i)];
        v /= total;
        if (v > 0.0) estimate.support.push_back(i);
    }
    return estimate;
}

PipelineResult unbiased_pipeline(const NetworkModel& network, const SimConfig& config,
                                 const std::function<double(double)>& postmap) {
    PipelineResult result;
    result.gamma_estimate = estimate_gamma(network, config);

    // c_i <- c_i / gamma_tilde_i on the support; nodes with gamma_tilde = 0
    // keep their coefficient (they provably cannot contribute to the
    // consensus value, so the statistic covers the root SCC only).
    result.rescaled_c = config.c;
    for (int i : result.gamma_estimate.support)
        result.rescaled_c[static_cast<size_t>(i)] /=
            result.gamma_estimate.gamma_tilde[static_cast<size_t>(i)];

    result.compensation = compensate(network, config.with_coefficients(result.rescaled_c));
    result.statistic =
        postmap ? postmap(result.compensation.ratio) : result.compensation.ratio;
    return result;
}

} // namespace consim
