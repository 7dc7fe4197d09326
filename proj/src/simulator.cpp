#include "consim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace consim {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw std::invalid_argument(message);
}

// Integer lag of a quantized path delay; rejects delays that are not
// multiples of the sampling time (run quantize_delays first).
int lag_samples(double delay, double sample_time) {
    const double steps = delay / sample_time;
    const long long lag = std::llround(steps);
    if (std::abs(steps - static_cast<double>(lag)) > 1e-9)
        throw std::invalid_argument("path delay " + std::to_string(delay) +
                                    " is not a multiple of the sampling time; quantize first");
    return static_cast<int>(lag);
}

struct CouplingTerm {
    int transmitter;
    int lag;
    double amplitude;
};

} // namespace

void SimConfig::validate(int node_count) const {
    require(coupling_gain > 0.0, "sim.K: coupling gain must be positive");
    require(sample_time > 0.0, "sim.T: sampling time must be positive");
    require(static_cast<int>(c.size()) == node_count, "inputs.c: expected length " +
                                                          std::to_string(node_count) + ", got " +
                                                          std::to_string(c.size()));
    require(static_cast<int>(u.size()) == node_count, "inputs.u: expected length " +
                                                          std::to_string(node_count) + ", got " +
                                                          std::to_string(u.size()));
    for (size_t i = 0; i < c.size(); ++i)
        require(c[i] > 0.0 && std::isfinite(c[i]),
                "inputs.c[" + std::to_string(i) + "]: must be positive and finite");
    for (size_t i = 0; i < u.size(); ++i)
        require(std::isfinite(u[i]), "inputs.u[" + std::to_string(i) + "]: must be finite");
    require(window >= 2, "sim.window: must be >= 2");
    require(horizon >= window, "sim.horizon: must be >= window");
    require(history.empty() || static_cast<int>(history.size()) == node_count,
            "sim.history: expected length " + std::to_string(node_count) + ", got " +
                std::to_string(history.size()));
    require(epsilon_settle > 0.0, "sim.epsilon_settle: must be positive");
    require(epsilon_consensus > 0.0, "sim.epsilon_consensus: must be positive");
    require(stability_margin > 0.0, "sim.stability_margin: must be positive");
}

SimConfig SimConfig::with_inputs(std::vector<double> new_u) const {
    SimConfig out = *this;
    out.u = std::move(new_u);
    return out;
}

SimConfig SimConfig::with_coefficients(std::vector<double> new_c) const {
    SimConfig out = *this;
    out.c = std::move(new_c);
    return out;
}

double Trajectory::limit_mean() const {
    double sum = 0.0;
    for (double v : per_node_limit) sum += v;
    return sum / static_cast<double>(per_node_limit.size());
}

std::pair<NetworkModel, QuantizationReport> quantize_delays(const NetworkModel& network,
                                                            double sample_time) {
    require(sample_time > 0.0, "quantize_delays: sample_time must be positive");

    NetworkModel out = network;
    QuantizationReport report;
    for (MultipathChannel& ch : out.channels) {
        for (Path& p : ch.paths) {
            const long long lag = std::llround(p.delay / sample_time); // nearest, ties away from 0
            const double quantized = static_cast<double>(lag) * sample_time;
            report.max_abs_error = std::max(report.max_abs_error, std::abs(p.delay - quantized));
            report.max_lag_samples = std::max(report.max_lag_samples, static_cast<int>(lag));
            p.delay = quantized;
        }
    }
    return {std::move(out), report};
}

StabilityBound check_step_stability(const NetworkModel& network, const SimConfig& config) {
    config.validate(network.node_count);

    StabilityBound bound;
    bound.margin = config.stability_margin;
    bound.kt_product.assign(static_cast<size_t>(network.node_count), 0.0);

    std::vector<double> abs_in_degree(static_cast<size_t>(network.node_count), 0.0);
    for (const MultipathChannel& ch : network.channels)
        for (const Path& p : ch.paths)
            abs_in_degree[static_cast<size_t>(ch.receiver)] += std::abs(p.amplitude);

    double worst = 0.0;
    for (int i = 0; i < network.node_count; ++i) {
        bound.max_in_degree = std::max(bound.max_in_degree, abs_in_degree[static_cast<size_t>(i)]);
        const double kt = config.coupling_gain / config.c[static_cast<size_t>(i)] *
                          config.sample_time * abs_in_degree[static_cast<size_t>(i)];
        bound.kt_product[static_cast<size_t>(i)] = kt;
        worst = std::max(worst, kt);
    }
    bound.ok = worst < bound.margin;
    return bound;
}

Trajectory simulate(const NetworkModel& network, const SimConfig& config) {
    const int n = network.node_count;
    config.validate(n);

    const double T = config.sample_time;
    const int horizon = config.horizon;

    // Per-receiver coupling terms; all incoming edges index the
    // transmitter's single state history.
    std::vector<std::vector<CouplingTerm>> terms(static_cast<size_t>(n));
    for (const MultipathChannel& ch : network.channels)
        for (const Path& p : ch.paths)
            terms[static_cast<size_t>(ch.receiver)].push_back(
                {ch.transmitter, lag_samples(p.delay, T), p.amplitude});

    std::vector<HistorySpec> history = config.history;
    if (history.empty()) history.assign(static_cast<size_t>(n), HistorySpec{});

    Trajectory traj;
    traj.node_count = n;
    traj.horizon = horizon;
    traj.sample_time = T;
    traj.times.resize(static_cast<size_t>(horizon) + 1);
    for (int k = 0; k <= horizon; ++k) traj.times[static_cast<size_t>(k)] = k * T;
    traj.states.assign(static_cast<size_t>(n) * (horizon + 1), 0.0);
    traj.derivs.assign(static_cast<size_t>(n) * horizon, 0.0);

    const auto state_at = [&](int node, int step) -> double {
        if (step >= 0) return traj.states[static_cast<size_t>(node) * (horizon + 1) + step];
        const HistorySpec& h = history[static_cast<size_t>(node)];
        return h.value + h.slope * (step * T);
    };

    for (int i = 0; i < n; ++i)
        traj.states[static_cast<size_t>(i) * (horizon + 1)] = history[static_cast<size_t>(i)].value;

    std::vector<double> gain(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        gain[static_cast<size_t>(i)] = config.coupling_gain / config.c[static_cast<size_t>(i)];

    for (int k = 0; k < horizon; ++k) {
        for (int i = 0; i < n; ++i) {
            const double xi = traj.states[static_cast<size_t>(i) * (horizon + 1) + k];
            double coupling = 0.0;
            for (const CouplingTerm& t : terms[static_cast<size_t>(i)])
                coupling += t.amplitude * (state_at(t.transmitter, k - t.lag) - xi);

            const double deriv = config.u[static_cast<size_t>(i)] + gain[static_cast<size_t>(i)] * coupling;
            traj.derivs[static_cast<size_t>(i) * horizon + k] = deriv;

            const double next = xi + T * deriv;
            if (!std::isfinite(next) || std::abs(next) > config.divergence_limit)
                throw DivergenceError("state diverged at step " + std::to_string(k + 1) +
                                          ", node " + std::to_string(i) + " (x = " +
                                          std::to_string(next) +
                                          "); check the step-stability bound",
                                      k + 1, i, next);
            traj.states[static_cast<size_t>(i) * (horizon + 1) + k + 1] = next;
        }

        // Consensus on the derivative: small spread now, and every node's
        // derivative stationary over the trailing window.
        if (!traj.converged_at && k >= config.window) {
            double lo = traj.derivs[static_cast<size_t>(0) * horizon + k];
            double hi = lo;
            bool settled = true;
            for (int i = 0; i < n; ++i) {
                const double d = traj.derivs[static_cast<size_t>(i) * horizon + k];
                lo = std::min(lo, d);
                hi = std::max(hi, d);
                if (std::abs(d - traj.derivs[static_cast<size_t>(i) * horizon + k - config.window]) >=
                    config.epsilon_settle)
                    settled = false;
            }
            if (hi - lo < config.epsilon_consensus && settled) traj.converged_at = k;
        }
    }

    traj.per_node_limit.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int k = horizon - config.window; k < horizon; ++k)
            sum += traj.derivs[static_cast<size_t>(i) * horizon + k];
        traj.per_node_limit[static_cast<size_t>(i)] = sum / config.window;
    }
    return traj;
}

} // namespace consim
