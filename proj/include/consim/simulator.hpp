#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "consim/channel.hpp"

namespace consim {

// Initial function on [-tau, 0]: phi(theta) = value + slope * theta.
// The state at t = 0 is `value`.
struct HistorySpec {
    double value = 0.0;
    double slope = 0.0;
};

struct SimConfig {
    double coupling_gain = 1.0;      // K > 0
    std::vector<double> c;           // per-node positive coefficients
    std::vector<double> u;           // per-node inputs u_i = g_i(y_i)
    double sample_time = 0.01;       // T > 0, seconds
    int horizon = 10000;             // steps to integrate
    std::vector<HistorySpec> history; // empty means all-zero histories
    double epsilon_settle = 1e-9;
    double epsilon_consensus = 1e-9;
    int window = 50;                 // settle/limit averaging window, steps
    double stability_margin = 0.5;   // bound on K*T*deg_in/c_i
    double divergence_limit = 1e12;  // abort when any |x_i| passes this

    // Throws std::invalid_argument naming the offending field.
    void validate(int node_count) const;

    SimConfig with_inputs(std::vector<double> new_u) const;
    SimConfig with_coefficients(std::vector<double> new_c) const;
};

struct Trajectory {
    int node_count = 0;
    int horizon = 0;
    double sample_time = 0.0;
    std::vector<double> times;  // horizon+1 entries, k*T
    std::vector<double> states; // node-major, node_count x (horizon+1)
    std::vector<double> derivs; // node-major, node_count x horizon
    // First step where the derivative spread is below epsilon_consensus and
    // every node's derivative moved less than epsilon_settle over `window`.
    std::optional<int> converged_at;
    // Mean derivative of each node over the final `window` steps.
    std::vector<double> per_node_limit;

    double state(int node, int step) const {
        return states[static_cast<size_t>(node) * (horizon + 1) + step];
    }
    double deriv(int node, int step) const {
        return derivs[static_cast<size_t>(node) * horizon + step];
    }
    double limit_mean() const;
};

struct StabilityBound {
    double max_in_degree = 0.0;      // max_i sum_j sum_l |a_ij^(l)|
    std::vector<double> kt_product;  // (K/c_i) * T * sum_j sum_l |a_ij^(l)|
    double margin = 0.5;
    bool ok = false;                 // max kt_product < margin
};

struct QuantizationReport {
    double max_abs_error = 0.0; // seconds
    int max_lag_samples = 0;    // D_max
};

class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::string message, int step, int node, double value)
        : std::runtime_error(std::move(message)), step(step), node(node), value(value) {}

    int step;
    int node;
    double value;
};

// Rounds every path delay to the nearest integer multiple of sample_time.
std::pair<NetworkModel, QuantizationReport> quantize_delays(const NetworkModel& network,
                                                            double sample_time);

// The discretization keeps K*T*deg_in/c_i per node; the forward-difference
// step is safe well below 1. Negative amplitudes enter with their absolute
// value, which is the conservative reading.
StabilityBound check_step_stability(const NetworkModel& network, const SimConfig& config);

// Forward-difference integration of the delayed interaction dynamics:
//   x_i[k+1] = x_i[k] + T * ( u_i + (K/c_i) sum_j sum_l a_ij^(l) (x_j[k-d_ij^(l)] - x_i[k]) )
// History functions supply x_j at negative steps. The reported derivative
// is the exact discrete right-hand side, not a finite difference of the
// stored states. Requires delays already quantized to multiples of T.
Trajectory simulate(const NetworkModel& network, const SimConfig& config);

} // namespace consim
