#pragma once

#include <functional>
#include <vector>

#include "consim/analysis.hpp"
#include "consim/channel.hpp"
#include "consim/simulator.hpp"

namespace consim {

// Two-run bias compensation: the consensus value of the input run divided
// by that of an all-ones run. Delay and amplitude terms cancel in the
// ratio, which therefore equals sum gamma_i c_i u_i / sum gamma_i c_i.
struct CompensationResult {
    double alpha_y = 0.0;         // empirical limit of the run with inputs u
    double alpha_ones = 0.0;      // empirical limit of the all-ones run
    double ratio = 0.0;           // alpha_y / alpha_ones
    double predicted_ratio = 0.0; // sum gamma c u / sum gamma c, for validation
    // Running per-node ratio xdot_i(t;y) / xdot_i(t;1), node-major
    // node_count x horizon; entries where the denominator is ~0 are NaN.
    std::vector<double> ratio_timeseries;
    Trajectory run_y;
    Trajectory run_ones;

    double ratio_at(int node, int step) const {
        return ratio_timeseries[static_cast<size_t>(node) * run_y.horizon + step];
    }
};

// Requires a QSC network (wants quantized delays, like simulate) and that
// both runs converge.
CompensationResult compensate(const NetworkModel& network, const SimConfig& config);

// Decentralized estimate of the normalized left null vector: one all-ones
// run plus one run per node with the canonical input e_i; each ratio
// alpha(e_i)/alpha(1) is that node's gamma_tilde_i. The c coefficients are
// forced to all-ones during the estimation runs so the ratio identity holds
// with heterogeneous caller coefficients; the caller's c is untouched.
struct GammaEstimate {
    std::vector<double> gamma_tilde; // nonnegative, sums to 1
    std::vector<int> support;        // nodes with gamma_tilde > 0
    int runs_used = 0;               // node_count + 1
    double alpha_ones = 0.0;
    std::vector<double> alpha_unit;  // per-node alpha(e_i)
};

GammaEstimate estimate_gamma(const NetworkModel& network, const SimConfig& config);

// estimate_gamma, then c_i <- c_i / gamma_tilde_i on the support, then
// compensate with the rescaled coefficients, then the optional scalar
// postmap. On strongly connected networks the statistic equals
// sum c_i u_i / sum c_i with the caller's original c.
struct PipelineResult {
    GammaEstimate gamma_estimate;
    std::vector<double> rescaled_c;
    CompensationResult compensation;
    double statistic = 0.0; // postmap(compensation.ratio)
};

PipelineResult unbiased_pipeline(const NetworkModel& network, const SimConfig& config,
                                 const std::function<double(double)>& postmap = {});

} // namespace consim
