#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "consim/channel.hpp"
#include "consim/simulator.hpp"

namespace consim {

// Closed-form synchronized derivative
//   alpha = sum_i gamma_i c_i u_i /
//           ( sum_i gamma_i c_i + K sum_i gamma_i sum_j sum_l a_ij^(l) tau_ij^(l) )
// evaluated once with the original delays and once with delays rounded to
// multiples of the sampling time (the value the discrete simulator realizes).
struct AlphaStar {
    double with_exact_delays = 0.0;
    double with_quantized_delays = 0.0;
};

AlphaStar alpha_star(const NetworkModel& network, const std::vector<double>& gamma,
                     const SimConfig& config);

// Characteristic function p(s) = det(sI + Delta - H(s)) with
// Delta = diag((K/c_i) * deg_in(v_i)) and
// [H(s)]_ij = (K/c_i) sum_l a_ij^(l) exp(-s tau_ij^(l)), zero diagonal.
// Every QSC network has p(0) = 0.
std::complex<double> characteristic_value(const NetworkModel& network, const SimConfig& config,
                                          std::complex<double> s);

// Matrix-level view of the channel row-sum bound: the spectral radius of
// (jwI + Delta)^-1 H(jw) is below max_r sum_q |H_rq(jw)| / sum_q H_rq(0),
// so bound <= 1 on the sweep certifies the nonzero characteristic roots
// stay in the open left half plane. Sufficient only.
struct SpectralBoundReport {
    double max_ratio = 0.0;
    double argmax_omega = 0.0;
    bool holds = false;
    double omega_max = 0.0;
    int omega_steps = 0;
};

SpectralBoundReport sufficient_spectral_check(const NetworkModel& network, const SimConfig& config,
                                              double omega_max, int omega_steps);

// Least-squares decay rate of ln(max_i |xdot_i[k] - alpha|) between 10%
// into the transient and the point where the residual reaches either
// 100*eps*|alpha| or the convergence step. Positive, per second.
double rate_empirical(const Trajectory& trajectory, double alpha_theory);

// Spectrum of the one-step map over stacked delayed states of the
// homogeneous system. The known eigenvalue 1 (consensus direction, all
// stacked copies equal) is deflated by projection; block power iteration
// then yields the second-largest modulus, which sets the decay rate
// -ln|lambda_2| / T of the discretized system.
struct CompanionSpectrum {
    int dimension = 0;                    // node_count * (D_max + 1)
    double unit_eigenvalue_residual = 0.0;
    double second_modulus = 0.0;
    double decay_rate = 0.0;              // per second
};

CompanionSpectrum rate_spectral(const NetworkModel& network, const SimConfig& config,
                                int dimension_cap = 4000);

// Theory-versus-simulation summary for one run.
struct ConsensusReport {
    bool qsc = false;
    std::vector<double> gamma;                   // empty when not QSC
    std::optional<double> alpha_theory;          // quantized delays
    std::optional<double> alpha_theory_exact;    // original delays
    std::vector<double> per_node_empirical;
    std::optional<double> relative_error;        // vs alpha_theory
    bool converged = false;
    std::optional<int> converged_at;
    std::optional<double> rate_empirical;        // per second
    std::optional<double> rate_spectral;         // per second
    std::vector<std::string> notes;
};

// relative_error uses a 1e-12 denominator floor so alpha = 0 stays defined.
double relative_error_vs(double empirical_mean, double alpha_theory);

// Assembles the report for a simulated run; `original` carries the
// unquantized delays, `quantized` the network that was integrated. Rate
// estimation failures are recorded as notes instead of propagating.
ConsensusReport build_consensus_report(const NetworkModel& original, const NetworkModel& quantized,
                                       const SimConfig& config, const Trajectory& trajectory,
                                       bool with_rates);

} // namespace consim
