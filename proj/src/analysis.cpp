#include "consim/analysis.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "consim/digraph.hpp"

namespace consim {

namespace {

double quantized(double delay, double sample_time) {
    return static_cast<double>(std::llround(delay / sample_time)) * sample_time;
}

} // namespace

AlphaStar alpha_star(const NetworkModel& network, const std::vector<double>& gamma,
                     const SimConfig& config) {
    const int n = network.node_count;
    config.validate(n);
    if (static_cast<int>(gamma.size()) != n)
        throw std::invalid_argument("alpha_star: gamma length does not match node count");

    double numerator = 0.0;
    double base = 0.0;
    for (int i = 0; i < n; ++i) {
        numerator += gamma[static_cast<size_t>(i)] * config.c[static_cast<size_t>(i)] *
                     config.u[static_cast<size_t>(i)];
        base += gamma[static_cast<size_t>(i)] * config.c[static_cast<size_t>(i)];
    }

    double delay_exact = 0.0;
    double delay_quant = 0.0;
    for (const MultipathChannel& ch : network.channels) {
        const double g = gamma[static_cast<size_t>(ch.receiver)];
        if (g == 0.0) continue;
        for (const Path& p : ch.paths) {
            delay_exact += g * p.amplitude * p.delay;
            delay_quant += g * p.amplitude * quantized(p.delay, config.sample_time);
        }
    }

    AlphaStar out;
    const double denom_exact = base + config.coupling_gain * delay_exact;
    const double denom_quant = base + config.coupling_gain * delay_quant;
    if (denom_exact <= 0.0 || denom_quant <= 0.0)
        throw std::runtime_error(
            "alpha_star: nonpositive denominator (sum gamma c = " + std::to_string(base) +
            ", K-weighted delay sum = " + std::to_string(config.coupling_gain * delay_exact) +
            "); the channel dc conditions are violated");
    out.with_exact_delays = numerator / denom_exact;
    out.with_quantized_delays = numerator / denom_quant;
    return out;
}

std::complex<double> characteristic_value(const NetworkModel& network, const SimConfig& config,
                                          std::complex<double> s) {
    const int n = network.node_count;
    config.validate(n);

    // M = sI + Delta - H(s)
    std::vector<std::complex<double>> m(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) m[static_cast<size_t>(i) * n + i] = s;
    for (const MultipathChannel& ch : network.channels) {
        const double ki = config.coupling_gain / config.c[static_cast<size_t>(ch.receiver)];
        std::complex<double> h{0.0, 0.0};
        double summed = 0.0;
        for (const Path& p : ch.paths) {
            h += p.amplitude * std::exp(-s * p.delay);
            summed += p.amplitude;
        }
        m[static_cast<size_t>(ch.receiver) * n + ch.transmitter] -= ki * h;
        m[static_cast<size_t>(ch.receiver) * n + ch.receiver] += ki * summed;
    }

    // Determinant by LU with partial pivoting.
    std::complex<double> det{1.0, 0.0};
    for (int col = 0; col < n; ++col) {
        int best = col;
        double best_abs = std::abs(m[static_cast<size_t>(col) * n + col]);
        for (int row = col + 1; row < n; ++row) {
            const double v = std::abs(m[static_cast<size_t>(row) * n + col]);
            if (v > best_abs) {
                best_abs = v;
                best = row;
            }
        }
        if (best_abs == 0.0) return {0.0, 0.0};
        if (best != col) {
            for (int j = col; j < n; ++j)
                std::swap(m[static_cast<size_t>(best) * n + j], m[static_cast<size_t>(col) * n + j]);
            det = -det;
        }
        const std::complex<double> pivot = m[static_cast<size_t>(col) * n + col];
        det *= pivot;
        for (int row = col + 1; row < n; ++row) {
            const std::complex<double> factor = m[static_cast<size_t>(row) * n + col] / pivot;
            if (factor == std::complex<double>{0.0, 0.0}) continue;
            for (int j = col; j < n; ++j)
                m[static_cast<size_t>(row) * n + j] -= factor * m[static_cast<size_t>(col) * n + j];
        }
    }
    return det;
}

SpectralBoundReport sufficient_spectral_check(const NetworkModel& network, const SimConfig& config,
                                              double omega_max, int omega_steps) {
    config.validate(network.node_count);
    const ConditionReport conditions = check_conditions(network, omega_max, omega_steps);
    for (const ReceiverCondition& rc : conditions.receivers)
        if (!rc.dc_row_positive)
            throw std::runtime_error("sufficient_spectral_check: receiver " +
                                     std::to_string(rc.receiver) +
                                     " has nonpositive dc row sum; the bound is undefined");

    SpectralBoundReport report;
    report.omega_max = omega_max;
    report.omega_steps = omega_steps;
    for (const ReceiverCondition& rc : conditions.receivers) {
        if (*rc.worst_ratio > report.max_ratio) {
            report.max_ratio = *rc.worst_ratio;
            report.argmax_omega = *rc.worst_omega;
        }
    }
    report.holds = report.max_ratio <= 1.0 + 1e-12;
    return report;
}

double rate_empirical(const Trajectory& trajectory, double alpha_theory) {
    if (!trajectory.converged_at)
        throw std::runtime_error("rate_empirical: trajectory did not converge; no decay to fit "
                                 "(increase the horizon or check connectivity)");

    const int n = trajectory.node_count;
    std::vector<double> residual(static_cast<size_t>(trajectory.horizon));
    for (int k = 0; k < trajectory.horizon; ++k) {
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(trajectory.deriv(i, k) - alpha_theory));
        residual[static_cast<size_t>(k)] = worst;
    }

    // Fit window: 10% into the transient up to the convergence step, cut
    // early when the residual reaches the roundoff floor.
    int k_end = *trajectory.converged_at;
    const double floor_level = 100.0 * DBL_EPSILON * std::abs(alpha_theory);
    for (int k = 0; k < k_end; ++k)
        if (residual[static_cast<size_t>(k)] <= floor_level) {
            k_end = k;
            break;
        }
    const int k_start = std::max(1, static_cast<int>(0.1 * k_end));
    if (k_end - k_start < 10)
        throw std::runtime_error("rate_empirical: fewer than 10 usable samples in the fit window; "
                                 "increase the horizon");

    const double e_start = residual[static_cast<size_t>(k_start)];
    const double e_end = residual[static_cast<size_t>(k_end)];
    if (!(e_end < 0.5 * e_start))
        throw std::runtime_error("rate_empirical: residual is non-monotone beyond tolerance over "
                                 "the fit window (oscillatory transient); increase the horizon");

    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    int count = 0;
    for (int k = k_start; k <= k_end; ++k) {
        const double e = residual[static_cast<size_t>(k)];
        if (e <= 0.0) continue;
        const double t = k * trajectory.sample_time;
        const double y = std::log(e);
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
        ++count;
    }
    if (count < 10)
        throw std::runtime_error("rate_empirical: fewer than 10 usable samples in the fit window; "
                                 "increase the horizon");
    const double denom = count * stt - st * st;
    const double slope = (count * sty - st * sy) / denom;
    if (!(slope < 0.0))
        throw std::runtime_error("rate_empirical: fitted slope is not negative; residual does not "
                                 "decay exponentially over the window");
    return -slope;
}

namespace {

// One-step map of the homogeneous discretized system over stacked delayed
// states [x[k]; x[k-1]; ...; x[k-D_max]].
struct CompanionOperator {
    int n = 0;
    int max_lag = 0;
    int dim = 0;
    double step_gain_time = 0.0; // T
    std::vector<double> gain;    // T * K / c_i
    struct Term {
        int transmitter;
        int lag;
        double amplitude;
    };
    std::vector<std::vector<Term>> terms;      // per receiver
    std::vector<double> coupling_sum;          // per receiver, sum of amplitudes

    CompanionOperator(const NetworkModel& network, const SimConfig& config) {
        n = network.node_count;
        terms.resize(static_cast<size_t>(n));
        coupling_sum.assign(static_cast<size_t>(n), 0.0);
        gain.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i)
            gain[static_cast<size_t>(i)] = config.sample_time * config.coupling_gain /
                                           config.c[static_cast<size_t>(i)];
        for (const MultipathChannel& ch : network.channels) {
            for (const Path& p : ch.paths) {
                const double steps = p.delay / config.sample_time;
                const int lag = static_cast<int>(std::llround(steps));
                if (std::abs(steps - lag) > 1e-9)
                    throw std::invalid_argument("rate_spectral: delays must be quantized to "
                                                "multiples of the sampling time");
                terms[static_cast<size_t>(ch.receiver)].push_back({ch.transmitter, lag, p.amplitude});
                coupling_sum[static_cast<size_t>(ch.receiver)] += p.amplitude;
                max_lag = std::max(max_lag, lag);
            }
        }
        dim = n * (max_lag + 1);
    }

    // out = M * in; block m of the stacked vector holds x[k-m].
    void apply(const std::vector<double>& in, std::vector<double>& out) const {
        for (int i = 0; i < n; ++i) {
            const double xi = in[static_cast<size_t>(i)];
            double coupling = -coupling_sum[static_cast<size_t>(i)] * xi;
            for (const Term& t : terms[static_cast<size_t>(i)])
                coupling += t.amplitude * in[static_cast<size_t>(t.lag) * n + t.transmitter];
            out[static_cast<size_t>(i)] = xi + gain[static_cast<size_t>(i)] * coupling;
        }
        for (int m = max_lag; m >= 1; --m)
            for (int i = 0; i < n; ++i)
                out[static_cast<size_t>(m) * n + i] = in[static_cast<size_t>(m - 1) * n + i];
    }
};

void project_out_ones(std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    for (double& x : v) x -= mean;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

// Largest eigenvalue modulus of a real 2x2 block (handles complex pairs).
double block_modulus(double b00, double b01, double b10, double b11) {
    const double tr = b00 + b11;
    const double det = b00 * b11 - b01 * b10;
    const double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        return std::max(std::abs((tr + root) / 2.0), std::abs((tr - root) / 2.0));
    }
    return std::sqrt(det); // conjugate pair, |lambda| = sqrt(det)
}

} // namespace

CompanionSpectrum rate_spectral(const NetworkModel& network, const SimConfig& config,
                                int dimension_cap) {
    config.validate(network.node_count);
    if (network.node_count < 2)
        throw std::invalid_argument("rate_spectral: needs at least two nodes");

    const CompanionOperator op(network, config);
    if (op.dim > dimension_cap)
        throw std::runtime_error("rate_spectral: companion dimension " + std::to_string(op.dim) +
                                 " exceeds the cap " + std::to_string(dimension_cap) +
                                 "; use rate_empirical instead");

    CompanionSpectrum spectrum;
    spectrum.dimension = op.dim;

    // Residual of the known consensus eigenpair (value 1, all copies equal).
    std::vector<double> ones(static_cast<size_t>(op.dim), 1.0);
    std::vector<double> image(static_cast<size_t>(op.dim));
    op.apply(ones, image);
    for (int i = 0; i < op.dim; ++i)
        spectrum.unit_eigenvalue_residual =
            std::max(spectrum.unit_eigenvalue_residual, std::abs(image[static_cast<size_t>(i)] - 1.0));

    // Block power iteration on the ones-deflated operator. Projecting the
    // iterates onto the complement of the consensus direction removes the
    // eigenvalue at 1 while leaving every other eigenvalue in place.
    const int block = std::min(2, op.dim - 1);
    std::mt19937_64 seed_engine(0x5eed5eedULL);
    std::vector<std::vector<double>> basis(static_cast<size_t>(block),
                                           std::vector<double>(static_cast<size_t>(op.dim)));
    for (auto& column : basis) {
        for (double& x : column)
            x = static_cast<double>(seed_engine() >> 11) * 0x1.0p-53 - 0.5;
        project_out_ones(column);
    }

    const auto orthonormalize = [&]() {
        for (int c = 0; c < block; ++c) {
            for (int prev = 0; prev < c; ++prev) {
                const double coeff = dot(basis[static_cast<size_t>(c)], basis[static_cast<size_t>(prev)]);
                for (int i = 0; i < op.dim; ++i)
                    basis[static_cast<size_t>(c)][static_cast<size_t>(i)] -=
                        coeff * basis[static_cast<size_t>(prev)][static_cast<size_t>(i)];
            }
            const double len = norm(basis[static_cast<size_t>(c)]);
            if (len < 1e-290)
                throw std::runtime_error("rate_spectral: power iteration basis collapsed");
            for (double& x : basis[static_cast<size_t>(c)]) x /= len;
        }
    };
    orthonormalize();

    const int max_iterations = 200000;
    const int check_every = 10;
    const int stable_checks_needed = 5;
    double estimate = -1.0;
    int stable_checks = 0;
    std::vector<std::vector<double>> mapped(static_cast<size_t>(block),
                                            std::vector<double>(static_cast<size_t>(op.dim)));
    for (int iteration = 1; iteration <= max_iterations; ++iteration) {
        for (int c = 0; c < block; ++c) {
            op.apply(basis[static_cast<size_t>(c)], mapped[static_cast<size_t>(c)]);
            project_out_ones(mapped[static_cast<size_t>(c)]);
        }

        if (iteration % check_every == 0) {
            double current;
            if (block == 1) {
                current = std::abs(dot(basis[0], mapped[0]));
            } else {
                current = block_modulus(dot(basis[0], mapped[0]), dot(basis[0], mapped[1]),
                                        dot(basis[1], mapped[0]), dot(basis[1], mapped[1]));
            }
            if (estimate >= 0.0 &&
                std::abs(current - estimate) <= 1e-10 * std::max(current, 1e-30)) {
                if (++stable_checks >= stable_checks_needed) {
                    spectrum.second_modulus = current;
                    spectrum.decay_rate = current > 0.0
                                              ? -std::log(current) / config.sample_time
                                              : std::numeric_limits<double>::infinity();
                    return spectrum;
                }
            } else {
                stable_checks = 0;
            }
            estimate = current;
        }

        for (int c = 0; c < block; ++c) basis[static_cast<size_t>(c)].swap(mapped[static_cast<size_t>(c)]);
        orthonormalize();
    }
    throw std::runtime_error("rate_spectral: power iteration did not stabilize after " +
                             std::to_string(max_iterations) + " iterations (last estimate " +
                             std::to_string(estimate) + ")");
}

double relative_error_vs(double empirical_mean, double alpha_theory) {
    return std::abs(empirical_mean - alpha_theory) / std::max(std::abs(alpha_theory), 1e-12);
}

ConsensusReport build_consensus_report(const NetworkModel& original, const NetworkModel& quantized,
                                       const SimConfig& config, const Trajectory& trajectory,
                                       bool with_rates) {
    ConsensusReport report;
    report.per_node_empirical = trajectory.per_node_limit;
    report.converged = trajectory.converged_at.has_value();
    report.converged_at = trajectory.converged_at;

    const Digraph g = build_digraph(quantized);
    try {
        const LaplacianBundle bundle = laplacian(g);
        report.qsc = true;
        report.gamma = bundle.gamma;
        const AlphaStar alpha = alpha_star(original, bundle.gamma, config);
        report.alpha_theory = alpha.with_quantized_delays;
        report.alpha_theory_exact = alpha.with_exact_delays;
        report.relative_error = relative_error_vs(trajectory.limit_mean(), *report.alpha_theory);
    } catch (const NonQscError&) {
        report.qsc = false;
        report.notes.push_back("network is not QSC: no global consensus value; per-node limits "
                               "report the cluster values");
    } catch (const std::exception& e) {
        report.qsc = true;
        report.notes.push_back(std::string("theory prediction unavailable: ") + e.what());
    }

    if (with_rates && report.alpha_theory) {
        try {
            report.rate_empirical = rate_empirical(trajectory, *report.alpha_theory);
        } catch (const std::exception& e) {
            report.notes.push_back(std::string("empirical rate unavailable: ") + e.what());
        }
        try {
            report.rate_spectral = rate_spectral(quantized, config).decay_rate;
        } catch (const std::exception& e) {
            report.notes.push_back(std::string("spectral rate unavailable: ") + e.what());
        }
    } else if (with_rates) {
        report.notes.push_back("rate estimation skipped: no theory value for a non-QSC network");
    }
    return report;
}

} // namespace consim
