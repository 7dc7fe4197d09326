#include "consim/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>

#include "consim/analysis.hpp"
#include "consim/batch.hpp"
#include "consim/digraph.hpp"
#include "consim/num_format.hpp"
#include "consim/protocol.hpp"

namespace consim {

namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json optional_json(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

json scc_json(const SccDecomposition& scc) {
    return {{"components", scc.components},
            {"condensation_edges", scc.condensation_edges},
            {"root_component",
             scc.root_component ? json(*scc.root_component) : json(nullptr)}};
}

json conditions_json(const ConditionReport& report) {
    json dc = json::array();
    for (const ChannelDcEntry& e : report.dc)
        dc.push_back({{"receiver", e.receiver},
                      {"transmitter", e.transmitter},
                      {"dc_gain", e.dc_gain},
                      {"positive", e.positive}});
    json receivers = json::array();
    for (const ReceiverCondition& rc : report.receivers)
        receivers.push_back({{"receiver", rc.receiver},
                             {"dc_row_sum", rc.dc_row_sum},
                             {"dc_row_positive", rc.dc_row_positive},
                             {"worst_ratio", optional_json(rc.worst_ratio)},
                             {"worst_omega", optional_json(rc.worst_omega)},
                             {"rowsum_bound_holds", rc.rowsum_bound_holds}});
    return {{"dc", std::move(dc)},
            {"all_dc_positive", report.all_dc_positive},
            {"receivers", std::move(receivers)},
            {"all_rowsum_hold", report.all_rowsum_hold},
            {"omega_max", report.omega_max},
            {"omega_steps", report.omega_steps},
            {"note", report.note}};
}

json stability_json(const StabilityBound& bound) {
    return {{"max_in_degree", bound.max_in_degree},
            {"kt_product", bound.kt_product},
            {"margin", bound.margin},
            {"ok", bound.ok}};
}

json consensus_json(const ConsensusReport& report) {
    return {{"qsc", report.qsc},
            {"gamma", report.gamma},
            {"alpha_theory", optional_json(report.alpha_theory)},
            {"alpha_theory_exact", optional_json(report.alpha_theory_exact)},
            {"per_node_empirical", report.per_node_empirical},
            {"relative_error", optional_json(report.relative_error)},
            {"converged", report.converged},
            {"converged_at", optional_json(report.converged_at)},
            {"rate_empirical", optional_json(report.rate_empirical)},
            {"rate_spectral", optional_json(report.rate_spectral)},
            {"notes", report.notes}};
}

json compensation_json(const CompensationResult& comp) {
    return {{"alpha_y", comp.alpha_y},
            {"alpha_ones", comp.alpha_ones},
            {"ratio", comp.ratio},
            {"predicted_ratio", comp.predicted_ratio}};
}

json gamma_estimate_json(const GammaEstimate& est) {
    return {{"gamma_tilde", est.gamma_tilde},
            {"support", est.support},
            {"runs_used", est.runs_used},
            {"alpha_ones", est.alpha_ones},
            {"alpha_unit", est.alpha_unit}};
}

std::function<double(double)> postmap_function(const std::string& name) {
    if (name == "square") return [](double x) { return x * x; };
    if (name == "abs") return [](double x) { return std::abs(x); };
    return {};
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          int downsample, const CompensationResult* compensation) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,time,node,x,xdot";
    if (compensation) out << ",ratio";
    out << "\n";
    for (int k = 0; k < traj.horizon; k += downsample) {
        for (int i = 0; i < traj.node_count; ++i) {
            out << k << ',' << format_double(traj.times[static_cast<size_t>(k)]) << ',' << i << ','
                << format_double(traj.state(i, k)) << ',' << format_double(traj.deriv(i, k));
            if (compensation) out << ',' << format_double(compensation->ratio_at(i, k));
            out << "\n";
        }
    }
}

void write_convergence_csv(const std::filesystem::path& path, const Trajectory& traj,
                           const std::optional<double>& alpha, int downsample) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "step,time,spread,max_residual\n";
    for (int k = 0; k < traj.horizon; k += downsample) {
        double lo = traj.deriv(0, k);
        double hi = lo;
        double residual = 0.0;
        for (int i = 0; i < traj.node_count; ++i) {
            const double d = traj.deriv(i, k);
            lo = std::min(lo, d);
            hi = std::max(hi, d);
            const double reference =
                alpha ? *alpha : traj.per_node_limit[static_cast<size_t>(i)];
            residual = std::max(residual, std::abs(d - reference));
        }
        out << k << ',' << format_double(traj.times[static_cast<size_t>(k)]) << ','
            << format_double(hi - lo) << ',' << format_double(residual) << "\n";
    }
}

int batch_threads(const RunOptions& options) {
    int threads = options.max_threads;
    if (const char* env = std::getenv("CONSENSUS_SIM_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) threads = threads > 0 ? std::min(threads, cap) : cap;
    }
    return threads;
}

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
        .count();
}

} // namespace

RunResult run_experiment(const Scenario& scenario_in, const RunOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();

    Scenario scenario = scenario_in;
    if (options.seed_override && scenario.generated)
        scenario.generated->params.seed = *options.seed_override;
    if (options.downsample_override) scenario.downsample = *options.downsample_override;

    RunResult result;
    result.summary["scenario"] = scenario_to_json(scenario);

    std::filesystem::create_directories(options.out_dir);
    const auto target = [&](const char* name) { return options.out_dir / name; };

    try {
        json& summary = result.summary;
        const SimConfig& sim = scenario.sim;

        if (scenario.experiment != Experiment::Batch && !scenario.seeds.empty())
            throw ScenarioError("seeds", "only valid for the batch experiment");

        if (scenario.experiment == Experiment::Batch) {
            if (!scenario.generated)
                throw ScenarioError("topology",
                                    "batch needs a generated topology (channels are redrawn per seed)");
            if (scenario.seeds.empty())
                throw ScenarioError("seeds", "batch needs a non-empty seed list");
            const BatchResult batch =
                run_batch(*scenario.generated, sim, scenario.seeds, batch_threads(options));
            json runs = json::array();
            for (const BatchRun& run : batch.runs) {
                json entry = {{"seed", run.seed}, {"ok", run.ok}};
                if (run.ok) {
                    entry["consensus"] = consensus_json(*run.report);
                    entry["limit_mean"] = run.trajectory->limit_mean();
                } else {
                    entry["error"] = run.error;
                }
                runs.push_back(std::move(entry));
            }
            summary["batch"] = {{"runs", std::move(runs)},
                                {"aggregate",
                                 {{"runs", batch.aggregate.runs},
                                  {"failed", batch.aggregate.failed},
                                  {"converged", batch.aggregate.converged},
                                  {"limit_mean", batch.aggregate.limit_mean},
                                  {"limit_std", batch.aggregate.limit_std},
                                  {"rel_error_mean", batch.aggregate.rel_error_mean},
                                  {"rel_error_max", batch.aggregate.rel_error_max},
                                  {"converged_step_mean", batch.aggregate.converged_step_mean},
                                  {"converged_step_std", batch.aggregate.converged_step_std}}}};
        } else {
            const NetworkModel original = scenario.realize_network(options.seed_override);
            auto [quantized, quant_report] = quantize_delays(original, sim.sample_time);

            const Digraph digraph = build_digraph(quantized);
            const SccDecomposition scc = scc_decompose(digraph);
            summary["digraph"] = scc_json(scc);
            summary["digraph"]["qsc"] = scc.root_component.has_value();
            summary["digraph"]["sc"] = scc.components.size() == 1;
            summary["conditions"] =
                conditions_json(check_conditions(original, scenario.omega_max, scenario.omega_steps));
            summary["stability"] = stability_json(check_step_stability(quantized, sim));
            summary["quantization"] = {{"max_abs_error", quant_report.max_abs_error},
                                       {"max_lag_samples", quant_report.max_lag_samples}};

            switch (scenario.experiment) {
                case Experiment::Check: {
                    try {
                        const SpectralBoundReport bound = sufficient_spectral_check(
                            original, sim, scenario.omega_max, scenario.omega_steps);
                        summary["spectral_bound"] = {{"max_ratio", bound.max_ratio},
                                                     {"argmax_omega", bound.argmax_omega},
                                                     {"holds", bound.holds},
                                                     {"omega_max", bound.omega_max},
                                                     {"omega_steps", bound.omega_steps}};
                    } catch (const std::exception& e) {
                        // A violated precondition is a finding here, not a failure.
                        summary["spectral_bound"] = {{"error", e.what()}};
                    }
                    break;
                }
                case Experiment::Simulate:
                case Experiment::Rate: {
                    const bool with_rates = scenario.experiment == Experiment::Rate;
                    const Trajectory trajectory = simulate(quantized, sim);
                    const ConsensusReport report =
                        build_consensus_report(original, quantized, sim, trajectory, with_rates);
                    summary["consensus"] = consensus_json(report);
                    if (with_rates) {
                        try {
                            const CompanionSpectrum spectrum = rate_spectral(quantized, sim);
                            summary["spectrum"] = {
                                {"dimension", spectrum.dimension},
                                {"unit_eigenvalue_residual", spectrum.unit_eigenvalue_residual},
                                {"second_modulus", spectrum.second_modulus},
                                {"decay_rate", spectrum.decay_rate}};
                        } catch (const std::exception& e) {
                            summary["spectrum"] = {{"error", e.what()}};
                        }
                    }
                    write_trajectory_csv(target("trajectory.csv"), trajectory, scenario.downsample,
                                         nullptr);
                    result.files_written.push_back(target("trajectory.csv"));
                    write_convergence_csv(target("convergence.csv"), trajectory,
                                          report.alpha_theory, scenario.downsample);
                    result.files_written.push_back(target("convergence.csv"));
                    break;
                }
                case Experiment::Compensate: {
                    const CompensationResult comp = compensate(quantized, sim);
                    const ConsensusReport report =
                        build_consensus_report(original, quantized, sim, comp.run_y, false);
                    summary["compensation"] = compensation_json(comp);
                    summary["consensus"] = consensus_json(report);
                    write_trajectory_csv(target("trajectory.csv"), comp.run_y, scenario.downsample,
                                         &comp);
                    result.files_written.push_back(target("trajectory.csv"));
                    write_convergence_csv(target("convergence.csv"), comp.run_y,
                                          report.alpha_theory, scenario.downsample);
                    result.files_written.push_back(target("convergence.csv"));
                    break;
                }
                case Experiment::EstimateGamma: {
                    const GammaEstimate estimate = estimate_gamma(quantized, sim);
                    json est = gamma_estimate_json(estimate);
                    est["gamma_theory"] = laplacian(digraph).gamma;
                    summary["gamma_estimate"] = std::move(est);
                    break;
                }
                case Experiment::Pipeline: {
                    const PipelineResult pipeline = unbiased_pipeline(
                        quantized, sim, postmap_function(scenario.postmap));
                    summary["gamma_estimate"] = gamma_estimate_json(pipeline.gamma_estimate);
                    summary["compensation"] = compensation_json(pipeline.compensation);
                    summary["pipeline"] = {{"statistic", pipeline.statistic},
                                           {"postmap", scenario.postmap},
                                           {"rescaled_c", pipeline.rescaled_c}};
                    write_trajectory_csv(target("trajectory.csv"), pipeline.compensation.run_y,
                                         scenario.downsample, &pipeline.compensation);
                    result.files_written.push_back(target("trajectory.csv"));
                    write_convergence_csv(target("convergence.csv"), pipeline.compensation.run_y,
                                          std::nullopt, scenario.downsample);
                    result.files_written.push_back(target("convergence.csv"));
                    break;
                }
                case Experiment::Batch:
                    break; // handled above
            }
        }

        const double compute_ms = elapsed_ms(t_start);
        const auto t_write = std::chrono::steady_clock::now();
        {
            std::ofstream out(target("summary.json"));
            if (!out) throw std::runtime_error("cannot write " + target("summary.json").string());
            summary["timings"] = {{"compute_ms", compute_ms}, {"write_ms", elapsed_ms(t_write)}};
            out << summary.dump(2) << "\n";
        }
        result.files_written.push_back(target("summary.json"));
        return result;
    } catch (...) {
        // Leave no partial outputs behind.
        std::error_code ec;
        for (const auto& file : result.files_written) std::filesystem::remove(file, ec);
        throw;
    }
}

} // namespace consim
