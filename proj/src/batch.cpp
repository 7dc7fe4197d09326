#include "consim/batch.hpp"

#include <atomic>
#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

namespace consim {

namespace {

BatchRun run_one(const GeneratedTopologySpec& topology, const SimConfig& config,
                 std::uint64_t seed) {
    BatchRun run;
    run.seed = seed;
    try {
        ChannelModelParams params = topology.params;
        params.seed = seed;
        const NetworkModel network = generate_network(topology.positions, topology.connectivity, params);
        auto [quantized, quant_report] = quantize_delays(network, config.sample_time);
        const Trajectory trajectory = simulate(quantized, config);
        run.report = build_consensus_report(network, quantized, config, trajectory, false);
        run.trajectory = trajectory;
        run.network = std::move(quantized);
        run.ok = true;
    } catch (const std::exception& e) {
        run.error = e.what();
    }
    return run;
}

} // namespace

BatchResult run_batch(const GeneratedTopologySpec& topology, const SimConfig& config,
                      const std::vector<std::uint64_t>& seeds, int max_threads) {
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size())
        throw std::invalid_argument("run_batch: seeds must be distinct");

    BatchResult result;
    result.runs.resize(seeds.size());
    if (seeds.empty()) return result;

    int threads = max_threads > 0 ? max_threads : static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min<int>(threads, static_cast<int>(seeds.size())));

    std::atomic<size_t> next{0};
    const auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < seeds.size(); i = next.fetch_add(1))
            result.runs[i] = run_one(topology, config, seeds[i]);
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    const auto mean_and_std = [](const std::vector<double>& values, double& mean, double& std_out) {
        if (values.empty()) return;
        mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        std_out = values.size() > 1 ? std::sqrt(var / static_cast<double>(values.size() - 1)) : 0.0;
    };

    BatchAggregate& agg = result.aggregate;
    agg.runs = static_cast<int>(seeds.size());
    std::vector<double> limits;
    std::vector<double> steps;
    double rel_sum = 0.0;
    int rel_count = 0;
    for (const BatchRun& run : result.runs) {
        if (!run.ok) {
            ++agg.failed;
            continue;
        }
        limits.push_back(run.trajectory->limit_mean());
        if (run.report->converged) {
            ++agg.converged;
            steps.push_back(static_cast<double>(*run.report->converged_at));
            if (run.report->relative_error) {
                rel_sum += *run.report->relative_error;
                agg.rel_error_max = std::max(agg.rel_error_max, *run.report->relative_error);
                ++rel_count;
            }
        }
    }
    mean_and_std(limits, agg.limit_mean, agg.limit_std);
    mean_and_std(steps, agg.converged_step_mean, agg.converged_step_std);
    if (rel_count > 0) agg.rel_error_mean = rel_sum / rel_count;
    return result;
}

} // namespace consim
