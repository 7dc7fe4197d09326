#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "consim/analysis.hpp"
#include "consim/channel.hpp"
#include "consim/simulator.hpp"

namespace consim {

// Topology recipe for seeded Monte-Carlo realizations: fixed geometry and
// connectivity, channels redrawn per seed.
struct GeneratedTopologySpec {
    std::vector<std::array<double, 2>> positions;
    std::vector<std::pair<int, int>> connectivity; // (receiver, transmitter)
    ChannelModelParams params;                     // seed field is overridden per run
};

struct BatchRun {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error; // set when ok is false
    std::optional<NetworkModel> network; // quantized
    std::optional<Trajectory> trajectory;
    std::optional<ConsensusReport> report;
};

struct BatchAggregate {
    int runs = 0;
    int failed = 0;
    int converged = 0;
    double limit_mean = 0.0;      // over per-run mean empirical limits
    double limit_std = 0.0;
    double rel_error_mean = 0.0;  // over converged runs with a theory value
    double rel_error_max = 0.0;
    double converged_step_mean = 0.0;
    double converged_step_std = 0.0;
};

struct BatchResult {
    std::vector<BatchRun> runs;
    BatchAggregate aggregate;
};

// Independent realizations, one per seed; deterministic given the seed
// list. Per-run failures are captured in the run record instead of
// aborting the batch. Runs execute in parallel up to `max_threads`
// (0 means hardware concurrency).
BatchResult run_batch(const GeneratedTopologySpec& topology, const SimConfig& config,
                      const std::vector<std::uint64_t>& seeds, int max_threads = 0);

} // namespace consim
