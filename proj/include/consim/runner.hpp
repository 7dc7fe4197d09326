#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "consim/scenario.hpp"

namespace consim {

struct RunOptions {
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed_override; // replaces the generator seed
    std::optional<int> downsample_override;
    int max_threads = 0; // batch parallelism, 0 = auto (CONSENSUS_SIM_THREADS caps it)
};

struct RunResult {
    nlohmann::json summary;
    std::vector<std::filesystem::path> files_written; // includes summary.json
};

// Executes the scenario's experiment and writes summary.json plus, for
// simulating experiments, trajectory.csv and convergence.csv into out_dir.
// All numeric summary fields are deterministic for a fixed scenario and
// seed; wall-clock timings live in an isolated "timings" section. Partial
// outputs are removed when the run fails.
RunResult run_experiment(const Scenario& scenario, const RunOptions& options);

} // namespace consim
