#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "consim/batch.hpp"
#include "consim/channel.hpp"
#include "consim/simulator.hpp"

namespace consim {

enum class Experiment {
    Check,
    Simulate,
    Rate,
    Compensate,
    EstimateGamma,
    Pipeline,
    Batch,
};

std::string experiment_name(Experiment e);
std::optional<Experiment> experiment_from_name(const std::string& name);

// Load/validation failure with the JSON field path that caused it.
class ScenarioError : public std::runtime_error {
public:
    ScenarioError(std::string field_path, const std::string& message)
        : std::runtime_error(field_path + ": " + message), field_path(std::move(field_path)) {}

    std::string field_path;
};

// One experiment over one topology. Exactly one of explicit_network /
// generated is set. Numeric fields may be given as JSON numbers or as
// decimal strings; defaults are resolved at load time and echoed back by
// to_json, so load(to_json(s)) is the identity on resolved scenarios.
struct Scenario {
    std::string name;
    Experiment experiment = Experiment::Simulate;
    bool experiment_pinned = false; // true when the file named the experiment

    std::optional<NetworkModel> explicit_network;
    std::optional<GeneratedTopologySpec> generated;

    SimConfig sim;

    double omega_max = 0.0; // 0 resolves to pi / sample_time
    int omega_steps = 1024;

    std::string postmap = "identity"; // pipeline only: identity | square | abs
    std::vector<std::uint64_t> seeds; // batch only
    int downsample = 1;

    int node_count() const;
    // The concrete network for non-batch experiments (generates when needed).
    NetworkModel realize_network(std::optional<std::uint64_t> seed_override = {}) const;
};

// Unknown fields raise ScenarioError when `strict`, otherwise append a
// warning line.
Scenario scenario_from_json(const nlohmann::json& doc, bool strict,
                            std::vector<std::string>* warnings);
Scenario load_scenario(const std::filesystem::path& path, bool strict,
                       std::vector<std::string>* warnings);

nlohmann::json scenario_to_json(const Scenario& scenario);

} // namespace consim
