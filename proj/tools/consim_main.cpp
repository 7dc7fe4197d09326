// Command-line front end: loads a scenario file, runs one experiment and
// writes summary.json plus trajectory/convergence CSVs into --out.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "consim/digraph.hpp"
#include "consim/runner.hpp"
#include "consim/scenario.hpp"
#include "consim/simulator.hpp"

namespace {

struct CliArgs {
    std::string config;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> downsample;
    bool strict = false;
};

void add_common_options(CLI::App* cmd, CliArgs& args) {
    cmd->add_option("--config", args.config, "scenario JSON file")->required();
    cmd->add_option("--out", args.out_dir, "output directory (default: out)");
    cmd->add_option("--seed", [&args](const CLI::results_t& values) {
        try {
            args.seed = std::stoull(values[0]);
            return true;
        } catch (...) {
            return false;
        }
    }, "override the channel generator seed");
    cmd->add_option("--downsample", [&args](const CLI::results_t& values) {
        try {
            args.downsample = std::stoi(values[0]);
            return args.downsample >= 1;
        } catch (...) {
            return false;
        }
    }, "keep every k-th CSV row");
    cmd->add_flag("--strict", args.strict, "reject unknown scenario fields");
}

int fail(const std::string& error_class, const std::string& message, int code) {
    const nlohmann::json err = {{"error_class", error_class}, {"message", message}};
    std::cerr << err.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"consim: consensus-over-multipath-network simulator and analyzer"};
    app.require_subcommand(1);

    CliArgs args;
    std::vector<std::pair<std::string, consim::Experiment>> commands = {
        {"check", consim::Experiment::Check},
        {"simulate", consim::Experiment::Simulate},
        {"rate", consim::Experiment::Rate},
        {"compensate", consim::Experiment::Compensate},
        {"estimate-gamma", consim::Experiment::EstimateGamma},
        {"pipeline", consim::Experiment::Pipeline},
        {"batch", consim::Experiment::Batch},
    };
    for (auto& [name, experiment] : commands) {
        CLI::App* cmd = app.add_subcommand(
            name, "run the " + name + " experiment from a scenario file");
        add_common_options(cmd, args);
        cmd->parse_complete_callback([&, experiment]() {
            std::vector<std::string> warnings;
            consim::Scenario scenario;
            try {
                scenario = consim::load_scenario(args.config, args.strict, &warnings);
            } catch (const consim::ScenarioError& e) {
                std::exit(fail("scenario", e.what(), 1));
            }
            for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

            // The scenario may pin its experiment; a conflicting subcommand is
            // refused so every output directory has an unambiguous provenance.
            if (scenario.experiment_pinned && scenario.experiment != experiment)
                std::exit(fail("scenario",
                               "scenario file pins experiment '" +
                                   consim::experiment_name(scenario.experiment) +
                                   "' but subcommand '" + name + "' was requested",
                               1));
            scenario.experiment = experiment;

            consim::RunOptions options;
            options.out_dir = args.out_dir;
            options.seed_override = args.seed;
            options.downsample_override = args.downsample;
            try {
                const consim::RunResult result = consim::run_experiment(scenario, options);
                if (result.summary.contains("stability") &&
                    result.summary["stability"]["ok"] == false)
                    std::cerr << "warning: K*T*deg_in/c exceeds the step-stability margin; "
                                 "the forward-difference integration may diverge\n";
                std::cout << "wrote";
                for (const auto& f : result.files_written) std::cout << ' ' << f.string();
                std::cout << "\n";
            } catch (const consim::ScenarioError& e) {
                std::exit(fail("scenario", e.what(), 1));
            } catch (const consim::NonQscError& e) {
                std::exit(fail("connectivity", e.what(), 2));
            } catch (const consim::DivergenceError& e) {
                std::exit(fail("divergence", e.what(), 2));
            } catch (const std::exception& e) {
                std::exit(fail("runtime", e.what(), 2));
            }
        });
    }

    CLI11_PARSE(app, argc, argv);
    return 0;
}
