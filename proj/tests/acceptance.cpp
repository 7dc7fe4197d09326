// Acceptance suite: end-to-end checks of the documented guarantees, one
// criterion per line. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "consim/analysis.hpp"
#include "consim/batch.hpp"
#include "consim/channel.hpp"
#include "consim/digraph.hpp"
#include "consim/protocol.hpp"
#include "consim/runner.hpp"
#include "consim/scenario.hpp"
#include "consim/simulator.hpp"

using namespace consim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
const double kT = 0.01;

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& message) {
    if (!ok) throw Failure(message);
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

SimConfig base_config(int n, std::vector<double> u) {
    SimConfig cfg;
    cfg.c.assign(n, 1.0);
    cfg.u = std::move(u);
    cfg.sample_time = kT;
    cfg.horizon = 5000;
    return cfg;
}

NetworkModel two_node_symmetric(double delay = 0.0) {
    return make_network(2, {make_channel(0, 1, {{1.0, delay}}),
                            make_channel(1, 0, {{1.0, delay}})});
}

// Random strongly connected network with positive amplitudes (hence
// satisfying the dc and row-sum channel conditions) and lag-multiple delays.
NetworkModel random_sc_network(int n, std::uint64_t seed, int max_lag, int max_paths = 3) {
    std::mt19937_64 engine(seed);
    std::uniform_real_distribution<double> amp(0.4, 1.4);
    std::uniform_int_distribution<int> lag(0, max_lag);
    std::uniform_int_distribution<int> path_count(1, max_paths);
    std::uniform_real_distribution<double> coin(0.0, 1.0);

    const auto draw_paths = [&]() {
        std::vector<Path> paths;
        const int count = path_count(engine);
        for (int p = 0; p < count; ++p) paths.push_back({amp(engine) / count, lag(engine) * kT});
        return paths;
    };

    std::vector<MultipathChannel> channels;
    for (int i = 0; i < n; ++i) channels.push_back(make_channel((i + 1) % n, i, draw_paths()));
    for (int r = 0; r < n; ++r)
        for (int q = 0; q < n; ++q) {
            if (r == q || q == (r + n - 1) % n) continue;
            if (coin(engine) < 0.3) channels.push_back(make_channel(r, q, draw_paths()));
        }
    return make_network(n, std::move(channels));
}

// ---------------------------------------------------------------------------

// 1. Balanced zero-delay average consensus within 1e-6 and 0.1 s.
void criterion_1() {
    const auto start = std::chrono::steady_clock::now();
    const Trajectory traj = simulate(two_node_symmetric(), base_config(2, {3.0, 7.0}));
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    expect(traj.converged_at.has_value(), "run did not converge");
    expect(*traj.converged_at <= 5000, "consensus later than step 5000");
    for (int i = 0; i < 2; ++i)
        expect(std::abs(traj.per_node_limit[i] - 5.0) < 1e-6,
               "node limit " + fmt(traj.per_node_limit[i]) + " not within 1e-6 of 5.0");
    expect(elapsed < 0.1, "runtime " + fmt(elapsed) + " s exceeds 0.1 s");
}

// 2. Ten-seed Monte Carlo over the random geometric fading model: the
//    closed-form prediction matches every converged run within 1%.
void criterion_2() {
    const auto start = std::chrono::steady_clock::now();

    const int n = 10;
    std::mt19937_64 engine(2024);
    std::uniform_real_distribution<double> coord(0.0, 100.0);
    std::vector<std::array<double, 2>> positions;
    for (int i = 0; i < n; ++i) positions.push_back({coord(engine), coord(engine)});

    // connect pairs within a radius, grown until the undirected graph is
    // connected; both directions per pair keep the digraph strongly connected
    double radius = 45.0;
    std::vector<std::pair<int, int>> connectivity;
    for (;; radius *= 1.3) {
        connectivity.clear();
        std::vector<std::vector<int>> adjacency(n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                if (a == b) continue;
                const double d = std::hypot(positions[a][0] - positions[b][0],
                                            positions[a][1] - positions[b][1]);
                if (d <= radius) {
                    connectivity.push_back({a, b});
                    adjacency[a].push_back(b);
                }
            }
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int w : adjacency[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    ++count;
                    stack.push_back(w);
                }
        }
        if (count == n) break;
    }

    double max_distance = 0.0;
    for (const auto& [a, b] : connectivity)
        max_distance = std::max(max_distance, std::hypot(positions[a][0] - positions[b][0],
                                                         positions[a][1] - positions[b][1]));

    GeneratedTopologySpec topology;
    topology.positions = positions;
    topology.connectivity = connectivity;
    topology.params.mean_amplitude = 1.0;
    topology.params.fading_sigma = 0.5;
    topology.params.path_count = 5;
    topology.params.sample_time = kT;
    topology.params.delay_spread = 5.0 * kT;
    topology.params.propagation_speed = max_distance / (30.0 * kT); // tau_max = 30 T

    SimConfig cfg = base_config(n, {});
    cfg.u.clear();
    std::uniform_real_distribution<double> input(-2.0, 8.0);
    for (int i = 0; i < n; ++i) cfg.u.push_back(input(engine));
    cfg.horizon = 20000;

    const BatchResult batch = run_batch(topology, cfg, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}, 0);

    int converged = 0;
    for (const BatchRun& run : batch.runs) {
        expect(run.ok, "seed " + std::to_string(run.seed) + " failed: " + run.error);
        if (!run.report->converged) continue;
        ++converged;
        expect(run.report->relative_error.has_value(),
               "seed " + std::to_string(run.seed) + " missing a theory value");
        expect(*run.report->relative_error < 1e-2,
               "seed " + std::to_string(run.seed) + " relative error " +
                   fmt(*run.report->relative_error) + " >= 1e-2");
    }
    expect(converged >= 9, "only " + std::to_string(converged) + "/10 seeds converged");

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    expect(elapsed < 5.0, "runtime " + fmt(elapsed) + " s exceeds 5 s");
}

// 3. Chain with random delays funnels every derivative to the root input.
void criterion_3() {
    std::mt19937_64 engine(3);
    for (int trial = 0; trial < 3; ++trial) {
        const double d1 = static_cast<double>(engine() % 31) * kT;
        const double d2 = static_cast<double>(engine() % 31) * kT;
        const NetworkModel net = make_network(3, {make_channel(1, 0, {{1.0, d1}}),
                                                  make_channel(2, 1, {{1.0, d2}})});
        SimConfig cfg = base_config(3, {5.0, 0.0, 0.0});
        cfg.horizon = 10000;
        const Trajectory traj = simulate(net, cfg);
        expect(traj.converged_at.has_value(), "chain run did not converge");
        for (int i = 0; i < 3; ++i)
            expect(std::abs(traj.per_node_limit[i] - 5.0) < 1e-3,
                   "node " + std::to_string(i) + " limit " + fmt(traj.per_node_limit[i]) +
                       " not within 1e-3 of 5.0");
    }
}

// 4. Non-QSC topology forms separated clusters and never reaches consensus.
void criterion_4() {
    const NetworkModel net = make_network(3, {make_channel(1, 0, {{1.0, 0.0}}),
                                              make_channel(1, 2, {{1.0, 5 * kT}})});
    const SimConfig cfg = base_config(3, {1.0, 0.0, 4.0});
    const Trajectory traj = simulate(net, cfg);

    expect(std::abs(traj.per_node_limit[0] - 1.0) < 1e-12, "source cluster 0 drifted");
    expect(std::abs(traj.per_node_limit[2] - 4.0) < 1e-12, "source cluster 2 drifted");
    for (int k = 0; k < traj.horizon; ++k) {
        double lo = traj.deriv(0, k), hi = lo;
        for (int i = 1; i < 3; ++i) {
            lo = std::min(lo, traj.deriv(i, k));
            hi = std::max(hi, traj.deriv(i, k));
        }
        expect(hi - lo > 1.0, "derivative spread dropped to " + fmt(hi - lo) + " at step " +
                                  std::to_string(k));
    }

    const ConsensusReport report = build_consensus_report(net, net, cfg, traj, false);
    expect(!report.qsc, "qsc flag should be false");
    expect(!report.converged, "converged flag should be false");
}

// 5. Decentralized gamma estimation against the dense null-space solve.
void criterion_5() {
    int checked = 0;
    for (std::uint64_t seed = 50; checked < 5; ++seed) {
        const int n = 3 + static_cast<int>(seed % 6); // up to 8 nodes
        NetworkModel net = random_sc_network(n, seed, 10, 2);
        if (seed % 2 == 0 && n < 8) {
            // make it QSC-but-not-SC: one extra leaf that only listens
            std::vector<MultipathChannel> channels = net.channels;
            channels.push_back(make_channel(n, 0, {{1.0, 3 * kT}}));
            net = make_network(n + 1, std::move(channels));
        }
        ++checked;

        const int total = net.node_count;
        SimConfig cfg = base_config(total, std::vector<double>(total, 1.0));
        cfg.horizon = 30000;
        const GammaEstimate estimate = estimate_gamma(net, cfg);

        const LaplacianBundle bundle = laplacian(build_digraph(net));
        for (int i = 0; i < total; ++i)
            expect(std::abs(estimate.gamma_tilde[i] - bundle.gamma[i]) <= 1e-3,
                   "seed " + std::to_string(seed) + " node " + std::to_string(i) +
                       ": estimate " + fmt(estimate.gamma_tilde[i]) + " vs gamma " +
                       fmt(bundle.gamma[i]));
    }
}

// 6. Compensated ratio is delay invariant while the raw limit is not.
void criterion_6() {
    const int n = 6;
    std::mt19937_64 engine(66);
    std::uniform_real_distribution<double> amp(0.6, 1.6);

    // fixed SC topology (ring plus two chords) and fixed amplitudes
    std::vector<std::pair<int, int>> links;
    for (int i = 0; i < n; ++i) links.push_back({(i + 1) % n, i});
    links.push_back({3, 0});
    links.push_back({0, 2});
    std::vector<double> amplitudes;
    for (size_t i = 0; i < links.size(); ++i) amplitudes.push_back(amp(engine));

    SimConfig cfg = base_config(n, {4.0, 0.5, 2.5, 1.0, 6.0, 3.0});
    cfg.horizon = 20000;

    std::vector<double> raw;
    double predicted = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<MultipathChannel> channels;
        for (size_t e = 0; e < links.size(); ++e)
            channels.push_back(make_channel(
                links[e].first, links[e].second,
                {{amplitudes[e], static_cast<double>(engine() % 31) * kT}}));
        const NetworkModel net = make_network(n, std::move(channels));

        const CompensationResult comp = compensate(net, cfg);
        predicted = comp.predicted_ratio; // delay independent, same every trial
        expect(std::abs(comp.ratio - comp.predicted_ratio) / std::abs(comp.predicted_ratio) <
                   0.005,
               "trial " + std::to_string(trial) + ": ratio " + fmt(comp.ratio) +
                   " deviates from " + fmt(comp.predicted_ratio) + " by more than 0.5%");
        raw.push_back(comp.alpha_y);
    }
    const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    expect((*hi - *lo) / std::abs(*hi) > 0.05,
           "uncompensated limits vary only " + fmt((*hi - *lo) / std::abs(*hi) * 100.0) + "%");
    (void)predicted;
}

// 7. The unbiased pipeline removes the topology bias of an unbalanced pair.
void criterion_7() {
    const NetworkModel net = make_network(2, {make_channel(0, 1, {{1.0, 7 * kT}}),
                                              make_channel(1, 0, {{2.0, 4 * kT}})});
    SimConfig cfg = base_config(2, {4.0, 0.0});
    cfg.horizon = 15000;
    const PipelineResult result = unbiased_pipeline(net, cfg);
    expect(std::abs(result.statistic - 2.0) / 2.0 < 0.01,
           "statistic " + fmt(result.statistic) + " not within 1% of 2.0");
    expect(std::abs(result.statistic - 8.0 / 3.0) > 0.3,
           "statistic equals the biased gamma-weighted value");
}

// 8. Characteristic function: p(0) = 0 and the hand-computed 2-node case.
void criterion_8() {
    std::mt19937_64 engine(8);
    std::uniform_real_distribution<double> delay(0.0, 0.5);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);

    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + trial % 6;
        NetworkModel net = random_sc_network(n, 800 + trial, 20);
        for (MultipathChannel& ch : net.channels)
            for (Path& p : ch.paths) p.delay = delay(engine); // arbitrary real delays
        SimConfig cfg = base_config(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i) cfg.c[i] = 0.5 + 0.25 * (i % 4);

        const std::complex<double> p0 = characteristic_value(net, cfg, {0.0, 0.0});

        // Hadamard bound of Delta - H(0) = K Dc^-1 L as the determinant scale
        const LaplacianBundle bundle = laplacian(build_digraph(net));
        double scale = 1.0;
        for (int i = 0; i < n; ++i) {
            double row = 0.0;
            for (int j = 0; j < n; ++j) {
                const double v = cfg.coupling_gain / cfg.c[i] * bundle.laplacian(i, j);
                row += v * v;
            }
            scale *= std::sqrt(row);
        }
        expect(std::abs(p0) <= 1e-10 * scale, "trial " + std::to_string(trial) + ": |p(0)| = " +
                                                  fmt(std::abs(p0)) + " exceeds 1e-10 * " +
                                                  fmt(scale));
    }

    const NetworkModel pair = two_node_symmetric();
    const SimConfig cfg = base_config(2, {0.0, 0.0});
    for (int trial = 0; trial < 5; ++trial) {
        const std::complex<double> s{coord(engine), coord(engine)};
        const std::complex<double> expected = s * (s + 2.0);
        const std::complex<double> actual = characteristic_value(pair, cfg, s);
        expect(std::abs(actual - expected) <= 1e-10 * std::max(1.0, std::abs(expected)),
               "p(s) mismatch at s = " + fmt(s.real()) + "+" + fmt(s.imag()) + "i");
    }
}

// 9. The two rate estimators agree; both nail the analytic 2-node value.
void criterion_9() {
    {
        const SimConfig cfg = base_config(2, {3.0, 7.0});
        const NetworkModel net = two_node_symmetric();
        const double spectral = rate_spectral(net, cfg).decay_rate;
        const double empirical = rate_empirical(simulate(net, cfg), 5.0);
        expect(std::abs(spectral - 2.0) / 2.0 < 0.05,
               "spectral rate " + fmt(spectral) + " not within 5% of 2.0");
        expect(std::abs(empirical - 2.0) / 2.0 < 0.05,
               "empirical rate " + fmt(empirical) + " not within 5% of 2.0");
    }

    int tested = 0;
    for (std::uint64_t seed = 900; tested < 10; ++seed) {
        const int n = 2 + static_cast<int>(seed % 3);
        const NetworkModel net = random_sc_network(n, seed, 25);
        const auto [quantized, report] = quantize_delays(net, kT);
        if (n * (report.max_lag_samples + 1) > 500) continue;

        SimConfig cfg = base_config(n, {});
        for (int i = 0; i < n; ++i) cfg.u.push_back(1.0 + 2.0 * static_cast<double>(i));
        cfg.horizon = 30000;

        const CompanionSpectrum spectrum = rate_spectral(quantized, cfg);
        const Trajectory traj = simulate(quantized, cfg);
        const LaplacianBundle bundle = laplacian(build_digraph(quantized));
        const double alpha = alpha_star(quantized, bundle.gamma, cfg).with_quantized_delays;
        const double empirical = rate_empirical(traj, alpha);

        expect(std::abs(spectrum.decay_rate - empirical) / empirical < 0.15,
               "seed " + std::to_string(seed) + ": spectral " + fmt(spectrum.decay_rate) +
                   " vs empirical " + fmt(empirical) + " disagree by more than 15%");
        ++tested;
    }
}

// 10. Condition checker: crafted violation and exact unity for clean links.
void criterion_10() {
    const NetworkModel crafted = make_network(2, {make_channel(1, 0, {{1.0, 0.0}, {-0.5, kT}})});
    const ConditionReport report = check_conditions(crafted, kPi / kT, 1024);
    expect(report.all_dc_positive, "dc gain 0.5 should pass the dc condition");
    expect(report.receivers.size() == 1 && report.receivers[0].worst_ratio.has_value(),
           "missing receiver ratio");
    expect(std::abs(*report.receivers[0].worst_ratio - 3.0) <= 1e-6,
           "worst ratio " + fmt(*report.receivers[0].worst_ratio) + " not 3 +- 1e-6");
    expect(std::abs(*report.receivers[0].worst_omega - kPi / kT) <= 1e-6,
           "worst omega not at pi/T");

    const NetworkModel clean = make_network(
        4, {make_channel(0, 1, {{0.8, 3 * kT}}), make_channel(1, 2, {{1.1, 14 * kT}}),
            make_channel(2, 3, {{0.4, 0.0}}), make_channel(3, 0, {{1.9, 27 * kT}})});
    const ConditionReport clean_report = check_conditions(clean, kPi / kT, 1024);
    for (const ReceiverCondition& rc : clean_report.receivers)
        expect(rc.worst_ratio.has_value() && *rc.worst_ratio == 1.0,
               "single positive paths must give worst ratio exactly 1");
}

// 11. Byte-identical artifacts when the CLI runs the same seeded scenario twice.
void criterion_11() {
    const fs::path base = fs::temp_directory_path() / "consim-acceptance-11";
    fs::remove_all(base);
    fs::create_directories(base);

    const json scenario = {
        {"experiment", "simulate"},
        {"topology",
         {{"positions", {{0.0, 0.0}, {40.0, 0.0}, {0.0, 40.0}, {40.0, 40.0}}},
          {"connectivity",
           {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}, {3, 0}, {0, 3}}},
          {"channel_model",
           {{"mean_amplitude", 1.0},
            {"fading_sigma", 0.5},
            {"delay_spread", 0.05},
            {"paths", 5},
            {"propagation_speed", 188.0},
            {"seed", 5}}}}},
        {"sim", {{"T", 0.01}, {"horizon", 8000}}},
        {"inputs", {{"u", {1.0, 4.0, 2.0, 7.0}}}},
    };
    const fs::path config = base / "scenario.json";
    {
        std::ofstream out(config);
        out << scenario.dump(2) << "\n";
    }

    const std::string cli = CONSIM_CLI_PATH;
    const auto run_once = [&](const std::string& out_dir) {
        const std::string cmd = "\"" + cli + "\" simulate --config \"" + config.string() +
                                "\" --out \"" + (base / out_dir).string() + "\" >/dev/null 2>&1";
        expect(std::system(cmd.c_str()) == 0, "CLI run failed: " + cmd);
    };
    run_once("a");
    run_once("b");

    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream out;
        out << in.rdbuf();
        return out.str();
    };
    expect(slurp(base / "a" / "trajectory.csv") == slurp(base / "b" / "trajectory.csv"),
           "trajectory.csv differs between identical runs");
    expect(slurp(base / "a" / "convergence.csv") == slurp(base / "b" / "convergence.csv"),
           "convergence.csv differs between identical runs");

    json sa = json::parse(slurp(base / "a" / "summary.json"));
    json sb = json::parse(slurp(base / "b" / "summary.json"));
    sa.erase("timings");
    sb.erase("timings");
    expect(sa == sb, "summary.json numeric content differs between identical runs");
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void()>>> criteria = {
        {"balanced zero-delay average consensus (1e-6, <0.1s)", criterion_1},
        {"Eq.-(4)-style prediction on 10 seeded fading networks (<1e-2, >=9/10, <5s)", criterion_2},
        {"chain root-value consensus under random delays (1e-3)", criterion_3},
        {"non-QSC clustering with persistent spread > 1", criterion_4},
        {"gamma estimation within 1e-3 of the null-space solve", criterion_5},
        {"delay-invariant compensation (0.5%) with >5% raw spread", criterion_6},
        {"unbiased pipeline returns 2.0 +- 1% on the unbalanced pair", criterion_7},
        {"characteristic function: p(0)=0 and the s(s+2) hand case", criterion_8},
        {"rate estimators agree within 15%; 2-node case within 5% of 2.0", criterion_9},
        {"condition checker: crafted ratio 3 +- 1e-6, clean ratio exactly 1", criterion_10},
        {"seeded CLI runs are byte-identical", criterion_11},
    };

    int failed = 0;
    for (size_t i = 0; i < criteria.size(); ++i) {
        try {
            criteria[i].second();
            std::cout << "PASS criterion " << (i + 1) << ": " << criteria[i].first << "\n";
        } catch (const std::exception& e) {
            ++failed;
            std::cout << "FAIL criterion " << (i + 1) << ": " << criteria[i].first << " -- "
                      << e.what() << "\n";
        }
    }
    std::cout << (failed == 0 ? "ALL CRITERIA PASSED" : std::to_string(failed) + " CRITERIA FAILED")
              << "\n";
    return failed == 0 ? 0 : 1;
}
