#include "consim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "consim/rng.hpp"

namespace consim {

double MultipathChannel::max_delay() const {
    double m = 0.0;
    for (const Path& p : paths) m = std::max(m, p.delay);
    return m;
}

MultipathChannel make_channel(int receiver, int transmitter, std::vector<Path> paths) {
    if (receiver == transmitter)
        throw std::invalid_argument("channel rejected: receiver equals transmitter (node " +
                                    std::to_string(receiver) + ")");
    if (receiver < 0 || transmitter < 0)
        throw std::invalid_argument("channel rejected: negative node index");
    if (paths.empty()) throw std::invalid_argument("channel rejected: needs at least one path");

    double dc = 0.0;
    for (const Path& p : paths) {
        if (!std::isfinite(p.amplitude))
            throw std::invalid_argument("channel rejected: non-finite path amplitude");
        if (!std::isfinite(p.delay) || p.delay < 0.0)
            throw std::invalid_argument("channel rejected: path delay must be finite and >= 0");
        dc += p.amplitude;
    }
    return MultipathChannel{receiver, transmitter, std::move(paths), dc};
}

namespace {

bool channel_order(const MultipathChannel& a, const MultipathChannel& b) {
    return std::pair(a.receiver, a.transmitter) < std::pair(b.receiver, b.transmitter);
}

} // namespace

const MultipathChannel* NetworkModel::find_channel(int receiver, int transmitter) const {
    for (const MultipathChannel& ch : channels)
        if (ch.receiver == receiver && ch.transmitter == transmitter) return &ch;
    return nullptr;
}

std::vector<const MultipathChannel*> NetworkModel::channels_to(int receiver) const {
    std::vector<const MultipathChannel*> out;
    for (const MultipathChannel& ch : channels)
        if (ch.receiver == receiver) out.push_back(&ch);
    return out;
}

double NetworkModel::max_delay() const {
    double m = 0.0;
    for (const MultipathChannel& ch : channels) m = std::max(m, ch.max_delay());
    return m;
}

NetworkModel make_network(int node_count, std::vector<MultipathChannel> channels,
                          std::vector<std::array<double, 2>> positions) {
    if (node_count < 1) throw std::invalid_argument("network needs at least one node");
    if (!positions.empty() && static_cast<int>(positions.size()) != node_count)
        throw std::invalid_argument("positions length does not match node count");

    std::set<std::pair<int, int>> seen;
    for (MultipathChannel& ch : channels) {
        ch = make_channel(ch.receiver, ch.transmitter, std::move(ch.paths));
        if (ch.receiver >= node_count || ch.transmitter >= node_count)
            throw std::invalid_argument("channel references node outside the network");
        if (!seen.insert({ch.receiver, ch.transmitter}).second)
            throw std::invalid_argument("duplicate channel for receiver " +
                                        std::to_string(ch.receiver) + " <- transmitter " +
                                        std::to_string(ch.transmitter));
    }
    std::sort(channels.begin(), channels.end(), channel_order);
    return NetworkModel{node_count, std::move(positions), std::move(channels)};
}

std::complex<double> frequency_response(const MultipathChannel& channel, double omega) {
    if (omega == 0.0) return {channel.dc_gain, 0.0};
    std::complex<double> h{0.0, 0.0};
    for (const Path& p : channel.paths)
        h += p.amplitude * std::complex<double>(std::cos(omega * p.delay),
                                                -std::sin(omega * p.delay));
    return h;
}

double frequency_response_magnitude(const MultipathChannel& channel, double omega) {
    // |a e^{-jw tau}| = |a| for every omega; skip the trig roundoff.
    if (channel.paths.size() == 1) return std::abs(channel.paths[0].amplitude);
    return std::abs(frequency_response(channel, omega));
}

NetworkModel generate_network(const std::vector<std::array<double, 2>>& positions,
                              const std::vector<std::pair<int, int>>& connectivity,
                              const ChannelModelParams& params) {
    const int n = static_cast<int>(positions.size());
    if (n < 1) throw std::invalid_argument("generate_network: needs at least one position");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (positions[i] == positions[j])
                throw std::invalid_argument("generate_network: positions " + std::to_string(i) +
                                            " and " + std::to_string(j) + " coincide");
    if (params.path_count < 1) throw std::invalid_argument("generate_network: path_count >= 1");
    if (params.sample_time <= 0.0) throw std::invalid_argument("generate_network: sample_time > 0");
    if (params.delay_spread <= 0.0) throw std::invalid_argument("generate_network: delay_spread > 0");
    if (params.propagation_speed <= 0.0)
        throw std::invalid_argument("generate_network: propagation_speed > 0");
    if (params.fading_sigma < 0.0) throw std::invalid_argument("generate_network: fading_sigma >= 0");

    // Fixed draw order: edges sorted by (receiver, transmitter), then path
    // index, so the seed fully determines every coefficient.
    std::vector<std::pair<int, int>> edges = connectivity;
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        throw std::invalid_argument("generate_network: duplicate connectivity entry");

    GaussianStream fading(params.seed);
    std::vector<MultipathChannel> channels;
    channels.reserve(edges.size());
    for (const auto& [receiver, transmitter] : edges) {
        if (receiver < 0 || receiver >= n || transmitter < 0 || transmitter >= n)
            throw std::invalid_argument("generate_network: connectivity references unknown node");
        if (receiver == transmitter)
            throw std::invalid_argument("generate_network: self-loop in connectivity");

        const double dx = positions[receiver][0] - positions[transmitter][0];
        const double dy = positions[receiver][1] - positions[transmitter][1];
        const double distance = std::hypot(dx, dy);

        std::vector<Path> paths(static_cast<size_t>(params.path_count));
        for (int p = 0; p < params.path_count; ++p) {
            const double w = params.fading_sigma > 0.0 ? params.fading_sigma * fading.next() : 0.0;
            paths[static_cast<size_t>(p)] = Path{
                (params.mean_amplitude + w) * std::exp(-p * params.sample_time / params.delay_spread),
                distance / params.propagation_speed + p * params.sample_time,
            };
        }
        channels.push_back(make_channel(receiver, transmitter, std::move(paths)));
    }
    return make_network(n, std::move(channels), positions);
}

ConditionReport check_conditions(const NetworkModel& network, double omega_max, int omega_steps) {
    if (omega_steps < 2) throw std::invalid_argument("check_conditions: omega_steps >= 2");
    if (omega_max <= 0.0) throw std::invalid_argument("check_conditions: omega_max > 0");

    ConditionReport report;
    report.omega_max = omega_max;
    report.omega_steps = omega_steps;
    report.note =
        "sufficient condition only; sup over omega approximated on a uniform grid over "
        "[0, omega_max]";

    report.all_dc_positive = true;
    for (const MultipathChannel& ch : network.channels) {
        const bool positive = ch.dc_gain > 0.0;
        report.dc.push_back({ch.receiver, ch.transmitter, ch.dc_gain, positive});
        report.all_dc_positive = report.all_dc_positive && positive;
    }

    report.all_rowsum_hold = true;
    for (int r = 0; r < network.node_count; ++r) {
        const auto incoming = network.channels_to(r);
        if (incoming.empty()) continue;

        ReceiverCondition rc;
        rc.receiver = r;
        for (const MultipathChannel* ch : incoming) rc.dc_row_sum += ch->dc_gain;
        rc.dc_row_positive = rc.dc_row_sum > 0.0;
        if (!rc.dc_row_positive) {
            // Ratio undefined; the dc violation itself is the finding.
            rc.rowsum_bound_holds = false;
            report.all_rowsum_hold = false;
            report.receivers.push_back(rc);
            continue;
        }

        double worst = 0.0;
        double worst_omega = 0.0;
        for (int k = 0; k < omega_steps; ++k) {
            const double omega = omega_max * k / (omega_steps - 1);
            double magnitude_sum = 0.0;
            for (const MultipathChannel* ch : incoming)
                magnitude_sum += frequency_response_magnitude(*ch, omega);
            const double ratio = magnitude_sum / rc.dc_row_sum;
            if (ratio > worst) {
                worst = ratio;
                worst_omega = omega;
            }
        }
        rc.worst_ratio = worst;
        rc.worst_omega = worst_omega;
        rc.rowsum_bound_holds = worst <= 1.0 + 1e-12;
        report.all_rowsum_hold = report.all_rowsum_hold && rc.rowsum_bound_holds;
        report.receivers.push_back(rc);
    }
    return report;
}

} // namespace consim
