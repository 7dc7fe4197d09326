#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace consim {

// One propagation path of a link: real gain (may be negative under fading)
// and a nonnegative delay in seconds.
struct Path {
    double amplitude = 0.0;
    double delay = 0.0; // seconds
};

// A directed multipath link: node `receiver` hears node `transmitter`
// through an ordered list of paths. The frequency response is
// H(jw) = sum_p amplitude_p * exp(-j w delay_p), and dc_gain caches H(0).
struct MultipathChannel {
    int receiver = -1;
    int transmitter = -1;
    std::vector<Path> paths;
    double dc_gain = 0.0; // always equals the amplitude sum

    double max_delay() const;
};

// Validates the channel invariants (distinct endpoints, at least one path,
// finite amplitudes, finite nonnegative delays) and fills dc_gain.
MultipathChannel make_channel(int receiver, int transmitter, std::vector<Path> paths);

// Parameters of the random channel generator. Path p (p = 0..path_count-1)
// of the link r<-q gets
//   amplitude_p = (mean_amplitude + w_p) * exp(-p * sample_time / delay_spread)
//   delay_p     = dist(r,q) / propagation_speed + p * sample_time
// where w_p are i.i.d. N(0, fading_sigma^2) draws from GaussianStream(seed).
struct ChannelModelParams {
    double mean_amplitude = 1.0;    // deterministic amplitude component
    double fading_sigma = 0.5;      // std dev of the Gaussian fading term
    double delay_spread = 0.05;     // seconds
    double sample_time = 0.01;      // seconds
    int path_count = 5;
    double propagation_speed = 3.0e8; // meters per second
    std::uint64_t seed = 0;
};

// Node count, geometry (empty when the channels were given explicitly) and
// the channel map, kept sorted by (receiver, transmitter).
struct NetworkModel {
    int node_count = 0;
    std::vector<std::array<double, 2>> positions;
    std::vector<MultipathChannel> channels;

    const MultipathChannel* find_channel(int receiver, int transmitter) const;
    std::vector<const MultipathChannel*> channels_to(int receiver) const;
    double max_delay() const;
};

// Builds a NetworkModel with validated, sorted channels from explicit links.
NetworkModel make_network(int node_count, std::vector<MultipathChannel> channels,
                          std::vector<std::array<double, 2>> positions = {});

// H(jw) of one channel; the w=0 value is returned as dc_gain exactly.
std::complex<double> frequency_response(const MultipathChannel& channel, double omega);

// |H(jw)|. A single-path channel has constant magnitude |a| for every w,
// which is returned exactly instead of through trig roundoff.
double frequency_response_magnitude(const MultipathChannel& channel, double omega);

// Draws one multipath channel per directed connectivity entry
// (receiver, transmitter). Normal draws are consumed in a fixed order --
// entries sorted by (receiver, transmitter), then path index -- so the seed
// fully determines the network.
NetworkModel generate_network(const std::vector<std::array<double, 2>>& positions,
                              const std::vector<std::pair<int, int>>& connectivity,
                              const ChannelModelParams& params);

struct ChannelDcEntry {
    int receiver = -1;
    int transmitter = -1;
    double dc_gain = 0.0;
    bool positive = false;
};

struct ReceiverCondition {
    int receiver = -1;
    double dc_row_sum = 0.0;
    bool dc_row_positive = false;
    // Largest sum_q |H_rq(jw)| / sum_q H_rq(0) over the grid and where it
    // was attained; absent when the dc row sum is not positive.
    std::optional<double> worst_ratio;
    std::optional<double> worst_omega;
    bool rowsum_bound_holds = false;
};

// Per-channel dc signs and the per-receiver row-sum frequency bound. The
// bound is a sufficient convergence condition only: violating networks can
// and do still converge.
struct ConditionReport {
    std::vector<ChannelDcEntry> dc;
    bool all_dc_positive = false;
    std::vector<ReceiverCondition> receivers;
    bool all_rowsum_hold = false;
    double omega_max = 0.0;
    int omega_steps = 0;
    std::string note;
};

// Sweeps omega over `omega_steps` uniform points on [0, omega_max] (both
// endpoints included) and evaluates the dc and row-sum conditions.
ConditionReport check_conditions(const NetworkModel& network, double omega_max, int omega_steps);

} // namespace consim
