#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <variant>
#include <vector>

#include "cogmesh/rng.hpp"
#include "cogmesh/types.hpp"

namespace cogmesh {

/// Active for the first duty_fraction of every period; optionally hops to
/// channel (index + 1) mod N on each period boundary.
struct PeriodicActivity {
    Tick period_ticks = 500;
    double duty_fraction = 1.0;
    bool hop = true;
};

/// Two-state chain evaluated once per tick.
struct MarkovActivity {
    double p_on = 0.1;
    double p_off = 0.1;
};

using ActivityModel = std::variant<PeriodicActivity, MarkovActivity>;

struct PrimaryUser {
    int id = 0;
    Position position;
    ChannelId channel;
    ActivityModel model = PeriodicActivity{};
    double protection_radius = 100.0;
    double interference_power = 1.0;
    bool active = false;
};

struct ChannelObservation {
    ChannelId channel;
    bool available = true;
    double q_raw = 0.0;
    int q_stage = 0;
};

/// What sensing needs to know about one PU at one tick.
struct PuSnapshot {
    Position position;
    ChannelId channel;
    bool active = false;
    double protection_radius = 0.0;
    double interference_power = 0.0;
};

struct RadioEnvironment {
    int channel_count = 1;
    std::vector<PrimaryUser> pus;
    double pathloss_exponent = 2.0;
    double q_max = 1.0;
    int quant_stages = 4;
    Tick tick = 0;

    // Static location-dependent background interference per tick, scaled into
    // [0, background_level). Zero disables it.
    double background_level = 0.0;
    std::uint64_t background_seed = 0;

    // PU states of the most recent ticks, oldest first. Bounded by history_limit.
    std::size_t history_limit = 1;
    std::deque<std::vector<PuSnapshot>> history;
};

/// Checks the structural invariants; throws std::invalid_argument naming the field.
void validate(const RadioEnvironment& env);

/// Sets initial PU activity for tick env.tick and records it as the first
/// history entry. Markov PUs keep their configured initial state.
RadioEnvironment prime_environment(RadioEnvironment env);

RadioEnvironment step_environment(RadioEnvironment env, Rng& rng);

int quantize(double q_raw, double q_max, int stages);

/// Background interference coefficient in [0, 1) for a channel at a location.
double background_field(std::uint64_t seed, ChannelId channel, Position pos);

std::vector<ChannelObservation> sense(const RadioEnvironment& env, Position pos, int window_ticks);

/// Channels marked available, in ascending index order.
std::vector<ChannelId> available_channels(std::span<const ChannelObservation> obs);

}  // namespace cogmesh
