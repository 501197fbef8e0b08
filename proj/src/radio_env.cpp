#include "cogmesh/radio_env.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cogmesh {

namespace {

std::vector<PuSnapshot> snapshot(const RadioEnvironment& env) {
    std::vector<PuSnapshot> snap;
    snap.reserve(env.pus.size());
    for (const auto& pu : env.pus) {
        snap.push_back({pu.position, pu.channel, pu.active, pu.protection_radius, pu.interference_power});
    }
    return snap;
}

void record(RadioEnvironment& env) {
    env.history.push_back(snapshot(env));
    const std::size_t limit = std::max<std::size_t>(1, env.history_limit);
    while (env.history.size() > limit) env.history.pop_front();
}

bool periodic_active(const PeriodicActivity& m, Tick tick) {
    const Tick phase = tick % m.period_ticks;
    return static_cast<double>(phase) < m.duty_fraction * static_cast<double>(m.period_ticks);
}

}  // namespace

void validate(const RadioEnvironment& env) {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (env.channel_count < 1) fail("channel_count must be >= 1");
    if (env.quant_stages < 2) fail("quant_stages must be >= 2");
    if (!(env.q_max > 0.0)) fail("q_max must be > 0");
    if (!(env.pathloss_exponent > 0.0)) fail("pathloss_exponent must be > 0");
    if (env.background_level < 0.0) fail("background_level must be >= 0");
    for (const auto& pu : env.pus) {
        if (pu.channel.index < 0 || pu.channel.index >= env.channel_count) fail("pu channel out of range");
        if (!(pu.protection_radius > 0.0)) fail("pu protection_radius must be > 0");
        if (pu.interference_power < 0.0) fail("pu interference_power must be >= 0");
        if (const auto* p = std::get_if<PeriodicActivity>(&pu.model)) {
            if (p->period_ticks < 1) fail("pu period must be >= 1");
            if (p->duty_fraction < 0.0 || p->duty_fraction > 1.0) fail("pu duty_fraction must be in [0,1]");
        } else {
            const auto& m = std::get<MarkovActivity>(pu.model);
            if (m.p_on < 0.0 || m.p_on > 1.0 || m.p_off < 0.0 || m.p_off > 1.0) fail("pu p_on/p_off must be in [0,1]");
        }
    }
}

RadioEnvironment prime_environment(RadioEnvironment env) {
    for (auto& pu : env.pus) {
        if (const auto* p = std::get_if<PeriodicActivity>(&pu.model)) pu.active = periodic_active(*p, env.tick);
    }
    env.history.clear();
    record(env);
    return env;
}

RadioEnvironment step_environment(RadioEnvironment env, Rng& rng) {
    ++env.tick;
    for (auto& pu : env.pus) {
        if (const auto* p = std::get_if<PeriodicActivity>(&pu.model)) {
            if (p->hop && env.tick % p->period_ticks == 0) {
                pu.channel = ChannelId{(pu.channel.index + 1) % env.channel_count};
            }
            pu.active = periodic_active(*p, env.tick);
        } else {
            const auto& m = std::get<MarkovActivity>(pu.model);
            // One draw per PU per tick regardless of state keeps the stream aligned.
            const double u = rng.uniform();
            pu.active = pu.active ? !(u < m.p_off) : (u < m.p_on);
        }
    }
    record(env);
    return env;
}

int quantize(double q_raw, double q_max, int stages) {
    const double scaled = std::floor(static_cast<double>(stages) * q_raw / q_max);
    if (scaled <= 0.0) return 0;
    return static_cast<int>(std::min(scaled, static_cast<double>(stages - 1)));
}

double background_field(std::uint64_t seed, ChannelId channel, Position pos) {
    std::uint64_t h = mix64(seed ^ 0xC0FFEEULL);
    h = mix64(h ^ static_cast<std::uint64_t>(channel.index));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(pos.x));
    h = mix64(h ^ std::bit_cast<std::uint64_t>(pos.y));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::vector<ChannelObservation> sense(const RadioEnvironment& env, Position pos, int window_ticks) {
    const int n = env.channel_count;
    std::vector<bool> blocked(static_cast<std::size_t>(n), false);
    std::vector<double> accumulated(static_cast<std::size_t>(n), 0.0);

    auto add_tick = [&](std::span<const PuSnapshot> pus) {
        for (const auto& pu : pus) {
            if (!pu.active) continue;
            const auto c = static_cast<std::size_t>(pu.channel.index);
            const double d = distance(pos, pu.position);
            if (d <= pu.protection_radius) {
                blocked[c] = true;
            } else {
                accumulated[c] += pu.interference_power / (1.0 + std::pow(d, env.pathloss_exponent));
            }
        }
    };

    // Ticks before the start of the run do not exist and contribute nothing.
    auto window = static_cast<std::size_t>(std::max(1, window_ticks));
    if (env.history.empty()) {
        const auto now = snapshot(env);
        for (std::size_t w = 0; w < window; ++w) add_tick(now);
    } else {
        window = std::min(window, env.history.size());
        for (std::size_t w = 0; w < window; ++w) add_tick(env.history[env.history.size() - 1 - w]);
    }

    std::vector<ChannelObservation> obs;
    obs.reserve(static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        double acc = accumulated[ci];
        if (env.background_level > 0.0) {
            acc += static_cast<double>(window) * env.background_level *
                   background_field(env.background_seed, ChannelId{c}, pos);
        }
        const double q = env.q_max / (1.0 + acc);
        obs.push_back({ChannelId{c}, !blocked[ci], q, quantize(q, env.q_max, env.quant_stages)});
    }
    return obs;
}

std::vector<ChannelId> available_channels(std::span<const ChannelObservation> obs) {
    std::vector<ChannelId> out;
    for (const auto& o : obs) {
        if (o.available) out.push_back(o.channel);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace cogmesh
