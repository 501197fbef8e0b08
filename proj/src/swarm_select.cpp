#include "cogmesh/swarm_select.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cogmesh {

void validate(const RewardParams& p) {
    if (!(p.a > 0.0)) throw std::invalid_argument("reward_a must be > 0");
    if (!(p.c > 0.0)) throw std::invalid_argument("reward_c must be > 0");
    const double low = (-std::numbers::pi / 2.0 + p.b) / p.c;
    const double high = (std::numbers::pi / 2.0 + p.b) / p.c;
    constexpr double slack = 1e-12;
    if (low < -slack || high > 1.0 + slack) {
        throw std::invalid_argument("reward_b/reward_c: r must stay within [0,1] for all dQ");
    }
}

double WeightList::sum() const {
    double s = 0.0;
    for (const auto& [ch, w] : entries) s += w;
    return s;
}

double reward(double delta_q, const RewardParams& p) {
    const double r = (std::atan(p.a * delta_q) + p.b) / p.c;
    return std::clamp(r, 0.0, 1.0);
}

WeightList apply_reward(WeightList weights, ChannelId channel, double r) {
    if (!weights.contains(channel)) return weights;
    for (auto& [ch, w] : weights.entries) {
        if (ch == channel) {
            w = std::min(1.0, w + r * (1.0 - w));
        } else {
            w *= (1.0 - r);
        }
    }
    return weights;
}

namespace {

std::optional<int> stage_of(std::span<const ChannelObservation> obs, ChannelId ch) {
    for (const auto& o : obs) {
        if (o.channel == ch && o.available) return o.q_stage;
    }
    return std::nullopt;
}

}  // namespace

WeightList apply_hello(WeightList weights, const HelloMessage& hello, std::span<const ChannelObservation> local_obs,
                       const RewardParams& params, std::optional<ChannelId> local_master) {
    const ChannelId target = hello.master;
    if (!weights.contains(target) || !stage_of(local_obs, target)) return weights;

    int remote_stage = 0;
    for (const auto& cq : hello.channels) {
        if (cq.channel == target) remote_stage = cq.q_stage;
    }
    if (!local_master) local_master = select_master(weights);
    const int local_stage = local_master ? stage_of(local_obs, *local_master).value_or(0) : 0;

    const double r = reward(static_cast<double>(remote_stage - local_stage), params);
    return apply_reward(std::move(weights), target, r);
}

std::optional<WeightList> refresh_from_sensing(const WeightList& weights, std::span<const ChannelObservation> obs,
                                               double alpha) {
    WeightList next;
    double kept = 0.0;
    int stage_total = 0;
    std::size_t n_available = 0;
    for (const auto& o : obs) {
        if (!o.available) continue;
        ++n_available;
        stage_total += o.q_stage;
        const double w = weights.weight(o.channel);
        next.entries[o.channel] = w;
        kept += w;
    }
    if (n_available == 0) return std::nullopt;

    if (kept > 0.0) {
        for (auto& [ch, w] : next.entries) w /= kept;
    } else {
        // Nothing carried over: start from a uniform prior.
        for (auto& [ch, w] : next.entries) w = 1.0 / static_cast<double>(n_available);
    }

    for (const auto& o : obs) {
        if (!o.available) continue;
        const double target = stage_total > 0 ? static_cast<double>(o.q_stage) / stage_total
                                              : 1.0 / static_cast<double>(n_available);
        double& w = next.entries[o.channel];
        w = std::clamp((1.0 - alpha) * w + alpha * target, 0.0, 1.0);
    }
    return next;
}

std::optional<ChannelId> select_master(const WeightList& weights) {
    std::optional<ChannelId> best;
    double best_w = -1.0;
    // Map iteration is in ascending channel order, so strict > keeps the lowest index on ties.
    for (const auto& [ch, w] : weights.entries) {
        if (w > best_w) {
            best_w = w;
            best = ch;
        }
    }
    return best;
}

std::optional<ChannelId> select_best_quality(std::span<const ChannelObservation> obs) {
    const ChannelObservation* best = nullptr;
    for (const auto& o : obs) {
        if (!o.available) continue;
        if (!best || o.q_stage > best->q_stage ||
            (o.q_stage == best->q_stage &&
             (o.q_raw > best->q_raw || (o.q_raw == best->q_raw && o.channel < best->channel)))) {
            best = &o;
        }
    }
    if (!best) return std::nullopt;
    return best->channel;
}

}  // namespace cogmesh
