#pragma once

#include <map>
#include <numbers>
#include <optional>
#include <span>

#include "cogmesh/messages.hpp"
#include "cogmesh/radio_env.hpp"

namespace cogmesh {

/// Constants of r = (arctan(A * dQ) + B) / C.
struct RewardParams {
    double a = 1.0;
    double b = std::numbers::pi / 2.0;
    double c = std::numbers::pi;

    bool operator==(const RewardParams&) const = default;
};

/// Throws std::invalid_argument unless A > 0, C > 0 and r stays inside [0, 1]
/// at both limits dQ -> -inf and dQ -> +inf.
void validate(const RewardParams& params);

/// Pheromone state of one node: channel -> weight over its available channels.
struct WeightList {
    std::map<ChannelId, double> entries;

    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }
    bool contains(ChannelId ch) const { return entries.contains(ch); }
    double weight(ChannelId ch) const {
        auto it = entries.find(ch);
        return it == entries.end() ? 0.0 : it->second;
    }
    double sum() const;
};

double reward(double delta_q, const RewardParams& params);

/// Reinforces `channel` by r and scales every other channel by (1 - r).
/// A channel outside the list leaves the weights unchanged.
WeightList apply_reward(WeightList weights, ChannelId channel, double r);

/// HELLO-driven update. dQ is the sender's reported stage of its master minus
/// the local stage of `local_master`; when `local_master` is empty the
/// current argmax of `weights` is used.
WeightList apply_hello(WeightList weights, const HelloMessage& hello, std::span<const ChannelObservation> local_obs,
                       const RewardParams& params, std::optional<ChannelId> local_master = std::nullopt);

/// Drops unavailable channels, admits new ones at zero weight, then blends the
/// list toward the normalized quality-stage vector by `alpha`.
/// Returns nullopt when no channel is available.
std::optional<WeightList> refresh_from_sensing(const WeightList& weights, std::span<const ChannelObservation> obs,
                                               double alpha);

/// Highest weight, ties to the lowest channel index.
std::optional<ChannelId> select_master(const WeightList& weights);

/// Baseline used when swarm selection is disabled: best q_stage, then best
/// raw quality, then lowest index. Ignores HELLOs entirely.
std::optional<ChannelId> select_best_quality(std::span<const ChannelObservation> obs);

}  // namespace cogmesh
