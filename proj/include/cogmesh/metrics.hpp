#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cogmesh/types.hpp"

namespace cogmesh {

struct MetricsSample {
    Tick tick = 0;
    std::vector<int> counts;  // SUs per master channel, all channels
    double stddev = 0.0;
    int largest_cloud = 0;
    int cluster_count = 0;

    bool operator==(const MetricsSample&) const = default;
};

/// Population standard deviation over every entry, zeros included.
double population_stddev(std::span<const int> counts);

/// Size of the largest connected component of the graph restricted to edges
/// whose endpoints hold the same master. Nodes without a master are ignored.
int largest_cloud(std::span<const std::optional<ChannelId>> masters,
                  const std::vector<std::vector<NodeId>>& adjacency);

/// Per-channel count of nodes holding each master.
std::vector<int> master_counts(std::span<const std::optional<ChannelId>> masters, int channel_count);

}  // namespace cogmesh
