#include "cogmesh/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cogmesh {

double population_stddev(std::span<const int> counts) {
    if (counts.empty()) return 0.0;
    const double n = static_cast<double>(counts.size());
    double mean = 0.0;
    for (int c : counts) mean += c;
    mean /= n;
    double ss = 0.0;
    for (int c : counts) ss += (c - mean) * (c - mean);
    return std::sqrt(ss / n);
}

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    std::vector<int> size;

    explicit DisjointSets(std::size_t n) : parent(n), size(n, 1) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size[a] < size[b]) std::swap(a, b);
        parent[b] = a;
        size[a] += size[b];
    }
};

}  // namespace

int largest_cloud(std::span<const std::optional<ChannelId>> masters,
                  const std::vector<std::vector<NodeId>>& adjacency) {
    DisjointSets sets(masters.size());
    for (std::size_t a = 0; a < masters.size() && a < adjacency.size(); ++a) {
        if (!masters[a]) continue;
        for (NodeId b : adjacency[a]) {
            if (b < masters.size() && masters[b] && *masters[b] == *masters[a]) sets.unite(a, b);
        }
    }
    int best = 0;
    for (std::size_t a = 0; a < masters.size(); ++a) {
        if (masters[a]) best = std::max(best, sets.size[sets.find(a)]);
    }
    return best;
}

std::vector<int> master_counts(std::span<const std::optional<ChannelId>> masters, int channel_count) {
    std::vector<int> counts(static_cast<std::size_t>(channel_count), 0);
    for (const auto& m : masters) {
        if (m && m->index >= 0 && m->index < channel_count) ++counts[static_cast<std::size_t>(m->index)];
    }
    return counts;
}

}  // namespace cogmesh
