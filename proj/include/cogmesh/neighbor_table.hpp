#pragma once

#include <map>
#include <optional>
#include <vector>

#include "cogmesh/messages.hpp"

namespace cogmesh {

struct NeighborEntry {
    NodeId id = 0;
    int hops = 1;
    std::optional<NodeId> relay;  // set for 2-hop entries
    std::optional<NodeId> head;
    ChannelId master;
    std::vector<ChannelQuality> channels;
    Tick last_seen = 0;
};

/// One- and two-hop knowledge of a node. Two-hop entries are never stored on
/// their own: they are read out of the neighbor lists that 1-hop neighbors
/// advertised, so each one is always backed by a live relay.
class NeighborTable {
public:
    explicit NeighborTable(NodeId self = 0) : self_(self) {}

    NodeId self() const { return self_; }

    /// Records the sender as 1-hop along with the neighbor list it advertised.
    void on_hello(const HelloMessage& hello, Tick now);
    /// A beacon proves the head is 1-hop; its channel list is kept if already known.
    void on_beacon(const Beacon& beacon, Tick now);

    /// Drops 1-hop entries last seen before `cutoff` (and the 2-hop entries they relayed).
    void evict_older_than(Tick cutoff);
    void clear() {
        one_hop_.clear();
        reported_count_.clear();
    }

    bool is_one_hop(NodeId id) const { return one_hop_.contains(id); }
    bool is_two_hop(NodeId id) const {
        return id != self_ && !one_hop_.contains(id) && reported_count_.contains(id);
    }
    bool knows(NodeId id) const { return one_hop_.contains(id) || reported_count_.contains(id); }
    std::size_t size() const { return one_hop_.size(); }
    std::optional<NeighborEntry> find(NodeId id) const;

    std::vector<NeighborEntry> one_hop() const;
    /// Two-hop entries, one per node, relayed by the lowest-id 1-hop neighbor that lists it.
    std::vector<NeighborEntry> two_hop() const;
    /// Neighbor list a node reported in its last HELLO (empty if unknown).
    const std::vector<NeighborReport>& reported_by(NodeId id) const;

    /// The 1-hop view in HELLO form.
    std::vector<NeighborReport> as_reports() const;

private:
    struct OneHop {
        NeighborReport info;
        Tick last_seen = 0;
        std::vector<NeighborReport> reported;
    };

    void count_reports(const std::vector<NeighborReport>& reports, int delta);

    NodeId self_;
    std::map<NodeId, OneHop> one_hop_;
    std::map<NodeId, int> reported_count_;  // how many 1-hop neighbors list each id
};

}  // namespace cogmesh
