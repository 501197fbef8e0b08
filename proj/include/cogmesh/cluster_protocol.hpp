#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "cogmesh/messages.hpp"
#include "cogmesh/neighbor_table.hpp"
#include "cogmesh/radio_env.hpp"
#include "cogmesh/rng.hpp"

namespace cogmesh {

enum class NodeRole { Scanning, Head, Ordinary, Gateway };

const char* to_string(NodeRole role);

/// Either one node adjacent to both heads, or an adjacent pair (a in A, b in B).
struct GatewayLink {
    NodeId first = 0;
    std::optional<NodeId> second;

    bool single() const { return !second.has_value(); }
    auto operator<=>(const GatewayLink&) const = default;
};

struct NeighborCluster {
    NodeId head = 0;
    ChannelId master;
    GatewayLink link;
};

struct ClusterRecord {
    NodeId head = 0;
    ChannelId master;
    std::map<NodeId, int> members;  // node -> mini-slot; the head holds a slot too
    int max_slots = 8;
    Tick frame_offset = 0;
    std::vector<NeighborCluster> neighbor_clusters;

    std::optional<int> lowest_free_slot() const;
    bool full() const { return static_cast<int>(members.size()) >= max_slots; }
};

// ---------------------------------------------------------------------------
// Scanning

struct HeardBeacon {
    NodeId head = 0;
    ChannelId master;
    int free_slots = 0;
};

struct ScanState {
    std::vector<ChannelId> available;  // at scan start, ascending
    std::set<ChannelId> visited;
    ChannelId current;
    Tick interval_remaining = 0;
    std::optional<HeardBeacon> heard_beacon;
    std::vector<HelloMessage> heard_hellos;
    std::set<NodeId> detected_clusters;
    std::set<NodeId> rejections;
};

struct FormCluster {
    ChannelId channel;
};
struct RequestJoin {
    NodeId head = 0;
    ChannelId channel;
};
struct ContinueScan {
    ChannelId channel;
    bool exchanged_neighbors = false;  // case 3: neighbors recorded and offered through public RA
};
using ScanOutcome = std::variant<FormCluster, RequestJoin, ContinueScan>;

/// Starts on `start_at` when it is available, otherwise on the lowest
/// available channel. Returns nullopt when nothing is available.
std::optional<ScanState> start_scan(std::span<const ChannelObservation> obs, Tick interval,
                                    std::optional<ChannelId> start_at = std::nullopt);

/// Moves the scan to `next`, clearing what was heard during the previous interval.
void advance_scan(ScanState& state, ChannelId next, Tick interval);

/// A beacon is joinable when its cluster has not rejected this node and, if
/// the node already has a selected master, the cluster runs on that master.
bool beacon_joinable(const ScanState& state, const HeardBeacon& beacon, std::optional<ChannelId> selected);

/// Decides what to do after an interval: form on the current channel if
/// nothing was heard, join a joinable cluster, otherwise move to the lowest
/// unvisited available channel. Once every channel is visited the node forms
/// its own cluster on `selected` when available, else on a uniformly random
/// available channel.
ScanOutcome finish_scan_interval(const ScanState& state, std::optional<ChannelId> selected, Rng& rng);

// ---------------------------------------------------------------------------
// Cluster membership

struct JoinAccepted {
    int slot = 0;
};
struct JoinRejected {};
using JoinResponse = std::variant<JoinAccepted, JoinRejected>;

/// Assigns the lowest free mini-slot, or rejects when the cluster is full.
JoinResponse handle_join_request(ClusterRecord& cluster, NodeId requester);

// ---------------------------------------------------------------------------
// HELLO and neighbor processing

struct HelloInputs {
    NodeId id = 0;
    std::optional<NodeId> head;
    ChannelId master;
    std::span<const ChannelObservation> obs;
    const NeighborTable* table = nullptr;
    std::optional<FrameMap> frame_map;
};

HelloMessage emit_hello(const HelloInputs& in);

/// Updates the neighbor table from a HELLO and returns the ids that became
/// known as 2-hop neighbors because of it.
std::vector<NodeId> process_hello(NeighborTable& table, const HelloMessage& hello, Tick now);

// ---------------------------------------------------------------------------
// Off-master listening

/// Channel to listen on during an idle Data period. Channels in `pending`
/// (where new 2-hop neighbors were reported) take priority, lowest index
/// first, and are consumed. Otherwise non-master channels are drawn with
/// probability proportional to q_stage + 1.
std::optional<ChannelId> select_offmaster_scan(ChannelId master, std::span<const ChannelObservation> obs,
                                               std::set<ChannelId>& pending, Rng& rng);

// ---------------------------------------------------------------------------
// Gateways

using AdjacencyFn = std::function<bool(NodeId, NodeId)>;

/// Single gateway: lowest-id non-head node adjacent to both heads, drawn from
/// the members of A and B plus `bystanders` (nodes of other clusters).
/// Otherwise the lexicographically lowest adjacent pair (a in A, b in B).
std::optional<GatewayLink> select_gateways(const ClusterRecord& a, const ClusterRecord& b,
                                           const AdjacencyFn& adjacent, std::span<const NodeId> bystanders = {});

// ---------------------------------------------------------------------------
// Master channel changes

enum class MasterChangeAction { None, LeaveAndRescan, DissolveAndRescan };

MasterChangeAction handle_master_change(NodeRole role, ChannelId current, ChannelId selected);

}  // namespace cogmesh
