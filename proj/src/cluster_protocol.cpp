#include "cogmesh/cluster_protocol.hpp"

#include <algorithm>

namespace cogmesh {

const char* to_string(NodeRole role) {
    switch (role) {
        case NodeRole::Scanning: return "Scanning";
        case NodeRole::Head: return "Head";
        case NodeRole::Ordinary: return "Ordinary";
        case NodeRole::Gateway: return "Gateway";
    }
    return "?";
}

std::optional<int> ClusterRecord::lowest_free_slot() const {
    std::vector<bool> used(static_cast<std::size_t>(max_slots), false);
    for (const auto& [id, slot] : members) {
        if (slot >= 0 && slot < max_slots) used[static_cast<std::size_t>(slot)] = true;
    }
    for (int s = 0; s < max_slots; ++s) {
        if (!used[static_cast<std::size_t>(s)]) return s;
    }
    return std::nullopt;
}

std::optional<ScanState> start_scan(std::span<const ChannelObservation> obs, Tick interval,
                                    std::optional<ChannelId> start_at) {
    ScanState s;
    s.available = available_channels(obs);
    if (s.available.empty()) return std::nullopt;
    const bool start_ok =
        start_at && std::binary_search(s.available.begin(), s.available.end(), *start_at);
    s.current = start_ok ? *start_at : s.available.front();
    s.visited.insert(s.current);
    s.interval_remaining = interval;
    return s;
}

void advance_scan(ScanState& state, ChannelId next, Tick interval) {
    state.current = next;
    state.visited.insert(next);
    state.interval_remaining = interval;
    state.heard_beacon.reset();
    state.heard_hellos.clear();
}

bool beacon_joinable(const ScanState& state, const HeardBeacon& beacon, std::optional<ChannelId> selected) {
    if (state.rejections.contains(beacon.head)) return false;
    return !selected || beacon.master == *selected;
}

ScanOutcome finish_scan_interval(const ScanState& state, std::optional<ChannelId> selected, Rng& rng) {
    if (state.heard_beacon && beacon_joinable(state, *state.heard_beacon, selected)) {
        return RequestJoin{state.heard_beacon->head, state.current};
    }
    if (!state.heard_beacon && state.heard_hellos.empty()) return FormCluster{state.current};

    for (ChannelId ch : state.available) {
        if (!state.visited.contains(ch)) return ContinueScan{ch, !state.heard_hellos.empty()};
    }
    // Every channel visited: only full or foreign clusters and 2-hop neighbors were found.
    if (selected && std::binary_search(state.available.begin(), state.available.end(), *selected)) {
        return FormCluster{*selected};
    }
    return FormCluster{state.available[rng.below(state.available.size())]};
}

JoinResponse handle_join_request(ClusterRecord& cluster, NodeId requester) {
    if (auto it = cluster.members.find(requester); it != cluster.members.end()) return JoinAccepted{it->second};
    if (cluster.full()) return JoinRejected{};
    const auto slot = cluster.lowest_free_slot();
    if (!slot) return JoinRejected{};
    cluster.members[requester] = *slot;
    return JoinAccepted{*slot};
}

HelloMessage emit_hello(const HelloInputs& in) {
    HelloMessage h;
    h.sender = in.id;
    h.head = in.head;
    h.master = in.master;
    for (const auto& o : in.obs) {
        if (o.available) h.channels.push_back({o.channel, o.q_stage});
    }
    if (in.table) h.neighbor_list = in.table->as_reports();
    h.frame_map = in.frame_map;
    return h;
}

std::vector<NodeId> process_hello(NeighborTable& table, const HelloMessage& hello, Tick now) {
    std::vector<NodeId> unknown;
    for (const auto& r : hello.neighbor_list) {
        if (r.id != table.self() && !table.knows(r.id)) unknown.push_back(r.id);
    }
    table.on_hello(hello, now);
    std::vector<NodeId> fresh;
    for (NodeId id : unknown) {
        if (table.is_two_hop(id)) fresh.push_back(id);
    }
    return fresh;
}

std::optional<ChannelId> select_offmaster_scan(ChannelId master, std::span<const ChannelObservation> obs,
                                               std::set<ChannelId>& pending, Rng& rng) {
    std::vector<ChannelId> candidates;
    std::vector<double> weights;
    for (const auto& o : obs) {
        if (!o.available || o.channel == master) continue;
        candidates.push_back(o.channel);
        weights.push_back(static_cast<double>(o.q_stage + 1));
    }
    if (candidates.empty()) {
        pending.clear();
        return std::nullopt;
    }
    for (auto it = pending.begin(); it != pending.end();) {
        if (std::find(candidates.begin(), candidates.end(), *it) != candidates.end()) {
            const ChannelId ch = *it;
            pending.erase(it);
            return ch;
        }
        it = pending.erase(it);  // no longer usable
    }
    return candidates[rng.weighted(weights)];
}

std::optional<GatewayLink> select_gateways(const ClusterRecord& a, const ClusterRecord& b,
                                           const AdjacencyFn& adjacent, std::span<const NodeId> bystanders) {
    std::set<NodeId> candidates(bystanders.begin(), bystanders.end());
    for (const auto& [id, slot] : a.members) candidates.insert(id);
    for (const auto& [id, slot] : b.members) candidates.insert(id);
    candidates.erase(a.head);
    candidates.erase(b.head);
    for (NodeId n : candidates) {
        if (adjacent(n, a.head) && adjacent(n, b.head)) return GatewayLink{n, std::nullopt};
    }

    std::set<NodeId> side_a;
    std::set<NodeId> side_b;
    for (const auto& [id, slot] : a.members) side_a.insert(id);
    side_a.insert(a.head);
    for (const auto& [id, slot] : b.members) side_b.insert(id);
    side_b.insert(b.head);
    for (NodeId x : side_a) {
        for (NodeId y : side_b) {
            if (x != y && adjacent(x, y)) return GatewayLink{x, y};
        }
    }
    return std::nullopt;
}

MasterChangeAction handle_master_change(NodeRole role, ChannelId current, ChannelId selected) {
    if (current == selected) return MasterChangeAction::None;
    switch (role) {
        case NodeRole::Head: return MasterChangeAction::DissolveAndRescan;
        case NodeRole::Ordinary:
        case NodeRole::Gateway: return MasterChangeAction::LeaveAndRescan;
        case NodeRole::Scanning: return MasterChangeAction::None;
    }
    return MasterChangeAction::None;
}

}  // namespace cogmesh
