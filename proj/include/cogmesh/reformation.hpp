#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cogmesh/neighbor_table.hpp"

namespace cogmesh {

struct LocalNode {
    NodeId id = 0;
    ChannelId control;
    std::vector<ChannelId> available;
    NodeId head = 0;
};

struct CurrentCluster {
    NodeId head = 0;
    ChannelId master;
    std::vector<NodeId> members;  // includes the head when it is known
};

struct LocalGraph {
    std::vector<LocalNode> nodes;  // ascending id
    std::set<std::pair<NodeId, NodeId>> edges;  // stored with first < second
    std::vector<CurrentCluster> current_clusters;  // ascending head id

    void add_node(LocalNode node);
    void add_edge(NodeId a, NodeId b);
    bool adjacent(NodeId a, NodeId b) const;
    const LocalNode* node(NodeId id) const;
    bool contains(NodeId id) const { return node(id) != nullptr; }
    /// Rebuilds current_clusters from the head field of every node.
    void derive_clusters();
};

struct PlannedCluster {
    NodeId head = 0;
    ChannelId master;
    std::vector<NodeId> members;  // head first, then ascending id
};

struct ReformPlan {
    std::vector<PlannedCluster> clusters;
    int gain = 0;
};

/// What the working node knows about itself.
struct WorkingNode {
    NodeId id = 0;
    NodeId head = 0;
    ChannelId control;
    std::vector<ChannelId> available;
};

/// Node set: members of the host cluster and of every cluster that has a
/// 1-hop neighbor of the working node. Edge a-b iff either lists the other as
/// 1-hop in what the working node has heard.
LocalGraph build_local_graph(const WorkingNode& self, const NeighborTable& table);

/// Greedy dominating-set clustering. The working node heads the first cluster
/// on its control channel; then the node with the most remaining same-channel
/// neighbors (ties to the lowest id) heads the next, until no node remains.
/// A cluster never takes more than `max_slots` nodes.
ReformPlan greedy_mds(const LocalGraph& graph, NodeId working, int max_slots);

/// Checks partition, adjacency-to-head, channel feasibility, capacity and gain.
/// On failure returns a short reason.
std::optional<std::string> plan_violation(const LocalGraph& graph, const ReformPlan& plan, int max_slots);

// ---------------------------------------------------------------------------
// All-or-nothing negotiation

enum class HeadReply { Ack, Deny };

enum class NegotiationStatus { Pending, Committed, Cancelled };

const char* to_string(NegotiationStatus status);

/// Working-node side of one negotiation. Commits at a superframe boundary
/// only once every affected head acknowledged; any denial or a timeout
/// cancels it.
class Negotiation {
public:
    /// nullopt when the plan brings no gain.
    static std::optional<Negotiation> start(NodeId working, ReformPlan plan, std::vector<NodeId> affected_heads,
                                            int timeout_superframes);

    NodeId working() const { return working_; }
    const ReformPlan& plan() const { return plan_; }
    const std::vector<NodeId>& affected_heads() const { return heads_; }
    NegotiationStatus status() const { return status_; }
    const std::string& cancel_reason() const { return reason_; }

    void on_reply(NodeId head, HeadReply reply);
    /// Advances the timeout clock and resolves the negotiation if possible.
    NegotiationStatus on_superframe_boundary();
    void cancel(std::string reason);

private:
    Negotiation(NodeId working, ReformPlan plan, std::vector<NodeId> heads, int timeout)
        : working_(working), plan_(std::move(plan)), heads_(std::move(heads)), timeout_(timeout) {}

    NodeId working_;
    ReformPlan plan_;
    std::vector<NodeId> heads_;
    std::set<NodeId> acked_;
    int timeout_;
    int elapsed_ = 0;
    NegotiationStatus status_ = NegotiationStatus::Pending;
    std::string reason_;
};

/// Head side: acknowledges at most one plan at a time, and only plans that
/// cover every current member of its cluster.
class HeadArbiter {
public:
    HeadReply on_request(std::uint64_t plan_id, const ReformPlan& plan, const std::vector<NodeId>& own_members);
    void release(std::uint64_t plan_id);
    std::optional<std::uint64_t> locked_by() const { return lock_; }

private:
    std::optional<std::uint64_t> lock_;
};

}  // namespace cogmesh
