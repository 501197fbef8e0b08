#include "cogmesh/reformation.hpp"

#include <algorithm>

namespace cogmesh {

void LocalGraph::add_node(LocalNode n) {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), n.id,
                               [](const LocalNode& a, NodeId id) { return a.id < id; });
    if (it != nodes.end() && it->id == n.id) {
        *it = std::move(n);
    } else {
        nodes.insert(it, std::move(n));
    }
}

void LocalGraph::add_edge(NodeId a, NodeId b) {
    if (a == b) return;
    edges.insert(std::minmax(a, b));
}

bool LocalGraph::adjacent(NodeId a, NodeId b) const { return a != b && edges.contains(std::minmax(a, b)); }

const LocalNode* LocalGraph::node(NodeId id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const LocalNode& a, NodeId i) { return a.id < i; });
    return (it != nodes.end() && it->id == id) ? &*it : nullptr;
}

void LocalGraph::derive_clusters() {
    std::map<NodeId, CurrentCluster> by_head;
    for (const auto& n : nodes) {
        auto& c = by_head[n.head];
        c.head = n.head;
        c.members.push_back(n.id);
    }
    current_clusters.clear();
    for (auto& [head, c] : by_head) {
        if (const LocalNode* h = node(head)) c.master = h->control;
        else if (const LocalNode* m = node(c.members.front())) c.master = m->control;
        current_clusters.push_back(std::move(c));
    }
}

namespace {

std::vector<ChannelId> channels_of(const std::vector<ChannelQuality>& cq) {
    std::vector<ChannelId> out;
    out.reserve(cq.size());
    for (const auto& c : cq) out.push_back(c.channel);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

LocalGraph build_local_graph(const WorkingNode& self, const NeighborTable& table) {
    // Everything heard, keyed by id: 1-hop entries first, then reported ones.
    std::map<NodeId, LocalNode> known;
    known[self.id] = {self.id, self.control, self.available, self.head};
    const auto one_hop = table.one_hop();
    for (const auto& e : one_hop) {
        if (!e.head) continue;
        known[e.id] = {e.id, e.master, channels_of(e.channels), *e.head};
    }
    for (const auto& e : one_hop) {
        for (const auto& r : table.reported_by(e.id)) {
            if (!r.head || known.contains(r.id)) continue;
            known[r.id] = {r.id, r.master, channels_of(r.channels), *r.head};
        }
    }

    std::set<NodeId> heads{self.head};
    for (const auto& e : one_hop) {
        if (e.head) heads.insert(*e.head);
    }

    LocalGraph g;
    for (auto& [id, n] : known) {
        if (heads.contains(n.head)) g.add_node(n);
    }
    for (const auto& e : one_hop) {
        if (g.contains(e.id)) g.add_edge(self.id, e.id);
        if (!g.contains(e.id)) continue;
        for (const auto& r : table.reported_by(e.id)) {
            if (g.contains(r.id)) g.add_edge(e.id, r.id);
        }
    }
    g.derive_clusters();
    return g;
}

ReformPlan greedy_mds(const LocalGraph& graph, NodeId working, int max_slots) {
    std::set<NodeId> remaining;
    for (const auto& n : graph.nodes) remaining.insert(n.id);

    ReformPlan plan;
    auto form = [&](NodeId head) {
        const ChannelId ch = graph.node(head)->control;
        PlannedCluster c{head, ch, {head}};
        remaining.erase(head);
        for (NodeId v : std::vector<NodeId>(remaining.begin(), remaining.end())) {
            if (static_cast<int>(c.members.size()) >= max_slots) break;
            if (graph.adjacent(head, v) && graph.node(v)->control == ch) {
                c.members.push_back(v);
                remaining.erase(v);
            }
        }
        plan.clusters.push_back(std::move(c));
    };

    if (graph.contains(working)) form(working);
    while (!remaining.empty()) {
        NodeId best = *remaining.begin();
        int best_degree = -1;
        for (NodeId v : remaining) {
            const ChannelId ch = graph.node(v)->control;
            int degree = 0;
            for (NodeId u : remaining) {
                if (graph.adjacent(u, v) && graph.node(u)->control == ch) ++degree;
            }
            if (degree > best_degree) {
                best_degree = degree;
                best = v;
            }
        }
        form(best);
    }
    plan.gain = static_cast<int>(graph.current_clusters.size()) - static_cast<int>(plan.clusters.size());
    return plan;
}

std::optional<std::string> plan_violation(const LocalGraph& graph, const ReformPlan& plan, int max_slots) {
    std::set<NodeId> seen;
    for (const auto& c : plan.clusters) {
        if (c.members.empty() || c.members.front() != c.head) return "cluster does not start with its head";
        if (static_cast<int>(c.members.size()) > max_slots) return "cluster exceeds max_slots";
        for (NodeId m : c.members) {
            const LocalNode* n = graph.node(m);
            if (!n) return "member outside the local graph";
            if (!seen.insert(m).second) return "node assigned twice";
            if (m != c.head && !graph.adjacent(m, c.head)) return "member not adjacent to head";
            if (std::find(n->available.begin(), n->available.end(), c.master) == n->available.end()) {
                return "master channel unavailable to member";
            }
        }
    }
    if (seen.size() != graph.nodes.size()) return "plan does not cover the local graph";
    const int gain = static_cast<int>(graph.current_clusters.size()) - static_cast<int>(plan.clusters.size());
    if (gain != plan.gain) return "stated gain does not match";
    return std::nullopt;
}

const char* to_string(NegotiationStatus status) {
    switch (status) {
        case NegotiationStatus::Pending: return "pending";
        case NegotiationStatus::Committed: return "committed";
        case NegotiationStatus::Cancelled: return "cancelled";
    }
    return "?";
}

std::optional<Negotiation> Negotiation::start(NodeId working, ReformPlan plan, std::vector<NodeId> affected_heads,
                                              int timeout_superframes) {
    if (plan.gain < 1) return std::nullopt;
    std::sort(affected_heads.begin(), affected_heads.end());
    affected_heads.erase(std::unique(affected_heads.begin(), affected_heads.end()), affected_heads.end());
    return Negotiation(working, std::move(plan), std::move(affected_heads), timeout_superframes);
}

void Negotiation::on_reply(NodeId head, HeadReply reply) {
    if (status_ != NegotiationStatus::Pending) return;
    if (std::find(heads_.begin(), heads_.end(), head) == heads_.end()) return;
    if (reply == HeadReply::Deny) {
        cancel("denied by head " + std::to_string(head));
        return;
    }
    acked_.insert(head);
}

NegotiationStatus Negotiation::on_superframe_boundary() {
    if (status_ != NegotiationStatus::Pending) return status_;
    ++elapsed_;
    if (acked_.size() == heads_.size()) {
        status_ = NegotiationStatus::Committed;
    } else if (elapsed_ >= timeout_) {
        cancel("timeout");
    }
    return status_;
}

void Negotiation::cancel(std::string reason) {
    if (status_ != NegotiationStatus::Pending) return;
    status_ = NegotiationStatus::Cancelled;
    reason_ = std::move(reason);
}

HeadReply HeadArbiter::on_request(std::uint64_t plan_id, const ReformPlan& plan,
                                  const std::vector<NodeId>& own_members) {
    if (lock_ && *lock_ != plan_id) return HeadReply::Deny;
    std::set<NodeId> covered;
    for (const auto& c : plan.clusters) covered.insert(c.members.begin(), c.members.end());
    for (NodeId m : own_members) {
        if (!covered.contains(m)) return HeadReply::Deny;
    }
    lock_ = plan_id;
    return HeadReply::Ack;
}

void HeadArbiter::release(std::uint64_t plan_id) {
    if (lock_ && *lock_ == plan_id) lock_.reset();
}

}  // namespace cogmesh
