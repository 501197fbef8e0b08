#include <bit>

#include "doctest.h"

#include "cogmesh/reformation.hpp"
#include "cogmesh/rng.hpp"

using namespace cogmesh;

namespace {

LocalNode node(NodeId id, NodeId head, int channel = 0) { return {id, ChannelId{channel}, {ChannelId{channel}}, head}; }

std::vector<NodeId> heads_of(const ReformPlan& p) {
    std::vector<NodeId> out;
    for (const auto& c : p.clusters) out.push_back(c.head);
    return out;
}

HelloMessage hello(NodeId sender, NodeId head, std::vector<NeighborReport> neighbors = {}) {
    HelloMessage h;
    h.sender = sender;
    h.head = head;
    h.master = ChannelId{0};
    h.channels = {{ChannelId{0}, 3}};
    h.neighbor_list = std::move(neighbors);
    return h;
}

NeighborReport report(NodeId id, NodeId head) { return {id, head, ChannelId{0}, {{ChannelId{0}, 3}}}; }

}  // namespace

TEST_SUITE("reformation") {

TEST_CASE("star with the hub working: one cluster") {
    LocalGraph g;
    for (NodeId i = 0; i < 5; ++i) g.add_node(node(i, i));
    for (NodeId i = 1; i < 5; ++i) g.add_edge(0, i);
    g.derive_clusters();
    const auto plan = greedy_mds(g, 0, 8);
    REQUIRE(plan.clusters.size() == 1);
    CHECK(plan.clusters[0].members == std::vector<NodeId>{0, 1, 2, 3, 4});
    CHECK(plan.gain == 4);
    CHECK_FALSE(plan_violation(g, plan, 8).has_value());
}

TEST_CASE("path a-b-c from a: two clusters, gain 1") {
    LocalGraph g;
    for (NodeId i = 0; i < 3; ++i) g.add_node(node(i, i));
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.derive_clusters();
    REQUIRE(g.current_clusters.size() == 3);
    const auto plan = greedy_mds(g, 0, 8);
    REQUIRE(plan.clusters.size() == 2);
    CHECK(plan.clusters[0].members == std::vector<NodeId>{0, 1});
    CHECK(plan.clusters[1].members == std::vector<NodeId>{2});
    CHECK(plan.gain == 1);
    // The exact minimum {b} is smaller; the heuristic is allowed to miss it.
    CHECK(greedy_mds(g, 1, 8).clusters.size() == 1);
}

TEST_CASE("degree counts only neighbors on the same control channel") {
    LocalGraph g;
    g.add_node(node(0, 0, 0));
    g.add_node(node(1, 1, 1));
    g.add_node({2, ChannelId{1}, {ChannelId{1}}, 2});
    g.add_node({3, ChannelId{1}, {ChannelId{1}}, 3});
    g.add_node({4, ChannelId{0}, {ChannelId{0}}, 4});
    // Node 4 touches three nodes, but node 1 has two same-channel neighbors.
    g.add_edge(1, 2);
    g.add_edge(1, 3);
    g.add_edge(4, 1);
    g.add_edge(4, 2);
    g.add_edge(4, 3);
    g.derive_clusters();
    const auto plan = greedy_mds(g, 0, 8);
    CHECK(heads_of(plan) == std::vector<NodeId>{0, 1, 4});
    CHECK(plan.clusters[1].members == std::vector<NodeId>{1, 2, 3});
}

TEST_CASE("clusters are capped at max_slots") {
    LocalGraph g;
    for (NodeId i = 0; i < 6; ++i) g.add_node(node(i, i));
    for (NodeId i = 1; i < 6; ++i) g.add_edge(0, i);
    g.derive_clusters();
    const auto plan = greedy_mds(g, 0, 3);
    CHECK(plan.clusters[0].members.size() == 3);
    CHECK_FALSE(plan_violation(g, plan, 3).has_value());
}

TEST_CASE("greedy heads always dominate random graphs") {
    Rng rng(9);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(10));
        LocalGraph g;
        for (int i = 0; i < n; ++i) g.add_node(node(static_cast<NodeId>(i), static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(i) + 1))));
        for (int i = 1; i < n; ++i) g.add_edge(static_cast<NodeId>(i), static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(i))));
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                if (rng.uniform() < 0.3) g.add_edge(static_cast<NodeId>(a), static_cast<NodeId>(b));
            }
        }
        g.derive_clusters();
        const auto plan = greedy_mds(g, static_cast<NodeId>(rng.below(static_cast<std::uint64_t>(n))), 8);
        // Every node is a head or adjacent to its head, and the partition is exact.
        std::set<NodeId> seen;
        for (const auto& c : plan.clusters) {
            for (NodeId m : c.members) {
                CHECK(seen.insert(m).second);
                CHECK((m == c.head || g.adjacent(m, c.head)));
            }
        }
        CHECK(seen.size() == static_cast<std::size_t>(n));
        CHECK(plan.gain == static_cast<int>(g.current_clusters.size()) - static_cast<int>(plan.clusters.size()));
        CHECK_FALSE(plan_violation(g, plan, 8).has_value());
    }
}

TEST_CASE("plan_violation") {
    LocalGraph g;
    g.add_node(node(0, 0));
    g.add_node(node(1, 1));
    g.add_node({2, ChannelId{0}, {ChannelId{1}}, 2});
    g.add_edge(0, 1);
    g.add_edge(0, 2);
    g.derive_clusters();
    ReformPlan p;
    p.clusters = {{0, ChannelId{0}, {0, 1, 2}}};
    p.gain = 2;
    CHECK(plan_violation(g, p, 8) == std::string("master channel unavailable to member"));
    p.clusters = {{0, ChannelId{0}, {0, 1}}};
    p.gain = 2;
    CHECK(plan_violation(g, p, 8) == std::string("plan does not cover the local graph"));
    p.clusters = {{1, ChannelId{0}, {1, 0}}, {2, ChannelId{1}, {2}}};
    p.gain = 1;
    CHECK_FALSE(plan_violation(g, p, 8).has_value());
    p.gain = 2;
    CHECK(plan_violation(g, p, 8) == std::string("stated gain does not match"));
}

TEST_CASE("stale view: a plan built without an edge the world lost fails validation") {
    LocalGraph seen;
    for (NodeId i = 0; i < 3; ++i) seen.add_node(node(i, i));
    seen.add_edge(0, 1);
    seen.add_edge(1, 2);
    seen.derive_clusters();
    const auto plan = greedy_mds(seen, 1, 8);
    REQUIRE(plan.clusters.size() == 1);

    LocalGraph truth = seen;
    truth.edges.erase({1, 2});
    CHECK(plan_violation(truth, plan, 8).has_value());
}

TEST_CASE("local graph covers the host cluster and 1-hop neighbor clusters") {
    SUBCASE("isolated cluster") {
        NeighborTable t(1);
        t.on_hello(hello(0, 0, {report(2, 0)}), 1);
        t.on_hello(hello(2, 0, {report(0, 0)}), 1);
        const auto g = build_local_graph({1, 0, ChannelId{0}, {ChannelId{0}}}, t);
        CHECK(g.nodes.size() == 3);
        CHECK(g.current_clusters.size() == 1);
        CHECK(g.adjacent(0, 2));
        CHECK(g.adjacent(1, 0));
    }
    SUBCASE("host of 3 plus a neighbor cluster of 4") {
        NeighborTable t(1);
        t.on_hello(hello(0, 0, {report(2, 0)}), 1);
        t.on_hello(hello(10, 10, {report(11, 10), report(12, 10), report(13, 10)}), 1);
        const auto g = build_local_graph({1, 0, ChannelId{0}, {ChannelId{0}}}, t);
        CHECK(g.nodes.size() == 7);
        CHECK(g.current_clusters.size() == 2);
        for (const auto& [a, b] : g.edges) CHECK(a < b);
    }
    SUBCASE("a 2-hop node of a cluster with no 1-hop neighbor stays out") {
        NeighborTable t(1);
        t.on_hello(hello(0, 0, {report(20, 20)}), 1);
        const auto g = build_local_graph({1, 0, ChannelId{0}, {ChannelId{0}}}, t);
        CHECK_FALSE(g.contains(20));
    }
}

TEST_CASE("negotiation") {
    ReformPlan plan;
    plan.clusters = {{0, ChannelId{0}, {0, 1, 2}}};
    SUBCASE("no gain, no negotiation") {
        plan.gain = 0;
        CHECK_FALSE(Negotiation::start(0, plan, {0, 2}, 2).has_value());
    }
    plan.gain = 1;
    SUBCASE("both heads ack: commits at the next boundary") {
        auto n = *Negotiation::start(0, plan, {2, 0, 2}, 2);
        CHECK(n.affected_heads() == std::vector<NodeId>{0, 2});
        n.on_reply(0, HeadReply::Ack);
        n.on_reply(2, HeadReply::Ack);
        CHECK(n.status() == NegotiationStatus::Pending);
        CHECK(n.on_superframe_boundary() == NegotiationStatus::Committed);
    }
    SUBCASE("a silent head times the plan out") {
        auto n = *Negotiation::start(0, plan, {0, 2}, 2);
        n.on_reply(0, HeadReply::Ack);
        CHECK(n.on_superframe_boundary() == NegotiationStatus::Pending);
        CHECK(n.on_superframe_boundary() == NegotiationStatus::Cancelled);
        CHECK(n.cancel_reason() == "timeout");
        n.on_reply(2, HeadReply::Ack);
        CHECK(n.on_superframe_boundary() == NegotiationStatus::Cancelled);
    }
    SUBCASE("one denial cancels") {
        auto n = *Negotiation::start(0, plan, {0, 2}, 2);
        n.on_reply(2, HeadReply::Deny);
        CHECK(n.status() == NegotiationStatus::Cancelled);
        n.on_reply(0, HeadReply::Ack);
        CHECK(n.on_superframe_boundary() == NegotiationStatus::Cancelled);
    }
    SUBCASE("replies from heads outside the plan are ignored") {
        auto n = *Negotiation::start(0, plan, {0}, 2);
        n.on_reply(9, HeadReply::Deny);
        CHECK(n.status() == NegotiationStatus::Pending);
    }
}

TEST_CASE("a head acknowledges one plan at a time") {
    ReformPlan p;
    p.clusters = {{0, ChannelId{0}, {0, 1, 2}}};
    HeadArbiter arbiter;
    CHECK(arbiter.on_request(1, p, {2}) == HeadReply::Ack);
    CHECK(arbiter.on_request(2, p, {2}) == HeadReply::Deny);
    CHECK(arbiter.on_request(1, p, {2}) == HeadReply::Ack);
    arbiter.release(2);
    CHECK(arbiter.locked_by() == std::uint64_t{1});
    arbiter.release(1);
    CHECK(arbiter.on_request(2, p, {2}) == HeadReply::Ack);
}

TEST_CASE("a plan that strands a member is denied") {
    ReformPlan p;
    p.clusters = {{0, ChannelId{0}, {0, 1}}};
    HeadArbiter arbiter;
    CHECK(arbiter.on_request(1, p, {2, 3}) == HeadReply::Deny);
    CHECK_FALSE(arbiter.locked_by().has_value());
}

}
