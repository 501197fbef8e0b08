#include <numeric>

#include "doctest.h"

#include "cogmesh/engine.hpp"
#include "cogmesh/runner.hpp"

using namespace cogmesh;

namespace {

Topology line_topology(std::vector<double> xs, double range) {
    std::vector<Position> pos;
    for (double x : xs) pos.push_back({x, 0});
    return Topology(pos, range);
}

Transmission beacon_from(NodeId sender, int channel) {
    Beacon b;
    b.head = sender;
    b.master = ChannelId{channel};
    return {sender, ChannelId{channel}, b};
}

ScenarioConfig small_world(std::uint64_t seed) {
    ScenarioConfig c;
    c.seed = seed;
    c.su_count = 12;
    c.channel_count = 3;
    c.area_width = 200;
    c.area_height = 200;
    c.duration_ticks = 800;
    return c;
}

int count_events(const World& w, const std::string& needle) {
    int n = 0;
    for (const auto& e : w.events()) n += e.find(needle) != std::string::npos ? 1 : 0;
    return n;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("delivery") {
    const auto topo = line_topology({0, 50, 100, 300}, 120);
    SUBCASE("one transmitter, one tuned listener in range") {
        const Transmission tx[] = {beacon_from(0, 1)};
        const Listener rx[] = {{1, ChannelId{1}}};
        const auto r = deliver_messages(tx, rx, topo);
        REQUIRE(r.delivered.size() == 1);
        CHECK(r.delivered[0].receiver == 1);
        CHECK(r.dropped.empty());
    }
    SUBCASE("two same-channel transmitters collide at a common listener") {
        const Transmission tx[] = {beacon_from(0, 1), beacon_from(2, 1)};
        const Listener rx[] = {{1, ChannelId{1}}};
        const auto r = deliver_messages(tx, rx, topo);
        CHECK(r.delivered.empty());
        CHECK(r.dropped.size() == 2);
    }
    SUBCASE("different channels do not interfere") {
        const Transmission tx[] = {beacon_from(0, 1), beacon_from(2, 2)};
        const Listener rx[] = {{1, ChannelId{2}}};
        const auto r = deliver_messages(tx, rx, topo);
        REQUIRE(r.delivered.size() == 1);
        CHECK(r.delivered[0].transmission == 1);
    }
    SUBCASE("listener on another channel hears nothing") {
        const Transmission tx[] = {beacon_from(0, 1)};
        const Listener rx[] = {{1, ChannelId{0}}};
        CHECK(deliver_messages(tx, rx, topo).delivered.empty());
    }
    SUBCASE("out of range") {
        const Transmission tx[] = {beacon_from(0, 1)};
        const Listener rx[] = {{3, ChannelId{1}}};
        CHECK(deliver_messages(tx, rx, topo).delivered.empty());
    }
    SUBCASE("hidden terminals collide at the node between them") {
        const auto chain = line_topology({0, 100, 200, 300}, 120);
        const Transmission tx[] = {beacon_from(0, 1), beacon_from(2, 1)};
        const Listener rx[] = {{1, ChannelId{1}}, {3, ChannelId{1}}};
        const auto r = deliver_messages(tx, rx, chain);
        REQUIRE(r.delivered.size() == 1);
        CHECK(r.delivered[0].receiver == 3);
        CHECK(r.delivered[0].transmission == 1);
    }
}

TEST_CASE("topology") {
    const auto topo = line_topology({0, 100, 200, 500}, 120);
    CHECK(topo.in_range(0, 1));
    CHECK_FALSE(topo.in_range(0, 2));
    CHECK(topo.neighbors(1) == std::vector<NodeId>{0, 2});
    CHECK_FALSE(topo.connected());
    CHECK(line_topology({0, 100, 200}, 120).connected());
}

TEST_CASE("empty world") {
    ScenarioConfig c;
    c.su_count = 0;
    c.duration_ticks = 200;
    const auto r = run(c);
    REQUIRE(r.samples.size() == 8);
    for (const auto& s : r.samples) {
        CHECK(std::accumulate(s.counts.begin(), s.counts.end(), 0) == 0);
        CHECK(s.stddev == 0.0);
        CHECK(s.largest_cloud == 0);
        CHECK(s.cluster_count == 0);
    }
}

TEST_CASE("a lone node forms its own cluster within one scan interval") {
    ScenarioConfig c;
    c.su_count = 1;
    c.channel_count = 1;
    c.duration_ticks = 400;
    World w(c);
    const Tick interval = c.effective_scan_interval();
    while (w.now() < c.duration_ticks) {
        w.step();
        if (w.now() >= w.start_tick(0) + interval + 1) {
            REQUIRE(w.role(0) == NodeRole::Head);
            CHECK(w.metrics_snapshot().largest_cloud == 1);
        }
    }
    REQUIRE(w.first_associated(0));
    CHECK(*w.first_associated(0) - w.start_tick(0) <= interval + 1);
    for (const auto& s : w.samples()) {
        if (s.tick > w.start_tick(0) + interval + 1) CHECK(s.largest_cloud == 1);
    }
}

TEST_CASE("same seed, same run") {
    auto c = small_world(5);
    c.pu_count = 2;
    const auto a = run(c);
    const auto b = run(c);
    CHECK(a.samples == b.samples);
    CHECK(a.events == b.events);
    c.seed = 6;
    CHECK(run(c).events != a.events);
}

TEST_CASE("counts cover exactly the nodes holding a master") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto c = small_world(seed);
        c.pu_count = 3;
        c.pu_protection_radius = 150;
        World w(c);
        while (w.now() < c.duration_ticks) {
            w.step();
            const auto s = w.metrics_snapshot();
            int held = 0;
            for (NodeId id = 0; id < w.node_count(); ++id) held += w.master(id) ? 1 : 0;
            REQUIRE(std::accumulate(s.counts.begin(), s.counts.end(), 0) == held);
            REQUIRE(static_cast<int>(s.counts.size()) == c.channel_count);
        }
    }
}

TEST_CASE("structural invariants hold at every tick") {
    std::vector<ScenarioConfig> configs;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto c = small_world(seed);
        c.su_count = 30;
        c.pu_count = 3;
        c.reform_cadence = 2;
        configs.push_back(c);
        c.pu_model = PuModel::Markov;
        configs.push_back(c);
    }
    for (const auto& c : configs) {
        World w(c);
        while (w.now() < c.duration_ticks) {
            w.step();
            const auto v = w.check_invariants();
            INFO("seed " << c.seed << " tick " << w.now());
            REQUIRE(v.empty());
        }
    }
}

TEST_CASE("a PU landing on the master channel drives every node off it") {
    // One PU covering the whole area starts on channel 0 and hops to channel 1 at tick 400.
    ScenarioConfig c;
    c.seed = 2;
    c.su_count = 10;
    c.channel_count = 2;
    c.area_width = 100;
    c.area_height = 100;
    c.pu_count = 1;
    c.pu_period = 400;
    c.pu_protection_radius = 1000;
    c.duration_ticks = 800;
    World w(c);
    w.run_until(399);
    for (NodeId id = 0; id < w.node_count(); ++id) REQUIRE(w.master(id) == ChannelId{1});
    const Tick window_plus_ttl = c.sense_window + c.neighbor_ttl * c.superframe.max_superframe;
    w.run_until(400 + window_plus_ttl);
    for (NodeId id = 0; id < w.node_count(); ++id) CHECK(w.master(id) != ChannelId{1});
    for (const auto& [h, cs] : w.clusters()) CHECK(cs.record.master == ChannelId{0});
}

TEST_CASE("after the head's master is lost its former members form a new cluster within 3 scan intervals") {
    ScenarioConfig c;
    c.seed = 4;
    c.su_count = 8;
    c.channel_count = 2;
    c.area_width = 80;
    c.area_height = 80;
    c.pu_count = 1;
    c.pu_period = 400;
    c.pu_protection_radius = 1000;
    c.duration_ticks = 800;
    World w(c);
    w.run_until(400);
    std::map<NodeId, std::vector<NodeId>> before;
    for (const auto& [h, cs] : w.clusters()) before[h] = w.confirmed_members(h);
    REQUIRE_FALSE(before.empty());
    const Tick deadline = 400 + c.superframe.max_superframe + 3 * c.effective_scan_interval();
    w.run_until(deadline);
    for (const auto& [old_head, members] : before) {
        const bool still_on_lost = w.clusters().contains(old_head) && w.clusters().at(old_head).record.master == ChannelId{1};
        CHECK_FALSE(still_on_lost);
        bool regrouped = false;
        for (const auto& [h, cs] : w.clusters()) {
            for (NodeId m : members) regrouped = regrouped || cs.record.members.contains(m);
        }
        CHECK(regrouped);
    }
}

TEST_CASE("two adjacent singleton clusters merge within two reformation cadences") {
    ScenarioConfig c;
    c.seed = 3;
    c.su_count = 2;
    c.channel_count = 1;
    c.area_width = 50;
    c.area_height = 50;
    c.start_spread = 0;
    c.duration_ticks = 1000;
    World w(c);
    while (w.clusters().size() < 2) {
        w.step();
        REQUIRE(w.now() < 100);
    }
    const Tick formed = w.now();
    const Tick deadline = formed + 2 * c.reform_cadence * c.superframe.max_superframe;
    while (w.clusters().size() == 2 && w.now() < deadline) w.step();
    CHECK(w.clusters().size() == 1);
    CHECK(count_events(w, " reform_commit ") == 1);
    CHECK(w.confirmed_members(w.clusters().begin()->first).size() == 2);
}

TEST_CASE("a silent head blocks every plan and nothing changes") {
    ScenarioConfig c;
    c.seed = 3;
    c.su_count = 2;
    c.channel_count = 1;
    c.area_width = 50;
    c.area_height = 50;
    c.start_spread = 0;
    c.duration_ticks = 1000;
    World w(c);
    while (w.clusters().size() < 2) w.step();
    w.silence_head(1);
    std::map<NodeId, std::vector<NodeId>> before;
    for (const auto& [h, cs] : w.clusters()) before[h] = w.confirmed_members(h);
    w.run_until(c.duration_ticks);
    CHECK(count_events(w, " reform_commit ") == 0);
    CHECK(count_events(w, "reason=timeout") > 0);
    std::map<NodeId, std::vector<NodeId>> after;
    for (const auto& [h, cs] : w.clusters()) after[h] = w.confirmed_members(h);
    CHECK(after == before);
}

TEST_CASE("committed plans never raise the local cluster count") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto c = small_world(seed);
        c.su_count = 40;
        c.channel_count = 2;
        c.reform_cadence = 1;
        c.duration_ticks = 1500;
        World w(c);
        w.run_until(c.duration_ticks);
        for (const auto& e : w.events()) {
            if (e.find(" reform_commit ") == std::string::npos) continue;
            const int before = std::stoi(e.substr(e.find(" before=") + 8));
            const int after = std::stoi(e.substr(e.find(" after=") + 7));
            CHECK(after <= before);
        }
    }
}

TEST_CASE("roles") {
    auto c = small_world(9);
    c.channel_count = 1;
    World w(c);
    w.run_until(600);
    for (NodeId id = 0; id < w.node_count(); ++id) {
        const auto role = w.role(id);
        if (role == NodeRole::Head) CHECK(w.clusters().contains(id));
        if (role == NodeRole::Gateway || role == NodeRole::Ordinary) CHECK(w.cluster_of(id).has_value());
    }
    for (const auto& [key, link] : w.gateway_links()) {
        CHECK(w.role(link.first) == NodeRole::Gateway);
        CHECK(key.first < key.second);
    }
}

}
