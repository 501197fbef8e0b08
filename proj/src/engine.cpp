#include "cogmesh/engine.hpp"

#include <algorithm>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace cogmesh {

// ---------------------------------------------------------------------------
// Physical layer

Topology::Topology(std::vector<Position> positions, double comm_range)
    : positions_(std::move(positions)), range_(comm_range), neighbors_(positions_.size()) {
    for (NodeId a = 0; a < positions_.size(); ++a) {
        for (NodeId b = a + 1; b < positions_.size(); ++b) {
            if (distance(positions_[a], positions_[b]) <= range_) {
                neighbors_[a].push_back(b);
                neighbors_[b].push_back(a);
            }
        }
    }
}

bool Topology::in_range(NodeId a, NodeId b) const {
    return a != b && distance(positions_[a], positions_[b]) <= range_;
}

bool Topology::connected() const {
    if (positions_.empty()) return true;
    std::vector<bool> seen(positions_.size(), false);
    std::queue<NodeId> q;
    q.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!q.empty()) {
        const NodeId a = q.front();
        q.pop();
        for (NodeId b : neighbors_[a]) {
            if (!seen[b]) {
                seen[b] = true;
                ++count;
                q.push(b);
            }
        }
    }
    return count == positions_.size();
}

DeliveryResult deliver_messages(std::span<const Transmission> transmissions, std::span<const Listener> listeners,
                                const Topology& topology) {
    DeliveryResult out;
    std::vector<std::size_t> heard;
    for (const auto& l : listeners) {
        heard.clear();
        for (std::size_t i = 0; i < transmissions.size(); ++i) {
            const auto& t = transmissions[i];
            if (t.channel == l.channel && t.sender != l.node && topology.in_range(t.sender, l.node)) heard.push_back(i);
        }
        if (heard.size() == 1) {
            out.delivered.push_back({l.node, heard.front()});
        } else {
            for (std::size_t i : heard) out.dropped.push_back({l.node, i});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// World setup

World::World(const ScenarioConfig& config)
    : config_(config), world_rng_(mix64(config.seed)), env_rng_(mix64(config.seed ^ 0x5EEDF00DULL)) {
    validate(config_);
    scan_interval_ = config_.effective_scan_interval();
    member_timeout_ = static_cast<Tick>(config_.neighbor_ttl) * config_.superframe.max_superframe;
    place_nodes();
    place_pus();
    for (auto& n : nodes_) {
        sense(n);
        refresh_selection(n);
    }
}

void World::place_nodes() {
    std::vector<Position> positions;
    nodes_.resize(static_cast<std::size_t>(config_.su_count));
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        positions.push_back({world_rng_.uniform(0.0, config_.area_width), world_rng_.uniform(0.0, config_.area_height)});
    }
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        auto& n = nodes_[id];
        n.id = id;
        n.start = config_.start_spread > 0 ? world_rng_.between(0, config_.start_spread - 1) : 0;
        n.rng.reseed(mix64(config_.seed * 0x100000001B3ULL + id + 1));
        n.table = NeighborTable(id);
    }
    topology_ = Topology(std::move(positions), config_.comm_range);
}

void World::place_pus() {
    env_.channel_count = config_.channel_count;
    env_.pathloss_exponent = config_.pathloss_exponent;
    env_.q_max = config_.q_max;
    env_.quant_stages = config_.quant_stages;
    env_.background_level = config_.background_interference;
    env_.background_seed = config_.seed;
    env_.history_limit = static_cast<std::size_t>(config_.sense_window);
    for (int i = 0; i < config_.pu_count; ++i) {
        PrimaryUser pu;
        pu.id = i;
        pu.position = {world_rng_.uniform(0.0, config_.area_width), world_rng_.uniform(0.0, config_.area_height)};
        pu.channel = ChannelId{i % config_.channel_count};
        pu.protection_radius = config_.pu_protection_radius;
        pu.interference_power = config_.pu_power;
        if (config_.pu_model == PuModel::Periodic) {
            pu.model = PeriodicActivity{config_.pu_period, config_.pu_duty, config_.pu_hop};
        } else {
            pu.model = MarkovActivity{config_.pu_p_on, config_.pu_p_off};
            const double total = config_.pu_p_on + config_.pu_p_off;
            pu.active = world_rng_.bernoulli(total > 0.0 ? config_.pu_p_on / total : 0.0);
        }
        env_.pus.push_back(pu);
    }
    validate(env_);
    env_ = prime_environment(std::move(env_));
}

// ---------------------------------------------------------------------------
// Node helpers

void World::log(const std::string& line) { events_.push_back(std::to_string(now_) + " " + line); }

void World::sense(Node& n) {
    n.obs = cogmesh::sense(env_, topology_.position(n.id), config_.sense_window);
    n.sensed_at = now_;
    if (auto w = refresh_from_sensing(n.weights, n.obs, config_.alpha)) {
        n.weights = std::move(*w);
    } else {
        n.weights.entries.clear();
    }
}

std::optional<ChannelId> World::selected_master(const Node& n) const {
    return config_.swarm_enabled ? select_master(n.weights) : select_best_quality(n.obs);
}

void World::refresh_selection(Node& n) {
    if (n.phase == Phase::Member || n.phase == Phase::Joining) return;
    n.master = selected_master(n);
}

void World::mark_associated(Node& n) {
    if (!n.associated_at) n.associated_at = now_;
    if (!n.left_scan_at) n.left_scan_at = now_;
}

void World::activate(Node& n) {
    sense(n);
    refresh_selection(n);
    begin_scan(n, std::nullopt);
}

void World::begin_scan(Node& n, std::optional<ChannelId> start_at) {
    if (n.sensed_at != now_) sense(n);
    n.head = 0;
    n.slot = -1;
    n.probe.reset();
    n.exchange_tick.reset();
    auto s = start_scan(n.obs, scan_interval_, start_at);
    if (!s) {
        if (n.phase != Phase::Idle) log("idle node=" + std::to_string(n.id));
        n.phase = Phase::Idle;
        n.master.reset();
        return;
    }
    n.scan = std::move(*s);
    n.phase = Phase::Scanning;
    refresh_selection(n);
}

void World::apply_scan_outcome(Node& n, const ScanOutcome& outcome) {
    if (const auto* f = std::get_if<FormCluster>(&outcome)) {
        if (std::binary_search(n.scan.available.begin(), n.scan.available.end(), f->channel)) {
            form_cluster(n, f->channel);
        } else {
            begin_scan(n, std::nullopt);
        }
    } else if (const auto* j = std::get_if<RequestJoin>(&outcome)) {
        n.phase = Phase::Joining;
        if (!n.left_scan_at) n.left_scan_at = now_;
        n.join = JoinState{j->head, j->channel, 0, std::nullopt, now_};
        n.master = j->channel;
        n.exchange_tick.reset();
    } else {
        const auto& c = std::get<ContinueScan>(outcome);
        advance_scan(n.scan, c.channel, scan_interval_);
        n.exchange_tick.reset();
    }
}

void World::form_cluster(Node& n, ChannelId channel) {
    ClusterState c;
    c.record.head = n.id;
    c.record.master = channel;
    c.record.members[n.id] = 0;
    c.record.max_slots = config_.superframe.max_slots;
    c.record.frame_offset = n.rng.between(0, config_.superframe.max_superframe - 1);
    c.formed_at = now_;
    c.next_superframe = now_ + 1 + c.record.frame_offset;
    c.last_heard[n.id] = now_;
    clusters_.insert_or_assign(n.id, std::move(c));

    n.phase = Phase::Member;
    n.head = n.id;
    n.slot = 0;
    n.master = channel;
    n.last_beacon = now_;
    n.superframes = 0;
    n.probe.reset();
    mark_associated(n);
    std::ostringstream os;
    os << "form node=" << n.id << " ch=" << channel.index;
    log(os.str());
}

void World::become_member(Node& n, NodeId head, int slot) {
    auto& c = clusters_.at(head);
    n.phase = Phase::Member;
    n.head = head;
    n.slot = slot;
    n.master = c.record.master;
    n.last_beacon = now_;
    n.superframes = 0;
    n.probe.reset();
    n.exchange_tick.reset();
    c.last_heard[n.id] = now_;
    ++c.version;
    mark_associated(n);
    std::ostringstream os;
    os << "join node=" << n.id << " head=" << head << " ch=" << c.record.master.index << " slot=" << slot;
    log(os.str());
}

void World::leave_cluster(Node& n, std::optional<ChannelId> rescan_at, const char* reason) {
    if (n.plan) {
        auto it = plans_.find(*n.plan);
        if (it != plans_.end()) {
            it->second.negotiation.cancel("working node left");
            resolve_plan(n, NegotiationStatus::Cancelled);
        }
    }
    std::ostringstream os;
    os << "leave node=" << n.id << " head=" << n.head << " reason=" << reason;
    log(os.str());
    begin_scan(n, rescan_at);
}

void World::dissolve_cluster(Node& head, std::optional<ChannelId> rescan_at, const char* reason) {
    const NodeId h = head.id;
    if (head.plan) {
        auto it = plans_.find(*head.plan);
        if (it != plans_.end()) {
            it->second.negotiation.cancel("working node left");
            resolve_plan(head, NegotiationStatus::Cancelled);
        }
    }
    std::erase_if(links_, [h](const auto& kv) { return kv.first.first == h || kv.first.second == h; });
    std::erase_if(link_owner_, [h](const auto& kv) { return kv.first.first == h || kv.first.second == h; });
    clusters_.erase(h);
    std::ostringstream os;
    os << "dissolve head=" << h << " reason=" << reason;
    log(os.str());
    begin_scan(head, rescan_at);
}

void World::give_up_join(Node& n) {
    n.phase = Phase::Scanning;
    n.scan.heard_beacon.reset();
    n.exchange_tick.reset();
    for (ChannelId ch : n.scan.available) {
        if (!n.scan.visited.contains(ch)) {
            advance_scan(n.scan, ch, scan_interval_);
            refresh_selection(n);
            return;
        }
    }
    refresh_selection(n);
    const auto sel = selected_master(n);
    const auto& avail = n.scan.available;
    if (sel && std::binary_search(avail.begin(), avail.end(), *sel)) {
        form_cluster(n, *sel);
    } else if (!avail.empty()) {
        form_cluster(n, avail[n.rng.below(avail.size())]);
    } else {
        begin_scan(n, std::nullopt);
    }
}

HelloMessage World::make_hello(const Node& n) const {
    HelloInputs in;
    in.id = n.id;
    in.master = n.master.value_or(ChannelId{});
    in.obs = n.obs;
    in.table = &n.table;
    if (n.phase == Phase::Member) {
        in.head = n.head;
        auto it = clusters_.find(n.head);
        if (it != clusters_.end() && it->second.superframe_start) {
            const auto& c = it->second;
            if (const Period* p = c.schedule.find(PeriodKind::PublicRA)) {
                in.frame_map = FrameMap{*c.superframe_start + p->start, p->length};
            }
        }
    }
    return emit_hello(in);
}

bool World::is_confirmed(const Node& n) const {
    if (n.phase != Phase::Member) return false;
    auto it = clusters_.find(n.head);
    return it != clusters_.end() && it->second.record.members.contains(n.id);
}

// ---------------------------------------------------------------------------
// Superframes

void World::start_superframes() {
    superframe_started_now_.clear();
    for (auto& [h, c] : clusters_) {
        if (c.next_superframe == now_) {
            head_superframe_start(c);
            superframe_started_now_.insert(h);
        }
    }
    for (auto& n : nodes_) {
        if (n.phase == Phase::Member && superframe_started_now_.contains(n.head) && clusters_.contains(n.head)) {
            member_superframe_start(n);
        }
    }
    std::vector<NodeId> public_ra_now;
    for (const auto& [h, c] : clusters_) {
        if (!c.superframe_start) continue;
        const Period* p = c.schedule.find(PeriodKind::PublicRA);
        if (p && *c.superframe_start + p->start == now_) public_ra_now.push_back(h);
    }
    for (NodeId h : public_ra_now) {
        auto it = clusters_.find(h);
        if (it != clusters_.end()) process_public_ra(it->second);
    }
}

void World::head_superframe_start(ClusterState& c) {
    const NodeId h = c.record.head;
    for (auto it = c.record.members.begin(); it != c.record.members.end();) {
        const NodeId m = it->first;
        const auto heard = c.last_heard.find(m);
        const Tick last = heard == c.last_heard.end() ? c.formed_at : heard->second;
        if (m != h && now_ - last > member_timeout_) {
            std::ostringstream os;
            os << "evict head=" << h << " node=" << m;
            log(os.str());
            c.last_heard.erase(m);
            it = c.record.members.erase(it);
            ++c.version;
        } else {
            ++it;
        }
    }
    c.schedule = build_superframe(c.record.max_slots, config_.superframe, nodes_[h].rng);
    c.superframe_start = now_;
    c.next_superframe = now_ + c.schedule.length();
    c.accepted_join_this_ra = false;
    select_gateways_for(c);
}

void World::member_superframe_start(Node& n) {
    n.table.evict_older_than(now_ - member_timeout_);
    n.probe.reset();

    const auto sel = selected_master(n);
    if (!sel) {
        if (n.head == n.id) dissolve_cluster(n, std::nullopt, "no_channels");
        else leave_cluster(n, std::nullopt, "no_channels");
        return;
    }
    if (n.master && *sel != *n.master) {
        const NodeRole r = role(n.id);
        const auto action = handle_master_change(r == NodeRole::Scanning ? NodeRole::Ordinary : r, *n.master, *sel);
        std::ostringstream os;
        os << "master_change node=" << n.id << " from=" << n.master->index << " to=" << sel->index
           << " role=" << to_string(r);
        log(os.str());
        if (action == MasterChangeAction::DissolveAndRescan) {
            dissolve_cluster(n, sel, "master_change");
            return;
        }
        if (action == MasterChangeAction::LeaveAndRescan) {
            leave_cluster(n, sel, "master_change");
            return;
        }
    }

    if (n.plan) {
        auto it = plans_.find(*n.plan);
        if (it == plans_.end()) {
            n.plan.reset();
        } else {
            const auto status = it->second.negotiation.on_superframe_boundary();
            if (status != NegotiationStatus::Pending) resolve_plan(n, status);
        }
    }
    if (n.phase != Phase::Member) return;

    ++n.superframes;
    if (config_.reform_cadence > 0 && n.superframes % config_.reform_cadence == 0 && !n.plan) reform_tick(n);

    if (n.phase == Phase::Member && n.master && n.rng.bernoulli(config_.offmaster_prob)) {
        n.probe = select_offmaster_scan(*n.master, n.obs, n.pending_probe, n.rng);
    }
}

void World::select_gateways_for(ClusterState& c) {
    const NodeId h = c.record.head;
    const Node& hn = nodes_[h];

    // Drop links to clusters that no longer exist.
    for (auto it = links_.begin(); it != links_.end();) {
        const auto [a, b] = it->first;
        if ((a == h || b == h) && (!clusters_.contains(a) || !clusters_.contains(b))) {
            link_owner_.erase(it->first);
            it = links_.erase(it);
        } else {
            ++it;
        }
    }

    std::map<NodeId, ClusterRecord> views;
    auto note = [&](const NeighborEntry& e) {
        if (!e.head || *e.head == h || !clusters_.contains(*e.head)) return;
        auto& v = views[*e.head];
        v.head = *e.head;
        v.master = e.master;
        v.members[e.id] = 0;
        v.members[*e.head] = 0;
    };
    for (const auto& e : hn.table.one_hop()) note(e);
    for (const auto& e : hn.table.two_hop()) note(e);

    ClusterRecord own = c.record;
    for (auto it = own.members.begin(); it != own.members.end();) {
        it = is_confirmed(nodes_[it->first]) ? std::next(it) : own.members.erase(it);
    }

    const NeighborTable& table = hn.table;
    auto lists = [&](NodeId x, NodeId y) {
        for (const auto& r : table.reported_by(x)) {
            if (r.id == y) return true;
        }
        return false;
    };
    const AdjacencyFn adjacent = [&](NodeId x, NodeId y) {
        if (x == y) return false;
        if (x == h) return table.is_one_hop(y);
        if (y == h) return table.is_one_hop(x);
        return lists(x, y) || lists(y, x);
    };

    std::vector<NodeId> bystanders;
    for (const auto& e : table.one_hop()) bystanders.push_back(e.id);

    for (const auto& [k, view] : views) {
        const auto link = select_gateways(own, view, adjacent, bystanders);
        if (!link) continue;
        const auto key = std::minmax(h, k);
        auto existing = links_.find(key);
        const bool may_write = existing == links_.end() || link_owner_[key] == h || h < k;
        if (!may_write || (existing != links_.end() && existing->second == *link)) continue;
        links_[key] = *link;
        link_owner_[key] = h;
        std::ostringstream os;
        os << "gateway heads=" << key.first << "," << key.second << " via=" << link->first;
        if (link->second) os << "," << *link->second;
        log(os.str());
    }

    // Mirror the links into the records of every cluster involved.
    for (auto& [hh, cs] : clusters_) {
        if (hh != h && !views.contains(hh)) continue;
        cs.record.neighbor_clusters.clear();
        for (const auto& [key, link] : links_) {
            if (key.first != hh && key.second != hh) continue;
            const NodeId other = key.first == hh ? key.second : key.first;
            auto oc = clusters_.find(other);
            if (oc == clusters_.end()) continue;
            cs.record.neighbor_clusters.push_back({other, oc->second.record.master, link});
        }
    }
}

void World::process_public_ra(ClusterState& c) {
    const NodeId h = c.record.head;
    auto requests = std::move(c.inbox_requests);
    c.inbox_requests.clear();
    auto replies = std::move(c.inbox_replies);
    c.inbox_replies.clear();

    for (std::uint64_t id : requests) {
        auto it = plans_.find(id);
        if (it == plans_.end() || it->second.negotiation.status() != NegotiationStatus::Pending) continue;
        if (silent_heads_.contains(h)) continue;
        auto& plan = it->second;
        const HeadReply reply = c.arbiter.on_request(id, plan.negotiation.plan(), confirmed_members(h));
        if (reply == HeadReply::Ack) plan.acked_versions[h] = c.version;
        const Node& w = nodes_[plan.negotiation.working()];
        if (w.phase != Phase::Member) continue;
        auto wc = clusters_.find(w.head);
        if (wc == clusters_.end()) continue;
        wc->second.inbox_replies.push_back({id, {h, reply}});
    }

    for (const auto& [id, r] : replies) {
        auto it = plans_.find(id);
        if (it == plans_.end()) continue;
        auto& neg = it->second.negotiation;
        neg.on_reply(r.first, r.second);
        if (neg.status() == NegotiationStatus::Cancelled) resolve_plan(nodes_[neg.working()], neg.status());
    }
}

void World::on_master_check(Node& n) {
    if (!n.master) return;
    bool ok = false;
    for (const auto& o : n.obs) {
        if (o.channel == *n.master) ok = o.available;
    }
    if (ok) return;
    const auto sel = selected_master(n);
    const bool is_head = n.head == n.id;
    std::ostringstream os;
    os << "master_change node=" << n.id << " from=" << n.master->index
       << " to=" << (sel ? std::to_string(sel->index) : std::string("none")) << " role=" << to_string(role(n.id))
       << " reason=unavailable";
    log(os.str());
    if (is_head) dissolve_cluster(n, sel, "master_unavailable");
    else leave_cluster(n, sel, "master_unavailable");
}

// ---------------------------------------------------------------------------
// Reformation

void World::reform_tick(Node& n) {
    if (!n.master) return;
    const WorkingNode self{n.id, n.head, *n.master, available_channels(n.obs)};
    const LocalGraph graph = build_local_graph(self, n.table);
    ReformPlan plan = greedy_mds(graph, n.id, config_.superframe.max_slots);
    if (plan_violation(graph, plan, config_.superframe.max_slots)) return;
    std::vector<NodeId> heads;
    for (const auto& cc : graph.current_clusters) heads.push_back(cc.head);
    auto neg = Negotiation::start(n.id, std::move(plan), heads, config_.negotiation_timeout);
    if (!neg) return;

    const std::uint64_t id = next_plan_id_++;
    std::ostringstream os;
    os << "reform_propose node=" << n.id << " plan=" << id << " gain=" << neg->plan().gain
       << " clusters=" << graph.current_clusters.size() << " heads=";
    for (std::size_t i = 0; i < neg->affected_heads().size(); ++i) os << (i ? "," : "") << neg->affected_heads()[i];
    log(os.str());
    for (NodeId h : neg->affected_heads()) {
        auto it = clusters_.find(h);
        if (it != clusters_.end()) it->second.inbox_requests.push_back(id);
    }
    plans_.emplace(id, ActivePlan{id, std::move(*neg), {}});
    n.plan = id;
}

void World::release_plan(std::uint64_t plan_id) {
    auto it = plans_.find(plan_id);
    if (it == plans_.end()) return;
    for (NodeId h : it->second.negotiation.affected_heads()) {
        auto c = clusters_.find(h);
        if (c != clusters_.end()) c->second.arbiter.release(plan_id);
    }
}

void World::resolve_plan(Node& n, NegotiationStatus status) {
    if (!n.plan) return;
    const std::uint64_t id = *n.plan;
    auto it = plans_.find(id);
    n.plan.reset();
    if (it == plans_.end()) return;
    auto& p = it->second;
    std::ostringstream os;
    if (status == NegotiationStatus::Committed) {
        std::string why;
        const auto before = static_cast<int>(p.negotiation.affected_heads().size());
        if (commit_plan(p, why)) {
            const auto after = static_cast<int>(p.negotiation.plan().clusters.size());
            os << "reform_commit node=" << p.negotiation.working() << " plan=" << id
               << " gain=" << p.negotiation.plan().gain << " before=" << before << " after=" << after;
        } else {
            os << "reform_cancel node=" << p.negotiation.working() << " plan=" << id << " reason=" << why;
        }
    } else {
        os << "reform_cancel node=" << p.negotiation.working() << " plan=" << id
           << " reason=" << p.negotiation.cancel_reason();
    }
    log(os.str());
    release_plan(id);
    plans_.erase(id);
}

bool World::commit_plan(ActivePlan& p, std::string& why) {
    const ReformPlan& plan = p.negotiation.plan();
    const Node& w = nodes_[p.negotiation.working()];
    if (w.phase != Phase::Member) {
        why = "working_node_left";
        return false;
    }
    for (NodeId h : p.negotiation.affected_heads()) {
        auto it = clusters_.find(h);
        if (it == clusters_.end()) {
            why = "head_gone";
            return false;
        }
        auto v = p.acked_versions.find(h);
        if (v == p.acked_versions.end() || v->second != it->second.version) {
            why = "cluster_changed";
            return false;
        }
    }

    // Validate against the actual world rather than the working node's tables.
    LocalGraph truth;
    for (NodeId h : p.negotiation.affected_heads()) {
        for (NodeId m : confirmed_members(h)) {
            const Node& mn = nodes_[m];
            if (!mn.master) {
                why = "member_without_master";
                return false;
            }
            truth.add_node({m, *mn.master, available_channels(mn.obs), h});
        }
    }
    for (const auto& a : truth.nodes) {
        for (const auto& b : truth.nodes) {
            if (a.id < b.id && topology_.in_range(a.id, b.id)) truth.add_edge(a.id, b.id);
        }
    }
    truth.derive_clusters();
    if (auto v = plan_violation(truth, plan, config_.superframe.max_slots)) {
        why = "stale_plan";
        return false;
    }
    for (const auto& pc : plan.clusters) {
        for (NodeId m : pc.members) {
            if (nodes_[m].master != pc.master) {
                why = "master_changed";
                return false;
            }
        }
    }

    std::set<NodeId> plan_heads;
    for (const auto& pc : plan.clusters) plan_heads.insert(pc.head);
    std::set<NodeId> touched(p.negotiation.affected_heads().begin(), p.negotiation.affected_heads().end());
    touched.insert(plan_heads.begin(), plan_heads.end());
    std::erase_if(links_, [&](const auto& kv) {
        return touched.contains(kv.first.first) || touched.contains(kv.first.second);
    });
    std::erase_if(link_owner_, [&](const auto& kv) {
        return touched.contains(kv.first.first) || touched.contains(kv.first.second);
    });
    for (NodeId h : p.negotiation.affected_heads()) {
        if (!plan_heads.contains(h)) clusters_.erase(h);
    }

    for (const auto& pc : plan.clusters) {
        auto it = clusters_.find(pc.head);
        if (it == clusters_.end()) {
            ClusterState c;
            c.record.head = pc.head;
            c.record.master = pc.master;
            c.record.max_slots = config_.superframe.max_slots;
            c.record.frame_offset = nodes_[pc.head].rng.between(0, config_.superframe.max_superframe - 1);
            c.formed_at = now_;
            c.next_superframe = now_ + 1 + c.record.frame_offset;
            it = clusters_.emplace(pc.head, std::move(c)).first;
        }
        auto& cs = it->second;
        cs.record.members.clear();
        cs.last_heard.clear();
        cs.record.neighbor_clusters.clear();
        ++cs.version;
        int slot = 0;
        for (NodeId m : pc.members) {
            cs.record.members[m] = slot;
            cs.last_heard[m] = now_;
            Node& mn = nodes_[m];
            mn.phase = Phase::Member;
            mn.head = pc.head;
            mn.slot = slot;
            mn.master = pc.master;
            mn.last_beacon = now_;
            ++slot;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Message handling

void World::handle(Node& n, const Transmission& tx) {
    std::visit(
        [&](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, Beacon>) {
                handle_beacon(n, msg);
            } else if constexpr (std::is_same_v<T, HelloMessage>) {
                handle_hello(n, msg);
            } else {
                handle_join(n, msg);
            }
        },
        tx.message);
}

void World::schedule_join_request(Node& n, Tick from, Tick until) {
    n.join.request_tick = from + static_cast<Tick>(n.rng.below(static_cast<std::uint64_t>(until - from)));
}

void World::handle_beacon(Node& n, const Beacon& b) {
    n.table.on_beacon(b, now_);
    if (n.phase == Phase::Scanning) {
        const HeardBeacon hb{b.head, b.master, b.max_slots - static_cast<int>(b.slots.size())};
        n.scan.heard_beacon = hb;
        n.scan.detected_clusters.insert(b.head);
        if (beacon_joinable(n.scan, hb, selected_master(n)) && b.public_ra.public_ra_length > 0) {
            apply_scan_outcome(n, RequestJoin{b.head, n.scan.current});
            schedule_join_request(n, b.public_ra.public_ra_start, b.public_ra.public_ra_start + b.public_ra.public_ra_length);
        }
    } else if (n.phase == Phase::Joining) {
        if (b.head == n.join.head) {
            n.join.last_beacon = now_;
            if (!n.join.request_tick && b.public_ra.public_ra_length > 0) {
                schedule_join_request(n, b.public_ra.public_ra_start,
                                      b.public_ra.public_ra_start + b.public_ra.public_ra_length);
            }
        }
    } else if (n.phase == Phase::Member && b.head == n.head && n.head != n.id) {
        n.last_beacon = now_;
        const bool listed = std::any_of(b.slots.begin(), b.slots.end(),
                                        [&](const SlotAssignment& s) { return s.member == n.id; });
        if (!listed) leave_cluster(n, n.master, "evicted");
    }
}

void World::handle_hello(Node& n, const HelloMessage& h) {
    const auto fresh = process_hello(n.table, h, now_);
    if (config_.swarm_enabled && !n.weights.empty()) {
        const bool committed = n.phase == Phase::Member || n.phase == Phase::Joining;
        n.weights = apply_hello(std::move(n.weights), h, n.obs, config_.reward,
                                committed ? n.master : std::nullopt);
        refresh_selection(n);
    }

    if (n.phase == Phase::Member) {
        if (n.head == n.id && h.head && *h.head == n.id) {
            auto it = clusters_.find(n.id);
            if (it != clusters_.end() && it->second.record.members.contains(h.sender)) {
                it->second.last_heard[h.sender] = now_;
            }
        }
        for (NodeId id : fresh) {
            for (const auto& r : h.neighbor_list) {
                if (r.id == id && n.master && r.master != *n.master) n.pending_probe.insert(r.master);
            }
        }
    } else if (n.phase == Phase::Scanning) {
        n.scan.heard_hellos.push_back(h);
        if (!n.exchange_tick && h.frame_map && h.frame_map->public_ra_length > 0) {
            const auto& fm = *h.frame_map;
            if (fm.public_ra_start > now_ && fm.public_ra_start + fm.public_ra_length <= now_ + n.scan.interval_remaining) {
                n.exchange_tick =
                    fm.public_ra_start + static_cast<Tick>(n.rng.below(static_cast<std::uint64_t>(fm.public_ra_length)));
            }
        }
    }
}

void World::handle_join(Node& head, const JoinRequest& req) {
    if (req.head != head.id || head.phase != Phase::Member || head.head != head.id) return;
    auto it = clusters_.find(head.id);
    if (it == clusters_.end() || !it->second.superframe_start) return;
    auto& c = it->second;
    const Period& p = c.schedule.at(now_ - *c.superframe_start);
    if (p.kind != PeriodKind::PublicRA || c.accepted_join_this_ra) return;

    Node& r = nodes_[req.requester];
    if (r.phase != Phase::Joining || r.join.head != head.id || r.master != c.record.master) return;

    const JoinResponse resp = handle_join_request(c.record, r.id);
    if (const auto* a = std::get_if<JoinAccepted>(&resp)) {
        c.accepted_join_this_ra = true;
        become_member(r, head.id, a->slot);
    } else {
        std::ostringstream os;
        os << "reject node=" << r.id << " head=" << head.id;
        log(os.str());
        r.scan.rejections.insert(head.id);
        give_up_join(r);
    }
}

// A whole cluster senses in the same detection period, so every member
// reads the spectrum before anyone reacts to it.
void World::detection_period_end() {
    std::set<NodeId> detecting;
    for (const auto& [h, c] : clusters_) {
        if (!c.superframe_start) continue;
        const Tick offset = now_ - *c.superframe_start;
        if (offset < 0 || offset >= c.schedule.length()) continue;
        const Period& p = c.schedule.at(offset);
        if (p.kind == PeriodKind::SpectrumDetection && offset == p.start + p.length - 1) detecting.insert(h);
    }
    if (detecting.empty()) return;
    std::vector<NodeId> sensed;
    for (const auto& n : nodes_) {
        if (n.phase == Phase::Member && detecting.contains(n.head)) sensed.push_back(n.id);
    }
    for (NodeId id : sensed) sense(nodes_[id]);
    for (NodeId id : sensed) {
        if (nodes_[id].phase == Phase::Member) on_master_check(nodes_[id]);
    }
}

void World::end_of_tick(Node& n) {
    switch (n.phase) {
        case Phase::Dormant:
        case Phase::Idle: break;
        case Phase::Scanning: {
            if (--n.scan.interval_remaining > 0) break;
            sense(n);
            refresh_selection(n);
            n.scan.available = available_channels(n.obs);
            if (n.scan.available.empty()) {
                begin_scan(n, std::nullopt);
                break;
            }
            apply_scan_outcome(n, finish_scan_interval(n.scan, selected_master(n), n.rng));
            break;
        }
        case Phase::Joining: {
            if (n.join.request_tick && *n.join.request_tick == now_) {
                // No answer: lost in a collision or the head already took a
                // join this period. Retry at the next beacon.
                n.join.request_tick.reset();
                if (++n.join.attempts >= config_.join_attempts) {
                    log("join_failed node=" + std::to_string(n.id) + " head=" + std::to_string(n.join.head));
                    give_up_join(n);
                }
            } else if (now_ - n.join.last_beacon > config_.superframe.max_superframe + 1) {
                log("join_failed node=" + std::to_string(n.id) + " head=" + std::to_string(n.join.head));
                give_up_join(n);
            }
            break;
        }
        case Phase::Member: {
            if (n.head != n.id && now_ - n.last_beacon > member_timeout_) {
                leave_cluster(n, n.master, "beacon_loss");
                break;
            }
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// Tick

void World::step() {
    if (now_ > 0) env_ = step_environment(std::move(env_), env_rng_);
    start_superframes();

    std::vector<Transmission> tx;
    std::vector<Listener> listeners;
    for (auto& n : nodes_) {
        if (n.phase == Phase::Dormant) {
            if (now_ < n.start) continue;
            activate(n);
        }
        if (n.phase == Phase::Idle) {
            sense(n);
            refresh_selection(n);
            if (!available_channels(n.obs).empty()) begin_scan(n, std::nullopt);
            if (n.phase == Phase::Idle) continue;
        }
        switch (n.phase) {
            case Phase::Scanning:
                if (n.exchange_tick && *n.exchange_tick == now_) {
                    tx.push_back({n.id, n.scan.current, make_hello(n)});
                    n.exchange_tick.reset();
                } else {
                    listeners.push_back({n.id, n.scan.current});
                }
                break;
            case Phase::Joining:
                if (n.join.request_tick && *n.join.request_tick == now_) {
                    tx.push_back({n.id, n.join.channel, JoinRequest{n.id, n.join.head}});
                } else {
                    listeners.push_back({n.id, n.join.channel});
                }
                break;
            case Phase::Member: {
                const ChannelId master = n.master.value_or(ChannelId{});
                auto it = clusters_.find(n.head);
                if (it == clusters_.end() || !it->second.superframe_start) {
                    listeners.push_back({n.id, master});
                    break;
                }
                const auto& c = it->second;
                const Tick offset = now_ - *c.superframe_start;
                const Period& p = c.schedule.at(offset);
                switch (p.kind) {
                    case PeriodKind::Beacon:
                        if (n.id == n.head) {
                            Beacon b;
                            b.head = n.id;
                            b.master = c.record.master;
                            b.superframe_start = *c.superframe_start;
                            b.superframe_length = c.schedule.length();
                            const Period* pra = c.schedule.find(PeriodKind::PublicRA);
                            b.public_ra = FrameMap{*c.superframe_start + pra->start, pra->length};
                            b.max_slots = c.record.max_slots;
                            for (const auto& [m, s] : c.record.members) b.slots.push_back({m, s});
                            tx.push_back({n.id, master, std::move(b)});
                        } else {
                            listeners.push_back({n.id, master});
                        }
                        break;
                    case PeriodKind::NeighborDiscovery: {
                        const bool slot_start = (offset - p.start) % c.schedule.minislot == 0;
                        if (slot_start && c.schedule.minislot_at(offset) == n.slot) {
                            tx.push_back({n.id, master, make_hello(n)});
                        } else {
                            listeners.push_back({n.id, master});
                        }
                        break;
                    }
                    case PeriodKind::SpectrumDetection: break;
                    case PeriodKind::Data: listeners.push_back({n.id, n.probe.value_or(master)}); break;
                    case PeriodKind::IntraClusterRA:
                    case PeriodKind::PublicRA: listeners.push_back({n.id, master}); break;
                }
                break;
            }
            default: break;
        }
    }

    const DeliveryResult delivery = deliver_messages(tx, listeners, topology_);
    for (const auto& r : delivery.delivered) handle(nodes_[r.receiver], tx[r.transmission]);

    detection_period_end();
    for (auto& n : nodes_) end_of_tick(n);

    if ((now_ + 1) % config_.metrics_period == 0) {
        ++now_;
        samples_.push_back(metrics_snapshot());
        --now_;
    }
    ++now_;
}

// ---------------------------------------------------------------------------
// Introspection

MetricsSample World::metrics_snapshot() const {
    std::vector<std::optional<ChannelId>> masters;
    masters.reserve(nodes_.size());
    for (const auto& n : nodes_) masters.push_back(n.master);
    MetricsSample s;
    s.tick = now_;
    s.counts = master_counts(masters, config_.channel_count);
    s.stddev = population_stddev(s.counts);
    s.largest_cloud = largest_cloud(masters, topology_.adjacency());
    s.cluster_count = static_cast<int>(clusters_.size());
    return s;
}

NodeRole World::role(NodeId id) const {
    const Node& n = nodes_.at(id);
    if (!is_confirmed(n)) return NodeRole::Scanning;
    if (n.head == id) return NodeRole::Head;
    for (const auto& [key, link] : links_) {
        if (link.first == id || (link.second && *link.second == id)) return NodeRole::Gateway;
    }
    return NodeRole::Ordinary;
}

std::optional<ChannelId> World::master(NodeId id) const { return nodes_.at(id).master; }

std::optional<NodeId> World::cluster_of(NodeId id) const {
    const Node& n = nodes_.at(id);
    if (!is_confirmed(n)) return std::nullopt;
    return n.head;
}

const WeightList& World::weights(NodeId id) const { return nodes_.at(id).weights; }
const NeighborTable& World::table(NodeId id) const { return nodes_.at(id).table; }
Tick World::start_tick(NodeId id) const { return nodes_.at(id).start; }
std::optional<Tick> World::first_associated(NodeId id) const { return nodes_.at(id).associated_at; }
std::optional<Tick> World::first_scan_exit(NodeId id) const { return nodes_.at(id).left_scan_at; }

bool World::head_knows_cluster(NodeId h, NodeId other) const {
    const auto& t = nodes_.at(h).table;
    for (const auto& e : t.one_hop()) {
        if (e.head && *e.head == other) return true;
    }
    for (const auto& e : t.two_hop()) {
        if (e.head && *e.head == other) return true;
    }
    return false;
}

std::vector<NodeId> World::confirmed_members(NodeId head) const {
    std::vector<NodeId> out;
    auto it = clusters_.find(head);
    if (it == clusters_.end()) return out;
    for (const auto& [m, slot] : it->second.record.members) {
        const Node& n = nodes_[m];
        if (n.phase == Phase::Member && n.head == head) out.push_back(m);
    }
    return out;
}

std::vector<std::string> World::check_invariants() const {
    std::vector<std::string> v;
    auto fail = [&](const std::string& s) { v.push_back(std::to_string(now_) + ": " + s); };
    for (const auto& [h, c] : clusters_) {
        const auto& rec = c.record;
        const Node& hn = nodes_[h];
        if (hn.phase != Phase::Member || hn.head != h) fail("head " + std::to_string(h) + " is not heading its cluster");
        if (static_cast<int>(rec.members.size()) > rec.max_slots) fail("cluster " + std::to_string(h) + " over capacity");
        std::set<int> slots;
        for (const auto& [m, s] : rec.members) {
            if (s < 0 || s >= rec.max_slots) fail("slot out of range in cluster " + std::to_string(h));
            if (!slots.insert(s).second) fail("duplicate slot in cluster " + std::to_string(h));
        }
        for (NodeId m : confirmed_members(h)) {
            if (nodes_[m].master != rec.master) {
                fail("member " + std::to_string(m) + " master differs from cluster " + std::to_string(h));
            }
            if (m != h && !topology_.in_range(m, h)) {
                fail("member " + std::to_string(m) + " not 1-hop from head " + std::to_string(h));
            }
        }
    }
    for (const auto& n : nodes_) {
        if (n.phase != Phase::Member || !is_confirmed(n)) continue;
        int holders = 0;
        for (const auto& [h, c] : clusters_) {
            if (c.record.members.contains(n.id) && nodes_[n.id].head == h) ++holders;
        }
        if (holders != 1) fail("node " + std::to_string(n.id) + " belongs to " + std::to_string(holders) + " clusters");
    }
    for (const auto& [key, link] : links_) {
        const auto [ha, hb] = key;
        if (!clusters_.contains(ha) || !clusters_.contains(hb)) {
            fail("gateway link to a dead cluster");
            continue;
        }
        auto near = [&](NodeId x, NodeId y) { return x == y || topology_.in_range(x, y); };
        if (link.single()) {
            if (!near(link.first, ha) || !near(link.first, hb)) fail("single gateway not adjacent to both heads");
        } else {
            const NodeId x = link.first;
            const NodeId y = *link.second;
            const bool path = topology_.in_range(x, y) &&
                              ((near(x, ha) && near(y, hb)) || (near(x, hb) && near(y, ha)));
            if (!path) fail("gateway pair does not relay between heads");
        }
    }
    return v;
}

RunResult run(const ScenarioConfig& config) {
    World w(config);
    w.run_until(config.duration_ticks);
    return {w.samples(), w.events()};
}

}  // namespace cogmesh
