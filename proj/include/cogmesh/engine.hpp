#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cogmesh/cluster_protocol.hpp"
#include "cogmesh/metrics.hpp"
#include "cogmesh/reformation.hpp"
#include "cogmesh/scenario.hpp"
#include "cogmesh/superframe.hpp"

namespace cogmesh {

// ---------------------------------------------------------------------------
// Physical layer

struct Transmission {
    NodeId sender = 0;
    ChannelId channel;
    Message message;
};

struct Listener {
    NodeId node = 0;
    ChannelId channel;
};

struct Reception {
    NodeId receiver = 0;
    std::size_t transmission = 0;  // index into the transmission list
};

struct DeliveryResult {
    std::vector<Reception> delivered;
    std::vector<Reception> dropped;  // collisions
};

/// Static node placement with a disk communication model.
class Topology {
public:
    Topology() = default;
    Topology(std::vector<Position> positions, double comm_range);

    std::size_t size() const { return positions_.size(); }
    Position position(NodeId id) const { return positions_[id]; }
    bool in_range(NodeId a, NodeId b) const;
    const std::vector<NodeId>& neighbors(NodeId id) const { return neighbors_[id]; }
    const std::vector<std::vector<NodeId>>& adjacency() const { return neighbors_; }
    bool connected() const;

private:
    std::vector<Position> positions_;
    double range_ = 0.0;
    std::vector<std::vector<NodeId>> neighbors_;
};

/// One tick of the shared medium. A listener tuned to channel c receives a
/// transmission on c from an in-range sender iff it is the only in-range
/// transmission on c; otherwise every overlapping one is dropped at that
/// listener. Transmitters are not listeners (half duplex).
DeliveryResult deliver_messages(std::span<const Transmission> transmissions, std::span<const Listener> listeners,
                                const Topology& topology);

// ---------------------------------------------------------------------------
// World

struct ClusterState {
    ClusterRecord record;
    Tick formed_at = 0;
    Tick next_superframe = 0;
    std::optional<Tick> superframe_start;
    SuperframeSchedule schedule;
    std::map<NodeId, Tick> last_heard;
    bool accepted_join_this_ra = false;  // one join per public RA
    HeadArbiter arbiter;
    std::uint64_t version = 0;
    std::vector<std::uint64_t> inbox_requests;  // plan ids waiting for this head's public RA
    std::vector<std::pair<std::uint64_t, std::pair<NodeId, HeadReply>>> inbox_replies;
};

struct RunResult {
    std::vector<MetricsSample> samples;
    std::vector<std::string> events;
};

class World {
public:
    explicit World(const ScenarioConfig& config);

    /// Advances one tick: environment, superframe boundaries, node actions,
    /// delivery, message handling, timers, and (every metrics_period) a sample.
    void step();
    void run_until(Tick tick) {
        while (now_ < tick) step();
    }

    Tick now() const { return now_; }
    const ScenarioConfig& config() const { return config_; }
    const Topology& topology() const { return topology_; }
    const RadioEnvironment& environment() const { return env_; }
    const std::vector<MetricsSample>& samples() const { return samples_; }
    const std::vector<std::string>& events() const { return events_; }

    MetricsSample metrics_snapshot() const;

    std::size_t node_count() const { return nodes_.size(); }
    NodeRole role(NodeId id) const;
    std::optional<ChannelId> master(NodeId id) const;
    /// Head of the cluster the node belongs to (itself for heads).
    std::optional<NodeId> cluster_of(NodeId id) const;
    const WeightList& weights(NodeId id) const;
    const NeighborTable& table(NodeId id) const;
    Tick start_tick(NodeId id) const;
    /// First tick at which the node's scan ended in a join request or a new cluster.
    std::optional<Tick> first_scan_exit(NodeId id) const;
    /// First tick at which the node became a head or an accepted member.
    std::optional<Tick> first_associated(NodeId id) const;

    const std::map<NodeId, ClusterState>& clusters() const { return clusters_; }
    /// Gateway links between live clusters, keyed by (lower head, higher head).
    const std::map<std::pair<NodeId, NodeId>, GatewayLink>& gateway_links() const { return links_; }
    /// Whether head `h` has any table entry belonging to cluster `other`.
    bool head_knows_cluster(NodeId h, NodeId other) const;

    /// Confirmed members: in the head's record and agreeing that they belong to it.
    std::vector<NodeId> confirmed_members(NodeId head) const;

    /// Structural invariants of clusters, membership and gateways. Empty when all hold.
    std::vector<std::string> check_invariants() const;

    /// Test hook: the head stops answering reformation requests.
    void silence_head(NodeId head) { silent_heads_.insert(head); }

private:
    enum class Phase { Dormant, Idle, Scanning, Joining, Member };

    struct JoinState {
        NodeId head = 0;
        ChannelId channel;
        int attempts = 0;
        std::optional<Tick> request_tick;
        Tick last_beacon = 0;
    };

    struct Node {
        NodeId id = 0;
        Tick start = 0;
        Rng rng;
        Phase phase = Phase::Dormant;
        std::vector<ChannelObservation> obs;
        Tick sensed_at = -1;
        WeightList weights;
        std::optional<ChannelId> master;
        ScanState scan;
        std::optional<Tick> exchange_tick;
        JoinState join;
        NodeId head = 0;
        int slot = -1;
        Tick last_beacon = 0;
        std::optional<ChannelId> probe;
        std::set<ChannelId> pending_probe;
        NeighborTable table;
        int superframes = 0;
        std::optional<std::uint64_t> plan;
        std::optional<Tick> associated_at;
        std::optional<Tick> left_scan_at;
    };

    struct ActivePlan {
        std::uint64_t id = 0;
        Negotiation negotiation;
        std::map<NodeId, std::uint64_t> acked_versions;
    };

    // setup
    void place_nodes();
    void place_pus();

    // node helpers
    void log(const std::string& line);
    void sense(Node& n);
    std::optional<ChannelId> selected_master(const Node& n) const;
    void refresh_selection(Node& n);
    void activate(Node& n);
    void begin_scan(Node& n, std::optional<ChannelId> start_at);
    void apply_scan_outcome(Node& n, const ScanOutcome& outcome);
    void form_cluster(Node& n, ChannelId channel);
    void become_member(Node& n, NodeId head, int slot);
    void leave_cluster(Node& n, std::optional<ChannelId> rescan_at, const char* reason);
    void dissolve_cluster(Node& head, std::optional<ChannelId> rescan_at, const char* reason);
    void give_up_join(Node& n);
    void mark_associated(Node& n);
    HelloMessage make_hello(const Node& n) const;
    bool is_confirmed(const Node& n) const;

    // superframe machinery
    void start_superframes();
    void head_superframe_start(ClusterState& c);
    void member_superframe_start(Node& n);
    void select_gateways_for(ClusterState& c);
    void process_public_ra(ClusterState& c);
    void on_master_check(Node& n);
    void detection_period_end();

    // reformation
    void reform_tick(Node& n);
    void resolve_plan(Node& n, NegotiationStatus status);
    bool commit_plan(ActivePlan& p, std::string& why);
    void release_plan(std::uint64_t plan_id);

    // message handling
    void handle(Node& n, const Transmission& tx);
    void handle_beacon(Node& n, const Beacon& b);
    void handle_hello(Node& n, const HelloMessage& h);
    void handle_join(Node& head, const JoinRequest& req);
    void schedule_join_request(Node& n, Tick from, Tick until);

    void end_of_tick(Node& n);

    ScenarioConfig config_;
    Tick scan_interval_ = 0;
    Tick member_timeout_ = 0;
    Rng world_rng_;
    Rng env_rng_;
    RadioEnvironment env_;
    Topology topology_;
    std::vector<Node> nodes_;
    std::map<NodeId, ClusterState> clusters_;
    std::map<std::pair<NodeId, NodeId>, GatewayLink> links_;
    std::map<std::pair<NodeId, NodeId>, NodeId> link_owner_;
    std::map<std::uint64_t, ActivePlan> plans_;
    std::uint64_t next_plan_id_ = 1;
    std::set<NodeId> silent_heads_;
    std::set<NodeId> superframe_started_now_;
    Tick now_ = 0;
    std::vector<MetricsSample> samples_;
    std::vector<std::string> events_;
};

/// Runs a whole scenario and returns every sample and event.
RunResult run(const ScenarioConfig& config);

}  // namespace cogmesh
