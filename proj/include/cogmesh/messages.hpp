#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "cogmesh/types.hpp"

namespace cogmesh {

struct ChannelQuality {
    ChannelId channel;
    int q_stage = 0;
};

/// One 1-hop neighbor as advertised inside a HELLO.
struct NeighborReport {
    NodeId id = 0;
    std::optional<NodeId> head;
    ChannelId master;
    std::vector<ChannelQuality> channels;
};

/// Time and duration of the sender cluster's public random access period,
/// carried in the Frame Map of each HELLO mini-slot.
struct FrameMap {
    Tick public_ra_start = 0;
    Tick public_ra_length = 0;
};

struct HelloMessage {
    NodeId sender = 0;
    std::optional<NodeId> head;  // empty for unassociated senders
    ChannelId master;
    std::vector<ChannelQuality> channels;
    std::vector<NeighborReport> neighbor_list;
    std::optional<FrameMap> frame_map;
};

struct SlotAssignment {
    NodeId member = 0;
    int slot = 0;
};

struct Beacon {
    NodeId head = 0;
    ChannelId master;
    Tick superframe_start = 0;
    Tick superframe_length = 0;
    FrameMap public_ra;
    int max_slots = 0;
    std::vector<SlotAssignment> slots;
};

struct JoinRequest {
    NodeId requester = 0;
    NodeId head = 0;
};

using Message = std::variant<Beacon, HelloMessage, JoinRequest>;

}  // namespace cogmesh
