#include "cogmesh/neighbor_table.hpp"

namespace cogmesh {

void NeighborTable::on_hello(const HelloMessage& hello, Tick now) {
    if (hello.sender == self_) return;
    auto& e = one_hop_[hello.sender];
    e.info.id = hello.sender;
    e.info.head = hello.head;
    e.info.master = hello.master;
    e.info.channels = hello.channels;
    e.last_seen = now;
    count_reports(e.reported, -1);
    e.reported = hello.neighbor_list;
    count_reports(e.reported, +1);
}

void NeighborTable::count_reports(const std::vector<NeighborReport>& reports, int delta) {
    for (const auto& r : reports) {
        if (r.id == self_) continue;
        auto& n = reported_count_[r.id];
        n += delta;
        if (n <= 0) reported_count_.erase(r.id);
    }
}

void NeighborTable::on_beacon(const Beacon& beacon, Tick now) {
    if (beacon.head == self_) return;
    auto& e = one_hop_[beacon.head];
    e.info.id = beacon.head;
    e.info.head = beacon.head;
    e.info.master = beacon.master;
    e.last_seen = now;
}

void NeighborTable::evict_older_than(Tick cutoff) {
    for (auto it = one_hop_.begin(); it != one_hop_.end();) {
        if (it->second.last_seen < cutoff) {
            count_reports(it->second.reported, -1);
            it = one_hop_.erase(it);
        } else {
            ++it;
        }
    }
}

std::optional<NeighborEntry> NeighborTable::find(NodeId id) const {
    if (auto it = one_hop_.find(id); it != one_hop_.end()) {
        const auto& e = it->second;
        return NeighborEntry{id, 1, std::nullopt, e.info.head, e.info.master, e.info.channels, e.last_seen};
    }
    for (const auto& [relay, e] : one_hop_) {
        for (const auto& r : e.reported) {
            if (r.id == id && id != self_) {
                return NeighborEntry{id, 2, relay, r.head, r.master, r.channels, e.last_seen};
            }
        }
    }
    return std::nullopt;
}

std::vector<NeighborEntry> NeighborTable::one_hop() const {
    std::vector<NeighborEntry> out;
    out.reserve(one_hop_.size());
    for (const auto& [id, e] : one_hop_) {
        out.push_back({id, 1, std::nullopt, e.info.head, e.info.master, e.info.channels, e.last_seen});
    }
    return out;
}

std::vector<NeighborEntry> NeighborTable::two_hop() const {
    std::map<NodeId, NeighborEntry> found;
    for (const auto& [relay, e] : one_hop_) {
        for (const auto& r : e.reported) {
            if (r.id == self_ || one_hop_.contains(r.id) || found.contains(r.id)) continue;
            found.emplace(r.id, NeighborEntry{r.id, 2, relay, r.head, r.master, r.channels, e.last_seen});
        }
    }
    std::vector<NeighborEntry> out;
    out.reserve(found.size());
    for (auto& [id, entry] : found) out.push_back(std::move(entry));
    return out;
}

const std::vector<NeighborReport>& NeighborTable::reported_by(NodeId id) const {
    static const std::vector<NeighborReport> none;
    auto it = one_hop_.find(id);
    return it == one_hop_.end() ? none : it->second.reported;
}

std::vector<NeighborReport> NeighborTable::as_reports() const {
    std::vector<NeighborReport> out;
    out.reserve(one_hop_.size());
    for (const auto& [id, e] : one_hop_) out.push_back(e.info);
    return out;
}

}  // namespace cogmesh
