#include "cogmesh/superframe.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cogmesh {

const char* to_string(PeriodKind kind) {
    switch (kind) {
        case PeriodKind::Beacon: return "Beacon";
        case PeriodKind::NeighborDiscovery: return "NeighborDiscovery";
        case PeriodKind::SpectrumDetection: return "SpectrumDetection";
        case PeriodKind::Data: return "Data";
        case PeriodKind::IntraClusterRA: return "IntraClusterRA";
        case PeriodKind::PublicRA: return "PublicRA";
    }
    return "?";
}

Tick SuperframeParams::longest() const {
    return beacon + minislot * max_slots + data + intra_ra + public_ra_max + detect * detect_periods;
}

void validate(const SuperframeParams& p) {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (p.beacon < 1) fail("beacon_ticks must be >= 1");
    if (p.minislot < 1) fail("minislot_ticks must be >= 1");
    if (p.max_slots < 1) fail("max_slots must be >= 1");
    if (p.data < 1) fail("data_ticks must be >= 1");
    if (p.intra_ra < 0) fail("intra_ra_ticks must be >= 0");
    if (p.public_ra_min < 1) fail("public_ra_min must be >= 1");
    if (p.public_ra_max < p.public_ra_min) fail("public_ra_max must be >= public_ra_min");
    if (p.detect < 1) fail("detect_ticks must be >= 1");
    if (p.detect_periods < 1) fail("detect_periods must be >= 1");
    if (p.longest() > p.max_superframe) fail("max_superframe is shorter than the longest possible superframe");
}

Tick SuperframeSchedule::length() const {
    if (periods.empty()) return 0;
    const auto& last = periods.back();
    return last.start + last.length;
}

const Period& SuperframeSchedule::at(Tick offset) const {
    auto it = std::upper_bound(periods.begin(), periods.end(), offset,
                               [](Tick off, const Period& p) { return off < p.start; });
    if (it == periods.begin() || offset >= length()) throw std::out_of_range("offset outside superframe");
    return *std::prev(it);
}

const Period* SuperframeSchedule::find(PeriodKind kind) const {
    for (const auto& p : periods) {
        if (p.kind == kind) return &p;
    }
    return nullptr;
}

int SuperframeSchedule::minislot_at(Tick offset) const {
    const Period& p = at(offset);
    if (p.kind != PeriodKind::NeighborDiscovery) return -1;
    return static_cast<int>((offset - p.start) / minislot);
}

SuperframeSchedule layout_superframe(const SuperframeParams& params, int slots, Tick public_ra_length,
                                     std::span<const int> detect_gaps) {
    SuperframeSchedule s;
    s.minislot = params.minislot;
    Tick cursor = 0;
    auto push = [&](PeriodKind kind, Tick len) {
        s.periods.push_back({kind, cursor, len});
        cursor += len;
    };
    auto detections_after = [&](int gap) {
        for (int g : detect_gaps) {
            if (g == gap) push(PeriodKind::SpectrumDetection, params.detect);
        }
    };
    push(PeriodKind::Beacon, params.beacon);
    detections_after(1);
    push(PeriodKind::NeighborDiscovery, params.minislot * slots);
    detections_after(2);
    push(PeriodKind::Data, params.data);
    detections_after(3);
    if (params.intra_ra > 0) push(PeriodKind::IntraClusterRA, params.intra_ra);
    detections_after(4);
    push(PeriodKind::PublicRA, public_ra_length);
    return s;
}

SuperframeSchedule build_superframe(int max_slots, const SuperframeParams& params, Rng& rng) {
    const Tick public_ra = rng.between(params.public_ra_min, params.public_ra_max);
    std::vector<int> gaps(static_cast<std::size_t>(params.detect_periods));
    for (auto& g : gaps) g = static_cast<int>(rng.between(1, 4));
    return layout_superframe(params, max_slots, public_ra, gaps);
}

}  // namespace cogmesh
