#pragma once

#include <span>
#include <vector>

#include "cogmesh/rng.hpp"
#include "cogmesh/types.hpp"

namespace cogmesh {

enum class PeriodKind { Beacon, NeighborDiscovery, SpectrumDetection, Data, IntraClusterRA, PublicRA };

const char* to_string(PeriodKind kind);

/// Period lengths in ticks. One tick is one mini-slot.
struct SuperframeParams {
    Tick beacon = 1;
    Tick minislot = 1;
    int max_slots = 8;
    Tick data = 8;
    Tick intra_ra = 2;
    Tick public_ra_min = 2;
    Tick public_ra_max = 6;
    Tick detect = 2;
    int detect_periods = 1;
    Tick max_superframe = 32;

    /// Longest superframe these parameters can produce.
    Tick longest() const;

    bool operator==(const SuperframeParams&) const = default;
};

/// Throws std::invalid_argument naming the offending parameter.
void validate(const SuperframeParams& params);

struct Period {
    PeriodKind kind = PeriodKind::Beacon;
    Tick start = 0;  // offset from the superframe start
    Tick length = 0;
};

struct SuperframeSchedule {
    std::vector<Period> periods;
    Tick minislot = 1;

    Tick length() const;
    /// Period covering `offset`; offset must lie inside the superframe.
    const Period& at(Tick offset) const;
    /// First period of the given kind, or nullptr.
    const Period* find(PeriodKind kind) const;
    /// Mini-slot index covering `offset` during neighbor discovery, else -1.
    int minislot_at(Tick offset) const;
};

/// Deterministic layout. `detect_gaps[i]` in [1, 4] places the i-th detection
/// period after the Beacon (1), NeighborDiscovery (2), Data (3) or IntraClusterRA (4).
SuperframeSchedule layout_superframe(const SuperframeParams& params, int slots, Tick public_ra_length,
                                     std::span<const int> detect_gaps);

/// Head-side construction: public RA length and detection positions are drawn from rng.
SuperframeSchedule build_superframe(int max_slots, const SuperframeParams& params, Rng& rng);

}  // namespace cogmesh
