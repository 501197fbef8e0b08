#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

namespace cogmesh {

using NodeId = std::uint32_t;
using Tick = std::int64_t;

/// Channel index, ordered by ascending carrier frequency (0 = lowest).
struct ChannelId {
    int index = 0;

    constexpr ChannelId() = default;
    constexpr explicit ChannelId(int i) : index(i) {}

    constexpr auto operator<=>(const ChannelId&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, ChannelId ch) { return os << "ch" << ch.index; }

struct Position {
    double x = 0.0;
    double y = 0.0;
};

inline double distance(Position a, Position b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace cogmesh

template <>
struct std::hash<cogmesh::ChannelId> {
    std::size_t operator()(cogmesh::ChannelId ch) const noexcept { return std::hash<int>{}(ch.index); }
};
