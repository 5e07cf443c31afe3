#pragma once

#include <cstdint>
#include <limits>

namespace qnet {

// Index into Simulation's node table (routers and BSM nodes share it).
using NodeIndex = std::uint32_t;
// Index into Simulation's flat memory table, unique across the whole network.
using MemoryId = std::uint32_t;
// Index into Simulation's link table (one entry per router-router fiber link).
using LinkId = std::uint32_t;
// Protocol instance identifier, unique per run.
using InstanceId = std::uint64_t;
// Reservation/request identifier, unique per run.
using ReservationId = std::uint64_t;

inline constexpr NodeIndex kNoNode = std::numeric_limits<NodeIndex>::max();
inline constexpr MemoryId kNoMemory = std::numeric_limits<MemoryId>::max();
inline constexpr InstanceId kNoInstance = 0;

}  // namespace qnet
