#pragma once

#include <cstdint>

namespace powtopo {

//! Simulation time. Milliseconds in the event simulator, rounds in the round model.
using Millis = double;

using BlockId = std::uint32_t;
using MinerId = std::int32_t;

inline constexpr BlockId kGenesisId = 0;
inline constexpr MinerId kNoMiner = -1;

} // namespace powtopo
