#pragma once

#include <cstdint>

namespace spillway::sim {

/// Simulated time in integer nanoseconds.
using Time = std::int64_t;

inline constexpr Time kNanosecond = 1;
inline constexpr Time kMicrosecond = 1000;
inline constexpr Time kMillisecond = 1000 * kMicrosecond;
inline constexpr Time kSecond = 1000 * kMillisecond;

constexpr double to_seconds(Time t) { return static_cast<double>(t) * 1e-9; }
constexpr double to_millis(Time t) { return static_cast<double>(t) * 1e-6; }
constexpr double to_micros(Time t) { return static_cast<double>(t) * 1e-3; }

constexpr Time from_micros(double us) { return static_cast<Time>(us * 1e3 + 0.5); }
constexpr Time from_millis(double ms) { return static_cast<Time>(ms * 1e6 + 0.5); }

}  // namespace spillway::sim
