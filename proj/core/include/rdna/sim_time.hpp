// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

namespace rdna {

// Simulated time as an integer count of picoseconds. Integer time keeps event
// ordering exact; 2^63 ps is about 106 days.
class SimTime {
 public:
  static constexpr std::int64_t kPerSecond = 1'000'000'000'000;

  constexpr SimTime() = default;

  static constexpr SimTime from_ps(std::int64_t ps) { return SimTime(ps); }
  static SimTime from_seconds(double s) {
    return SimTime(static_cast<std::int64_t>(std::llround(s * static_cast<double>(kPerSecond))));
  }

  constexpr std::int64_t ps() const { return ps_; }
  constexpr double seconds() const { return static_cast<double>(ps_) / static_cast<double>(kPerSecond); }

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime operator+(SimTime o) const { return SimTime(ps_ + o.ps_); }
  constexpr SimTime operator-(SimTime o) const { return SimTime(ps_ - o.ps_); }
  constexpr SimTime& operator+=(SimTime o) {
    ps_ += o.ps_;
    return *this;
  }

 private:
  constexpr explicit SimTime(std::int64_t ps) : ps_(ps) {}
  std::int64_t ps_ = 0;
};

constexpr SimTime max(SimTime a, SimTime b) { return a < b ? b : a; }

// Fixed 9-fractional-digit seconds, rounded half-up to the nanosecond.
std::string format_seconds(SimTime t);

// Serialization time of `bytes` on a link of `capacity_bps`.
SimTime transmission_time(std::uint64_t bytes, double capacity_bps);

}  // namespace rdna
