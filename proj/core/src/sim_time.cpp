// SPDX-License-Identifier: Apache-2.0
#include "rdna/sim_time.hpp"

#include <cstdio>
#include <cstdlib>

namespace rdna {

std::string format_seconds(SimTime t) {
  const std::int64_t ps = t.ps();
  const bool negative = ps < 0;
  const std::int64_t mag = negative ? -ps : ps;
  const std::int64_t ns = (mag + 500) / 1000;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s%lld.%09lld", negative && ns != 0 ? "-" : "",
                static_cast<long long>(ns / 1'000'000'000), static_cast<long long>(ns % 1'000'000'000));
  return buf;
}

SimTime transmission_time(std::uint64_t bytes, double capacity_bps) {
  const long double ps = static_cast<long double>(bytes) * 8.0L * static_cast<long double>(SimTime::kPerSecond) /
                         static_cast<long double>(capacity_bps);
  return SimTime::from_ps(static_cast<std::int64_t>(std::llroundl(ps)));
}

}  // namespace rdna
