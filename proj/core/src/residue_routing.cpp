// SPDX-License-Identifier: Apache-2.0
#include "rdna/residue_routing.hpp"

#include <cstdio>
#include <numeric>

#include "rdna/error.hpp"

namespace rdna {

namespace {
// Wide intermediates for products of moduli up to 2^48 times a residue.
__extension__ using i128 = __int128;
__extension__ using u128 = unsigned __int128;
}  // namespace

RouteId::RouteId(std::uint64_t value) : value_(value) {
  if (value >= kRouteIdLimit) {
    throw Error(Errc::RouteIdOverflow, "route id " + std::to_string(value) + " does not fit in 48 bits");
  }
}

CoreSwitchId::CoreSwitchId(std::uint64_t modulus) : modulus_(modulus) {
  if (modulus < 2) {
    throw Error(Errc::InvalidModulus, "switch modulus must be >= 2, got " + std::to_string(modulus));
  }
}

std::uint64_t mod_inverse(std::uint64_t a, std::uint64_t m) {
  if (m < 2) {
    throw Error(Errc::InvalidModulus, "modulus must be >= 2, got " + std::to_string(m));
  }
  // Extended Euclid on signed 128-bit values; |coefficients| stay below m.
  i128 old_r = static_cast<i128>(a % m), r = static_cast<i128>(m);
  i128 old_s = 1, s = 0;
  while (r != 0) {
    const i128 q = old_r / r;
    const i128 next_r = old_r - q * r;
    old_r = r;
    r = next_r;
    const i128 next_s = old_s - q * s;
    old_s = s;
    s = next_s;
  }
  if (old_r != 1) {
    throw Error(Errc::NotCoprime,
                std::to_string(a) + " has no inverse modulo " + std::to_string(m));
  }
  i128 x = old_s % static_cast<i128>(m);
  if (x < 0) x += m;
  return static_cast<std::uint64_t>(x);
}

RouteId crt_solve(std::span<const ResidueConstraint> constraints) {
  if (constraints.empty()) {
    throw Error(Errc::EmptyConstraints, "crt_solve needs at least one constraint");
  }
  for (const auto& c : constraints) {
    if (c.residue >= c.modulus.modulus()) {
      throw Error(Errc::InvalidResidue, "residue " + std::to_string(c.residue) + " is not below modulus " +
                                            std::to_string(c.modulus.modulus()));
    }
  }
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    for (std::size_t j = i + 1; j < constraints.size(); ++j) {
      const auto mi = constraints[i].modulus.modulus();
      const auto mj = constraints[j].modulus.modulus();
      if (std::gcd(mi, mj) != 1) {
        throw Error(Errc::ModuliNotCoprime, "moduli " + std::to_string(mi) + " and " + std::to_string(mj) +
                                                " share factor " + std::to_string(std::gcd(mi, mj)));
      }
    }
  }
  u128 product = 1;
  for (const auto& c : constraints) {
    product *= c.modulus.modulus();
    if (product > kRouteIdLimit) {
      throw Error(Errc::RouteIdOverflow, "product of path moduli exceeds 2^48");
    }
  }

  // Incremental (Garner-style) combination. Invariant: value < modulus <= 2^48
  // and value satisfies every constraint folded in so far.
  u128 value = constraints.front().residue;
  u128 modulus = constraints.front().modulus.modulus();
  for (std::size_t i = 1; i < constraints.size(); ++i) {
    const std::uint64_t m = constraints[i].modulus.modulus();
    const std::uint64_t p = constraints[i].residue;
    const std::uint64_t current = static_cast<std::uint64_t>(value % m);
    const std::uint64_t delta = (p + m - current) % m;
    const std::uint64_t inv = mod_inverse(static_cast<std::uint64_t>(modulus % m), m);
    const std::uint64_t step = static_cast<std::uint64_t>((static_cast<u128>(delta) * inv) % m);
    value += modulus * step;
    modulus *= m;
  }
  return RouteId(static_cast<std::uint64_t>(value));
}

MacAddress encode_route_field(RouteId route) noexcept {
  MacAddress out{};
  std::uint64_t v = route.value();
  for (int i = 5; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 0xff);
    v >>= 8;
  }
  return out;
}

RouteId decode_route_field(const MacAddress& field) noexcept {
  std::uint64_t v = 0;
  for (const auto octet : field) v = (v << 8) | octet;
  return RouteId(v);  // six octets never exceed 2^48 - 1
}

std::string to_string(const MacAddress& addr) {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", addr[0], addr[1], addr[2], addr[3], addr[4],
                addr[5]);
  return buf;
}

}  // namespace rdna
