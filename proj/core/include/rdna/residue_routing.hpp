// SPDX-License-Identifier: Apache-2.0
#pragma once

// Residue-defined strict source routing.
//
// A route through the core is a single integer R. Each core switch owns a
// modulus m (its switch identifier) and forwards a packet out of port R mod m.
// Given the egress port wanted at every hop, R is the smallest non-negative
// solution of the simultaneous congruences R = p_i (mod m_i); the moduli on a
// path must be pairwise coprime for that solution to exist. R travels in the
// 48-bit source-address field of the frame, so the product of the moduli on a
// path is capped at 2^48.

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>

namespace rdna {

inline constexpr std::uint64_t kRouteIdLimit = std::uint64_t{1} << 48;

class RouteId {
 public:
  constexpr RouteId() = default;
  // Throws Error(RouteIdOverflow) when value >= 2^48.
  explicit RouteId(std::uint64_t value);

  constexpr std::uint64_t value() const noexcept { return value_; }
  constexpr auto operator<=>(const RouteId&) const = default;

 private:
  std::uint64_t value_ = 0;
};

// Identifier of a core switch, used as its CRT modulus.
class CoreSwitchId {
 public:
  // Throws Error(InvalidModulus) when modulus < 2.
  explicit CoreSwitchId(std::uint64_t modulus);

  constexpr std::uint64_t modulus() const noexcept { return modulus_; }
  constexpr auto operator<=>(const CoreSwitchId&) const = default;

 private:
  std::uint64_t modulus_;
};

struct ResidueConstraint {
  CoreSwitchId modulus;
  std::uint64_t residue;  // egress port index at that switch

  constexpr bool operator==(const ResidueConstraint&) const = default;
};

using MacAddress = std::array<std::uint8_t, 6>;

// x in [0, m) with a*x = 1 (mod m). Throws InvalidModulus for m < 2 and
// NotCoprime when gcd(a, m) != 1.
std::uint64_t mod_inverse(std::uint64_t a, std::uint64_t m);

// Smallest non-negative R with R mod m_i = p_i for every constraint.
// Throws EmptyConstraints, InvalidResidue (p_i >= m_i), ModuliNotCoprime, or
// RouteIdOverflow (product of moduli > 2^48). Order of constraints is
// irrelevant to the result.
RouteId crt_solve(std::span<const ResidueConstraint> constraints);

// Egress port chosen by a core switch. Total; whether the port is wired is
// the caller's concern.
inline std::uint64_t modulo_forward(RouteId route, CoreSwitchId sw) noexcept {
  return route.value() % sw.modulus();
}

// Big-endian 6-octet encoding of the route in the source-address slot.
MacAddress encode_route_field(RouteId route) noexcept;
RouteId decode_route_field(const MacAddress& field) noexcept;

std::string to_string(const MacAddress& addr);

}  // namespace rdna
