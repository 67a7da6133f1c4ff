// SPDX-License-Identifier: Apache-2.0
#include "rdna/error.hpp"

namespace rdna {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidModulus: return "InvalidModulus";
    case Errc::InvalidResidue: return "InvalidResidue";
    case Errc::NotCoprime: return "NotCoprime";
    case Errc::ModuliNotCoprime: return "ModuliNotCoprime";
    case Errc::RouteIdOverflow: return "RouteIdOverflow";
    case Errc::EmptyConstraints: return "EmptyConstraints";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::UnknownLink: return "UnknownLink";
    case Errc::InvalidPath: return "InvalidPath";
    case Errc::InvalidRule: return "InvalidRule";
    case Errc::RouteMismatch: return "RouteMismatch";
    case Errc::NoOpMigration: return "NoOpMigration";
    case Errc::EventOverflow: return "EventOverflow";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace rdna
