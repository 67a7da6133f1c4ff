// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdna {

enum class Errc {
  InvalidModulus,
  InvalidResidue,
  NotCoprime,
  ModuliNotCoprime,
  RouteIdOverflow,
  EmptyConstraints,
  UnknownNode,
  UnknownLink,
  InvalidPath,
  InvalidRule,
  RouteMismatch,
  NoOpMigration,
  EventOverflow,
  InvalidArgument,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rdna
