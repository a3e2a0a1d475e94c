// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace graphdf {

enum class ErrorKind {
  MissingObservation,
  IrregularGrid,
  InvalidValue,
  DegenerateGraph,
  ShapeError,
  OracleBudgetExceeded,
  NumericOverflow,
  NoLag,
  DegenerateDenominator,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require_shape(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::ShapeError, what);
}

}  // namespace graphdf
