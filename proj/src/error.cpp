// SPDX-License-Identifier: Apache-2.0
#include "graphdf/error.hpp"

namespace graphdf {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingObservation: return "MissingObservation";
    case ErrorKind::IrregularGrid: return "IrregularGrid";
    case ErrorKind::InvalidValue: return "InvalidValue";
    case ErrorKind::DegenerateGraph: return "DegenerateGraph";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::OracleBudgetExceeded: return "OracleBudgetExceeded";
    case ErrorKind::NumericOverflow: return "NumericOverflow";
    case ErrorKind::NoLag: return "NoLag";
    case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace graphdf
