// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

namespace spdlog {
class logger;
}

namespace graphdf {

/// Shared stderr logger. Verbosity comes from the GRAPHDF_LOG environment
/// variable (trace, debug, info, warn, error, off); default is warn.
spdlog::logger& logger();

}  // namespace graphdf
