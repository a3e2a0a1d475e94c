// SPDX-License-Identifier: Apache-2.0
#include "graphdf/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace graphdf {

spdlog::logger& logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
    auto lg = std::make_shared<spdlog::logger>("graphdf", sink);
    lg->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("GRAPHDF_LOG"); env != nullptr && *env != '\0') {
      level = spdlog::level::from_str(env);
    }
    lg->set_level(level);
    return lg;
  }();
  return *instance;
}

}  // namespace graphdf
