#pragma once

#include <spdlog/spdlog.h>

namespace ppgage::log {

using spdlog::debug;
using spdlog::error;
using spdlog::info;
using spdlog::warn;

/// Routes logging to stderr and reads the level from PPGAGE_LOG
/// (trace, debug, info, warn, error, off). Defaults to info.
void init_from_env();

void set_level(spdlog::level::level_enum level);

}  // namespace ppgage::log
