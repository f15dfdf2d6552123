#pragma once

#include <spdlog/logger.h>

#include <memory>

namespace cool {

/// Shared stderr logger; level from COOL_LOG (trace, debug, info, warn,
/// error, critical, off), default info.
std::shared_ptr<spdlog::logger> logger();

} // namespace cool
