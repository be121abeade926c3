#pragma once

#include <string_view>

namespace covfield {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

/// Read once from COVFIELD_LOG: quiet, warn (default), info, debug, or 0-3.
LogLevel log_level();
void set_log_level(LogLevel level);
bool log_enabled(LogLevel level);
/// Writes "[covfield:<level>] message" to stderr when enabled.
void log_message(LogLevel level, std::string_view message);

}  // namespace covfield
