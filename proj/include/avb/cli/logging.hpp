#pragma once

#include <string>
#include <string_view>

namespace avb::cli {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

/// Parses "error" | "warn" | "info" | "debug" (case-insensitive); unknown → warn.
[[nodiscard]] LogLevel parse_log_level(std::string_view text);

/// Level from AVB_LOG, read once.
[[nodiscard]] LogLevel log_level();
void set_log_level(LogLevel level);

/// Thread-safe line to stderr when level ≤ current level.
void log(LogLevel level, const std::string &message);

} // namespace avb::cli
