#include "avb/cli/logging.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace avb::cli {

namespace {

std::atomic<int> &current() {
  static std::atomic<int> level = [] {
    const char *env = std::getenv("AVB_LOG");
    return static_cast<int>(env ? parse_log_level(env) : LogLevel::warn);
  }();
  return level;
}

std::mutex &sink() {
  static std::mutex m;
  return m;
}

constexpr const char *kNames[] = {"error", "warn", "info", "debug"};

} // namespace

LogLevel parse_log_level(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (int i = 0; i < 4; ++i)
    if (lower == kNames[i])
      return static_cast<LogLevel>(i);
  return LogLevel::warn;
}

LogLevel log_level() { return static_cast<LogLevel>(current().load()); }

void set_log_level(LogLevel level) { current().store(static_cast<int>(level)); }

void log(LogLevel level, const std::string &message) {
  if (static_cast<int>(level) > current().load())
    return;
  std::lock_guard lock(sink());
  std::cerr << "[avb " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

} // namespace avb::cli
