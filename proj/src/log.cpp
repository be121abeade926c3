#include "covfield/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace covfield {

namespace {

LogLevel parse_env() {
  const char* raw = std::getenv("COVFIELD_LOG");
  if (raw == nullptr) return LogLevel::Warn;
  const std::string v(raw);
  if (v == "quiet" || v == "0") return LogLevel::Quiet;
  if (v == "info" || v == "2") return LogLevel::Info;
  if (v == "debug" || v == "3") return LogLevel::Debug;
  return LogLevel::Warn;
}

std::atomic<int>& level_slot() {
  static std::atomic<int> level{static_cast<int>(parse_env())};
  return level;
}

std::string_view name(LogLevel level) {
  switch (level) {
    case LogLevel::Quiet: return "quiet";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "?";
}

}  // namespace

LogLevel log_level() { return static_cast<LogLevel>(level_slot().load()); }

void set_log_level(LogLevel level) { level_slot().store(static_cast<int>(level)); }

bool log_enabled(LogLevel level) {
  return level != LogLevel::Quiet && static_cast<int>(level) <= level_slot().load();
}

void log_message(LogLevel level, std::string_view message) {
  if (!log_enabled(level)) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << "[covfield:" << name(level) << "] " << message << '\n';
}

}  // namespace covfield
