// Apache License, Version 2.0, refer to LICENSE

#include "cviat/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace cviat {

namespace {
std::atomic<int> g_log_level{static_cast<int>(LogLevel::kWarn)};
std::mutex g_log_mutex;

void emit(std::string_view tag, std::string_view message) {
  std::lock_guard lock(g_log_mutex);
  std::cerr << tag << message << '\n';
}
}  // namespace

void set_log_level(LogLevel level) { g_log_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_log_level.load()); }

void log_warn(std::string_view message) {
  if (g_log_level.load() >= static_cast<int>(LogLevel::kWarn)) emit("warning: ", message);
}

void log_info(std::string_view message) {
  if (g_log_level.load() >= static_cast<int>(LogLevel::kInfo)) emit("", message);
}

}  // namespace cviat
