// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <string_view>

namespace cviat {

enum class LogLevel { kQuiet = 0, kWarn = 1, kInfo = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();

// Diagnostics go to standard error.
void log_warn(std::string_view message);
void log_info(std::string_view message);

}  // namespace cviat
