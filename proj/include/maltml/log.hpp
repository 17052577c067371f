#pragma once

#include <cstdarg>

namespace maltml {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// Controlled by the MALTML_LOG environment variable: "quiet", "info" (default)
// or "debug". Messages go to stderr so CSV output on stdout stays clean.
LogLevel log_level();

void log_info(const char* fmt, ...);
void log_debug(const char* fmt, ...);

}  // namespace maltml
