#include "maltml/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace maltml {

LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("MALTML_LOG");
    if (env == nullptr) return LogLevel::Info;
    if (std::strcmp(env, "quiet") == 0 || std::strcmp(env, "0") == 0) return LogLevel::Quiet;
    if (std::strcmp(env, "debug") == 0 || std::strcmp(env, "2") == 0) return LogLevel::Debug;
    return LogLevel::Info;
  }();
  return level;
}

static void vlog(const char* tag, const char* fmt, va_list args) {
  std::fprintf(stderr, "[maltml %s] ", tag);
  std::vfprintf(stderr, fmt, args);
  std::fputc('\n', stderr);
}

void log_info(const char* fmt, ...) {
  if (log_level() < LogLevel::Info) return;
  va_list args;
  va_start(args, fmt);
  vlog("info", fmt, args);
  va_end(args);
}

void log_debug(const char* fmt, ...) {
  if (log_level() < LogLevel::Debug) return;
  va_list args;
  va_start(args, fmt);
  vlog("debug", fmt, args);
  va_end(args);
}

}  // namespace maltml
