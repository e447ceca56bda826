#include "wsm/log.hpp"

#include <cstdlib>
#include <cstring>

namespace wsm {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("WSM_LOG");
    if (env == nullptr) return LogLevel::kInfo;
    if (std::strcmp(env, "error") == 0) return LogLevel::kError;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

}  // namespace wsm
