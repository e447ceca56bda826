#pragma once

#include <iostream>
#include <string>

namespace wsm {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Level comes from WSM_LOG={error,info,debug}; default info.
LogLevel log_level();

inline void log_error(const std::string& msg) {
  std::cerr << "[error] " << msg << "\n";
}

inline void log_warn(const std::string& msg) {
  std::cerr << "[warn] " << msg << "\n";
}

inline void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << "[info] " << msg << "\n";
}

inline void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) std::cerr << "[debug] " << msg << "\n";
}

}  // namespace wsm
