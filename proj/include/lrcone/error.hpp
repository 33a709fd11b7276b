#pragma once

#include <stdexcept>
#include <string>

namespace lrcone {

enum class ErrorCategory { config, numeric, io, verification };

inline const char *category_name(ErrorCategory c)
{
  switch (c) {
  case ErrorCategory::config: return "config";
  case ErrorCategory::numeric: return "numeric";
  case ErrorCategory::io: return "io";
  case ErrorCategory::verification: return "verification";
  }
  return "unknown";
}

inline int exit_code(ErrorCategory c)
{
  switch (c) {
  case ErrorCategory::config: return 2;
  case ErrorCategory::numeric: return 3;
  case ErrorCategory::io: return 4;
  case ErrorCategory::verification: return 1;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string &msg)
      : std::runtime_error(msg), category_(category)
  {
  }
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void config_error(const std::string &msg) { throw Error(ErrorCategory::config, msg); }
[[noreturn]] inline void numeric_error(const std::string &msg) { throw Error(ErrorCategory::numeric, msg); }
[[noreturn]] inline void io_error(const std::string &msg) { throw Error(ErrorCategory::io, msg); }

} // namespace lrcone
