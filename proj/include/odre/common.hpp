#pragma once

#include <cstddef>
#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace odre {

/// Base class of every error the detector raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad command line. Maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Jest missing, too old, or otherwise unusable. Maps to exit code 2.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

class DiscoveryError : public Error {
 public:
  DiscoveryError(const std::string& what, std::string stderr_text)
      : Error(what), stderr_text_(std::move(stderr_text)) {}
  const std::string& stderr_text() const noexcept { return stderr_text_; }

 private:
  std::string stderr_text_;
};

/// Source text that the structural parser cannot make sense of.
class ExtractionError : public Error {
 public:
  ExtractionError(std::string file, std::size_t line, std::size_t column, const std::string& message)
      : Error(fmt::format("{}:{}:{}: {}", file.empty() ? "<input>" : file, line, column, message)),
        file_(std::move(file)),
        line_(line),
        column_(column) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::string file_;
  std::size_t line_;
  std::size_t column_;
};

/// Artifact generation refused or an internal rewrite invariant broke.
class RewriteError : public Error {
 public:
  using Error::Error;
};

/// Two run records claim the same matrix cell.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

enum class Level { test, describe, suite };

inline std::string_view to_string(Level level) {
  switch (level) {
    case Level::test: return "test";
    case Level::describe: return "describe";
    case Level::suite: return "suite";
  }
  return "test";
}

inline std::optional<Level> parse_level(std::string_view text) {
  if (text == "test") return Level::test;
  if (text == "describe") return Level::describe;
  if (text == "suite") return Level::suite;
  return std::nullopt;
}

namespace log {

inline bool& quiet() {
  static bool value = false;
  return value;
}

template <typename... Args>
void info(fmt::format_string<Args...> format, Args&&... args) {
  if (quiet()) return;
  std::cerr << "odre: " << fmt::format(format, std::forward<Args>(args)...) << '\n';
}

template <typename... Args>
void warn(fmt::format_string<Args...> format, Args&&... args) {
  if (quiet()) return;
  std::cerr << "odre: warning: " << fmt::format(format, std::forward<Args>(args)...) << '\n';
}

}  // namespace log
}  // namespace odre
