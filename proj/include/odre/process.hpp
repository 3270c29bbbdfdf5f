#pragma once

// Minimal POSIX subprocess runner: fork/exec into a fresh process group so a
// timeout can kill the whole tree (Jest spawns workers even with --runInBand
// in some versions).

#include <fcntl.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "odre/common.hpp"

extern char** environ;

namespace odre {

struct ProcessOptions {
  std::vector<std::string> argv;
  std::filesystem::path cwd;
  std::vector<std::pair<std::string, std::string>> extra_env;
  std::optional<std::chrono::milliseconds> timeout;
  std::filesystem::path stdout_path;  // empty: /dev/null
  std::filesystem::path stderr_path;  // empty: /dev/null
};

struct ProcessResult {
  int exit_code = -1;
  int term_signal = 0;
  bool timed_out = false;
  bool spawn_failed = false;
  std::string spawn_error;
  std::chrono::milliseconds wall{0};

  bool succeeded() const { return !spawn_failed && !timed_out && term_signal == 0 && exit_code == 0; }
};

namespace detail {

inline std::vector<std::string> merged_environment(const std::vector<std::pair<std::string, std::string>>& extra) {
  std::vector<std::string> env;
  for (char** e = environ; e && *e; ++e) {
    std::string_view entry(*e);
    auto eq = entry.find('=');
    bool overridden = false;
    for (const auto& [key, value] : extra) {
      if (entry.substr(0, eq) == key) overridden = true;
    }
    if (!overridden) env.emplace_back(entry);
  }
  for (const auto& [key, value] : extra) env.push_back(key + "=" + value);
  return env;
}

inline int open_sink(const std::filesystem::path& path) {
  if (path.empty()) return ::open("/dev/null", O_WRONLY | O_CLOEXEC);
  return ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
}

}  // namespace detail

inline ProcessResult run_process(const ProcessOptions& options) {
  ProcessResult result;
  if (options.argv.empty()) {
    result.spawn_failed = true;
    result.spawn_error = "empty command";
    return result;
  }

  // Everything the child touches is prepared before fork.
  std::vector<std::string> env_strings = detail::merged_environment(options.extra_env);
  std::vector<char*> envp;
  for (auto& s : env_strings) envp.push_back(s.data());
  envp.push_back(nullptr);
  std::vector<std::string> argv_strings = options.argv;
  std::vector<char*> argv;
  for (auto& s : argv_strings) argv.push_back(s.data());
  argv.push_back(nullptr);

  int out_fd = detail::open_sink(options.stdout_path);
  int err_fd = detail::open_sink(options.stderr_path);
  int error_pipe[2];
  if (out_fd < 0 || err_fd < 0 || ::pipe2(error_pipe, O_CLOEXEC) != 0) {
    if (out_fd >= 0) ::close(out_fd);
    if (err_fd >= 0) ::close(err_fd);
    result.spawn_failed = true;
    result.spawn_error = std::strerror(errno);
    return result;
  }

  auto started = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(out_fd, STDOUT_FILENO);
    ::dup2(err_fd, STDERR_FILENO);
    int null_in = ::open("/dev/null", O_RDONLY);
    if (null_in >= 0) ::dup2(null_in, STDIN_FILENO);
    if (!options.cwd.empty() && ::chdir(options.cwd.c_str()) != 0) {
      int e = errno;
      (void)!::write(error_pipe[1], &e, sizeof e);
      ::_exit(127);
    }
    ::execvpe(argv[0], argv.data(), envp.data());
    int e = errno;
    (void)!::write(error_pipe[1], &e, sizeof e);
    ::_exit(127);
  }
  ::close(out_fd);
  ::close(err_fd);
  ::close(error_pipe[1]);
  if (pid < 0) {
    ::close(error_pipe[0]);
    result.spawn_failed = true;
    result.spawn_error = std::strerror(errno);
    return result;
  }
  ::setpgid(pid, pid);

  int child_errno = 0;
  if (::read(error_pipe[0], &child_errno, sizeof child_errno) == static_cast<ssize_t>(sizeof child_errno)) {
    result.spawn_failed = true;
    result.spawn_error = fmt::format("{}: {}", options.argv[0], std::strerror(child_errno));
  }
  ::close(error_pipe[0]);

  int status = 0;
  auto poll = std::chrono::milliseconds(1);
  while (true) {
    pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) break;
    auto elapsed = std::chrono::steady_clock::now() - started;
    if (options.timeout && elapsed >= *options.timeout) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(poll);
    poll = std::min(poll * 2, std::chrono::milliseconds(25));
  }
  // Reap anything left in the group (orphaned workers).
  if (!result.timed_out) ::kill(-pid, SIGKILL);

  result.wall = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  if (WIFSIGNALED(status)) result.term_signal = WTERMSIG(status);
  return result;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CapturedProcess {
  ProcessResult result;
  std::string out;
  std::string err;
};

/// Runs a short command and returns its output. Uses temporary files so
/// large outputs never block on a full pipe.
inline CapturedProcess run_capture(std::vector<std::string> argv, const std::filesystem::path& cwd,
                                   std::chrono::milliseconds timeout = std::chrono::minutes(2),
                                   std::vector<std::pair<std::string, std::string>> extra_env = {}) {
  namespace fs = std::filesystem;
  static std::atomic<unsigned> counter{0};
  auto base = fs::temp_directory_path() /
              fmt::format("odre-capture-{}-{}", static_cast<long>(::getpid()), counter.fetch_add(1));
  ProcessOptions options;
  options.argv = std::move(argv);
  options.cwd = cwd;
  options.extra_env = std::move(extra_env);
  options.timeout = timeout;
  options.stdout_path = base.string() + ".out";
  options.stderr_path = base.string() + ".err";
  CapturedProcess captured;
  captured.result = run_process(options);
  captured.out = read_file(options.stdout_path);
  captured.err = read_file(options.stderr_path);
  std::error_code ec;
  fs::remove(options.stdout_path, ec);
  fs::remove(options.stderr_path, ec);
  return captured;
}

/// Splits a command string on whitespace, honouring single and double quotes.
inline std::vector<std::string> split_command(std::string_view command) {
  std::vector<std::string> words;
  std::string current;
  bool in_word = false;
  char quote = 0;
  for (std::size_t i = 0; i < command.size(); ++i) {
    char c = command[i];
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else if (c == '\\' && quote == '"' && i + 1 < command.size()) {
        current += command[++i];
      } else {
        current += c;
      }
    } else if (c == '\'' || c == '"') {
      quote = c;
      in_word = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_word) words.push_back(std::move(current));
      current.clear();
      in_word = false;
    } else if (c == '\\' && i + 1 < command.size()) {
      current += command[++i];
      in_word = true;
    } else {
      current += c;
      in_word = true;
    }
  }
  if (quote) throw UsageError(fmt::format("unterminated quote in command: {}", command));
  if (in_word) words.push_back(std::move(current));
  return words;
}

}  // namespace odre
