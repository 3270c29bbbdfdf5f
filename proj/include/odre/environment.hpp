#pragma once

#include <cctype>
#include <compare>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "odre/config.hpp"
#include "odre/process.hpp"

namespace odre {

struct SemVer {
  int major = 0;
  int minor = 0;
  int patch = 0;

  friend auto operator<=>(const SemVer&, const SemVer&) = default;

  std::string to_string() const { return fmt::format("{}.{}.{}", major, minor, patch); }

  /// Accepts "27.5.1", "v18.16.1", "29.0.0-beta.3" and surrounding whitespace.
  static std::optional<SemVer> parse(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    if (!text.empty() && (text.front() == 'v' || text.front() == 'V')) text.remove_prefix(1);
    SemVer v;
    int* parts[3] = {&v.major, &v.minor, &v.patch};
    std::size_t i = 0;
    for (int k = 0; k < 3; ++k) {
      std::size_t start = i;
      int value = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        value = value * 10 + (text[i] - '0');
        ++i;
      }
      if (i == start) return k == 0 ? std::nullopt : std::optional<SemVer>(v);
      *parts[k] = value;
      if (k < 2) {
        if (i >= text.size() || text[i] != '.') return v;
        ++i;
      }
    }
    return v;
  }
};

inline constexpr SemVer kMinimumJest{20, 0, 0};      // first release with --listTests
inline constexpr SemVer kRunTestsByPathJest{21, 0, 0};
inline constexpr SemVer kSequencerJest{24, 0, 0};    // --testSequencer
inline constexpr SemVer kValidatedJest{27, 0, 0};
inline constexpr SemVer kValidatedNode{18, 16, 1};

struct EnvironmentReport {
  std::optional<SemVer> jest_version;
  std::optional<SemVer> node_version;
  bool supported = false;
  std::vector<std::string> diagnostics;
  std::vector<std::string> jest_invocation;
  std::string resolution;  // how the invocation was found

  bool jest_at_least(SemVer v) const { return jest_version && *jest_version >= v; }
};

inline void to_json(nlohmann::json& j, const EnvironmentReport& r) {
  j = nlohmann::json{
      {"jest_version", r.jest_version ? nlohmann::json(r.jest_version->to_string()) : nlohmann::json(nullptr)},
      {"node_version", r.node_version ? nlohmann::json(r.node_version->to_string()) : nlohmann::json(nullptr)},
      {"supported", r.supported},
      {"diagnostics", r.diagnostics},
      {"jest_invocation", r.jest_invocation},
      {"resolution", r.resolution},
  };
}

namespace detail {

inline std::optional<SemVer> version_from_package(const std::filesystem::path& package_json) {
  std::error_code ec;
  if (!std::filesystem::exists(package_json, ec)) return std::nullopt;
  try {
    auto doc = nlohmann::json::parse(read_file(package_json));
    if (doc.contains("version") && doc["version"].is_string()) {
      return SemVer::parse(doc["version"].get<std::string>());
    }
  } catch (const nlohmann::json::exception&) {
  }
  return std::nullopt;
}

inline std::optional<SemVer> version_from_command(std::vector<std::string> argv, const std::filesystem::path& cwd) {
  argv.push_back("--version");
  auto captured = run_capture(std::move(argv), cwd, std::chrono::seconds(60));
  if (!captured.result.succeeded()) return std::nullopt;
  // Some wrappers print banners first; take the last line that parses.
  std::optional<SemVer> found;
  std::size_t start = 0;
  while (start < captured.out.size()) {
    auto end = captured.out.find('\n', start);
    if (end == std::string::npos) end = captured.out.size();
    if (auto v = SemVer::parse(std::string_view(captured.out).substr(start, end - start))) found = v;
    start = end + 1;
  }
  return found;
}

}  // namespace detail

/// Resolves the Jest command for the project and reports its version.
///
/// Resolution order: an explicit --jest-cmd, then node_modules/.bin/jest in the
/// project or any ancestor directory (hoisted workspaces). Throws
/// EnvironmentError naming each attempted step when nothing resolves.
inline EnvironmentReport check_environment(const Config& config) {
  namespace fs = std::filesystem;
  EnvironmentReport report;
  std::vector<std::string> attempts;

  if (!config.jest_invocation.empty()) {
    report.jest_invocation = config.jest_invocation;
    report.resolution = "--jest-cmd";
    report.jest_version = detail::version_from_command(config.jest_invocation, config.project_path);
    if (!report.jest_version) {
      throw EnvironmentError(fmt::format("'{} --version' did not report a Jest version (tried: --jest-cmd)",
                                         fmt::join(config.jest_invocation, " ")));
    }
  } else {
    attempts.push_back("--jest-cmd (not given)");
    for (fs::path dir = config.project_path;; dir = dir.parent_path()) {
      fs::path bin = dir / "node_modules" / ".bin" / "jest";
      std::error_code ec;
      if (fs::exists(bin, ec)) {
        report.jest_invocation = {bin.string()};
        report.resolution = bin.string();
        report.jest_version = detail::version_from_package(dir / "node_modules" / "jest" / "package.json");
        if (!report.jest_version) report.jest_version = detail::version_from_command(report.jest_invocation, dir);
        break;
      }
      attempts.push_back(bin.string() + " (not found)");
      if (dir == dir.parent_path()) break;
    }
    if (report.jest_invocation.empty()) {
      throw EnvironmentError(
          fmt::format("Jest is not resolvable for {}; attempted: {}. Install Jest in the project or pass --jest-cmd",
                      config.project_path.string(), fmt::join(attempts, "; ")));
    }
    if (!report.jest_version) {
      throw EnvironmentError(fmt::format("found {} but could not determine its version", report.resolution));
    }
  }

  report.node_version = detail::version_from_command({"node"}, config.project_path);
  report.supported = *report.jest_version >= kMinimumJest;
  if (!report.supported) {
    report.diagnostics.push_back(fmt::format(
        "Jest {} is older than {}: it has no --listTests option, which test discovery depends on",
        report.jest_version->to_string(), kMinimumJest.to_string()));
  } else if (*report.jest_version < kValidatedJest) {
    report.diagnostics.push_back(fmt::format("warning: Jest {} is below the validated baseline (Jest {}+)",
                                             report.jest_version->to_string(), kValidatedJest.major));
  }
  if (!report.node_version) {
    report.diagnostics.push_back("warning: 'node --version' failed; Node.js may be missing from PATH");
  } else if (report.node_version->major != kValidatedNode.major) {
    report.diagnostics.push_back(fmt::format("warning: Node.js {} differs from the validated baseline (Node.js {})",
                                             report.node_version->to_string(), kValidatedNode.to_string()));
  }
  if (config.level == Level::suite && report.supported && *report.jest_version < kSequencerJest) {
    report.diagnostics.push_back(fmt::format("Jest {} has no --testSequencer option; suite level needs Jest {}+",
                                             report.jest_version->to_string(), kSequencerJest.to_string()));
  }
  return report;
}

}  // namespace odre
