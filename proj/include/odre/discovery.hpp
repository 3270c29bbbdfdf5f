#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "odre/config.hpp"
#include "odre/process.hpp"
#include "odre/provenance.hpp"

namespace odre {

enum class DiscoveryMethod { list_tests, none };

struct TestFileInventory {
  std::filesystem::path project_path;
  std::vector<std::filesystem::path> files;  // absolute, sorted, unique
  DiscoveryMethod discovery_method = DiscoveryMethod::none;
  std::vector<std::filesystem::path> excluded_generated;
  std::vector<std::filesystem::path> outside_project;  // kept in files, flagged here
  std::vector<std::string> warnings;
};

inline bool is_under(const std::filesystem::path& path, const std::filesystem::path& root) {
  auto rel = path.lexically_relative(root);
  return !rel.empty() && *rel.begin() != "..";
}

/// Interprets the stdout of `jest --listTests`. Lines that do not name an
/// existing regular file are ignored so banners and log noise are tolerated.
inline TestFileInventory parse_list_tests_output(const std::filesystem::path& project_path, std::string_view output) {
  namespace fs = std::filesystem;
  TestFileInventory inventory;
  inventory.project_path = project_path;
  std::vector<fs::path> found;
  std::size_t start = 0;
  while (start <= output.size()) {
    auto end = output.find('\n', start);
    if (end == std::string_view::npos) end = output.size();
    std::string line(output.substr(start, end - start));
    start = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty()) continue;
    fs::path candidate(line);
    if (candidate.is_relative()) candidate = project_path / candidate;
    std::error_code ec;
    if (!fs::is_regular_file(candidate, ec)) continue;
    fs::path resolved = fs::weakly_canonical(candidate, ec);
    if (ec) resolved = candidate.lexically_normal();
    found.push_back(resolved);
  }
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());

  for (auto& file : found) {
    if (is_generated_file(file)) {
      inventory.excluded_generated.push_back(file);
      continue;
    }
    if (!is_under(file, project_path)) inventory.outside_project.push_back(file);
    inventory.files.push_back(file);
  }
  inventory.discovery_method = inventory.files.empty() ? DiscoveryMethod::none : DiscoveryMethod::list_tests;
  if (inventory.files.empty()) {
    inventory.warnings.push_back("Jest reported no test files; the campaign has nothing to reorder");
  }
  for (const auto& file : inventory.outside_project) {
    inventory.warnings.push_back(fmt::format("{} resolves outside the project directory", file.string()));
  }
  return inventory;
}

/// Asks the project's Jest for the files it would run.
inline TestFileInventory list_test_files(const Config& config) {
  if (config.jest_invocation.empty()) throw EnvironmentError("Jest invocation has not been resolved");
  auto argv = config.jest_invocation;
  argv.push_back("--listTests");
  auto captured = run_capture(argv, config.project_path, config.per_run_timeout, {{"CI", "true"}});
  if (captured.result.spawn_failed) {
    throw DiscoveryError(fmt::format("could not start Jest: {}", captured.result.spawn_error), captured.err);
  }
  if (!captured.result.succeeded()) {
    throw DiscoveryError(fmt::format("'jest --listTests' failed (exit {}{})", captured.result.exit_code,
                                     captured.result.timed_out ? ", timed out" : ""),
                         captured.err);
  }
  return parse_list_tests_output(config.project_path, captured.out);
}

}  // namespace odre
