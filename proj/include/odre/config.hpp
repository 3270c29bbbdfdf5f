#pragma once

#include <array>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "odre/common.hpp"
#include "odre/process.hpp"

namespace odre {

inline constexpr std::uint32_t kDefaultReruns = 10;
inline constexpr std::uint32_t kDefaultReorders = 10;
inline constexpr std::chrono::seconds kDefaultRunTimeout{600};
inline constexpr double kDefaultInconclusiveThreshold = 0.2;

/// Immutable description of one detection campaign.
struct Config {
  std::filesystem::path project_path;
  std::uint32_t rerun_count = kDefaultReruns;
  std::uint32_t reorder_count = kDefaultReorders;
  Level level = Level::test;
  std::uint64_t seed = 0;
  bool seed_drawn = false;  // true when no --seed was given
  // Empty until check_environment resolves it, unless --jest-cmd was given.
  std::vector<std::string> jest_invocation;
  std::chrono::seconds per_run_timeout = kDefaultRunTimeout;
  bool keep_artifacts = false;
  bool fail_on_od = false;
  unsigned jobs = 1;
  double inconclusive_threshold = kDefaultInconclusiveThreshold;
  bool nested_describes = false;
  std::optional<std::filesystem::path> sequencer_path;
};

/// Thrown by parse_cli for --help; carries the rendered help text.
class HelpRequested : public Error {
 public:
  using Error::Error;
};

inline std::uint64_t draw_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

inline bool has_jest_configuration(const std::filesystem::path& dir) {
  static constexpr std::array<const char*, 7> names = {"package.json",   "jest.config.js",  "jest.config.ts",
                                                       "jest.config.mjs", "jest.config.cjs", "jest.config.json",
                                                       "jest.config.cts"};
  for (const char* name : names) {
    if (std::filesystem::exists(dir / name)) return true;
  }
  return false;
}

/// Parses the argument vector (without the program name) into a Config.
/// A missing --seed is drawn from entropy and flagged in `seed_drawn`.
inline Config parse_cli(const std::vector<std::string>& args) {
  CLI::App app{"Detect order-dependent tests in a Jest project", "odre"};
  Config config;

  std::string project_path;
  std::int64_t rerun = kDefaultReruns;
  std::int64_t reorder = kDefaultReorders;
  std::string level = "test";
  std::string seed_text;
  std::string jest_cmd;
  std::int64_t timeout_seconds = kDefaultRunTimeout.count();
  std::int64_t jobs = 1;
  std::string sequencer;

  app.add_option("--project_path", project_path, "Root directory of the target project")->required();
  app.add_option("--rerun", rerun, "Executions per order")->capture_default_str();
  app.add_option("--reorder", reorder, "Orders generated per container")->capture_default_str();
  app.add_option("--level", level, "Reordering level: test, describe or suite")->capture_default_str();
  app.add_option("--seed", seed_text, "Seed for permutation generation");
  app.add_option("--jest-cmd", jest_cmd, "Command used to launch Jest");
  app.add_option("--timeout", timeout_seconds, "Wall-clock limit per Jest run, in seconds")->capture_default_str();
  app.add_flag("--keep-artifacts", config.keep_artifacts, "Keep generated test files after the campaign");
  app.add_flag("--fail-on-od", config.fail_on_od, "Exit with 1 when order-dependent candidates are found");
  app.add_option("--jobs", jobs, "Concurrent Jest runs (default 1, serial)")->capture_default_str();
  app.add_option("--inconclusive-threshold", config.inconclusive_threshold,
                 "Fraction of invalid runs above which a test is inconclusive")
      ->capture_default_str();
  app.add_flag("--nested-describes", config.nested_describes,
               "At describe level, also reorder describe blocks nested inside describe blocks");
  app.add_option("--sequencer", sequencer, "Path to the Jest test sequencer used at suite level");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (rerun < 1) throw UsageError(fmt::format("--rerun must be a positive integer, got {}", rerun));
  if (reorder < 1) throw UsageError(fmt::format("--reorder must be a positive integer, got {}", reorder));
  if (timeout_seconds < 1) throw UsageError(fmt::format("--timeout must be positive, got {}", timeout_seconds));
  if (jobs < 1) throw UsageError(fmt::format("--jobs must be positive, got {}", jobs));
  if (config.inconclusive_threshold < 0.0 || config.inconclusive_threshold > 1.0) {
    throw UsageError("--inconclusive-threshold must lie in [0, 1]");
  }
  auto parsed_level = parse_level(level);
  if (!parsed_level) throw UsageError(fmt::format("--level must be test, describe or suite, got '{}'", level));

  std::error_code ec;
  std::filesystem::path root(project_path);
  if (!std::filesystem::is_directory(root, ec)) {
    throw UsageError(fmt::format("--project_path '{}' is not an existing directory", project_path));
  }
  root = std::filesystem::canonical(root);
  if (!has_jest_configuration(root)) {
    throw UsageError(fmt::format("'{}' has neither a package.json nor a jest.config file", root.string()));
  }

  config.project_path = root;
  config.rerun_count = static_cast<std::uint32_t>(rerun);
  config.reorder_count = static_cast<std::uint32_t>(reorder);
  config.level = *parsed_level;
  config.per_run_timeout = std::chrono::seconds(timeout_seconds);
  config.jobs = static_cast<unsigned>(jobs);
  if (!jest_cmd.empty()) config.jest_invocation = split_command(jest_cmd);
  if (!sequencer.empty()) config.sequencer_path = std::filesystem::absolute(sequencer);
  if (!seed_text.empty()) {
    auto [ptr, ec_seed] = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), config.seed);
    if (ec_seed != std::errc{} || ptr != seed_text.data() + seed_text.size()) {
      throw UsageError(fmt::format("--seed must be an unsigned 64-bit integer, got '{}'", seed_text));
    }
  } else {
    config.seed = draw_seed();
    config.seed_drawn = true;
  }
  return config;
}

}  // namespace odre
