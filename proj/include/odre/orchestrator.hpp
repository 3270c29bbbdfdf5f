#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "odre/common.hpp"
#include "odre/config.hpp"
#include "odre/environment.hpp"
#include "odre/permutation.hpp"
#include "odre/process.hpp"
#include "odre/rewriter.hpp"
#include "odre/suite_model.hpp"

namespace odre {

inline constexpr std::string_view kTestResultsDir = "_extracted results_";
inline constexpr std::string_view kDescribeResultsDir = "_extracted results describes_";
inline constexpr std::string_view kSuiteResultsDir = "_extracted results test files_";
inline constexpr std::string_view kOutputPrefix = "testOutput";
inline constexpr std::string_view kOrderFileEnv = "ODRE_ORDER_FILE";
inline constexpr std::string_view kSuiteTargetId = "<project>";

inline std::string_view results_dir_name(Level level) {
  switch (level) {
    case Level::test: return kTestResultsDir;
    case Level::describe: return kDescribeResultsDir;
    case Level::suite: return kSuiteResultsDir;
  }
  return kTestResultsDir;
}

/// "Foo" for Foo.test.js, "Foo3" for the generated Foo3.test.js.
inline std::string suite_name(const std::filesystem::path& file) {
  return split_test_file_name(file.filename().string()).stem;
}

/// Project-layout result file name: testOutput<suite><rerun> for test and
/// describe level, testOutput<reorder><rerun> for suite level.
inline std::string layout_file_name(Level level, const std::filesystem::path& executed_file, std::size_t reorder_index,
                                    std::size_t rerun_index) {
  if (level == Level::suite) return fmt::format("{}{}{}", kOutputPrefix, reorder_index, rerun_index);
  return fmt::format("{}{}{}", kOutputPrefix, suite_name(executed_file), rerun_index);
}

enum class Outcome { pass, fail, skip, todo, timeout, missing };

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::pass: return "PASS";
    case Outcome::fail: return "FAIL";
    case Outcome::skip: return "SKIP";
    case Outcome::todo: return "TODO";
    case Outcome::timeout: return "TIMEOUT";
    case Outcome::missing: return "MISSING";
  }
  return "MISSING";
}

inline Outcome outcome_from_jest_status(std::string_view status) {
  if (status == "passed") return Outcome::pass;
  if (status == "failed") return Outcome::fail;
  if (status == "pending" || status == "skipped" || status == "disabled") return Outcome::skip;
  if (status == "todo") return Outcome::todo;
  return Outcome::fail;
}

/// A logical test, independent of the order or artifact it ran in.
struct TestIdentity {
  std::string file;  // project-relative path of the original test file
  std::vector<std::string> describe_path;
  std::string test_name;
  Modifier modifier = Modifier::none;

  auto key() const { return std::tie(file, describe_path, test_name); }
  friend bool operator<(const TestIdentity& a, const TestIdentity& b) { return a.key() < b.key(); }
  friend bool operator==(const TestIdentity& a, const TestIdentity& b) { return a.key() == b.key(); }

  std::string display() const {
    std::string out = file + " › ";
    for (const auto& d : describe_path) out += d + " › ";
    return out + test_name;
  }
};

/// Tests the model guarantees Jest will report: literal titles under literal
/// describe paths, excluding `.each` families whose titles Jest formats. A
/// repeated title gets a " [#k]" suffix by occurrence.
inline std::vector<TestIdentity> expected_identities(const TestSuiteModel& model, const std::string& file_id) {
  std::vector<TestIdentity> out;
  std::map<std::pair<std::vector<std::string>, std::string>, int> seen;
  std::function<void(const std::vector<Child>&, std::vector<std::string>&, bool)> walk =
      [&](const std::vector<Child>& children, std::vector<std::string>& path, bool under_each) {
        for (const auto& child : children) {
          const auto* node = std::get_if<TestNode>(&child);
          if (!node || !node->name) continue;
          if (node->kind == NodeKind::describe) {
            path.push_back(*node->name);
            walk(node->children, path, under_each || node->modifier == Modifier::each);
            path.pop_back();
          } else if (!under_each && node->modifier != Modifier::each) {
            int n = ++seen[{path, *node->name}];
            std::string name = n == 1 ? *node->name : fmt::format("{} [#{}]", *node->name, n);
            out.push_back({file_id, path, std::move(name), node->modifier});
          }
        }
      };
  std::vector<std::string> path;
  walk(model.body, path, false);
  return out;
}

struct RunSpec {
  Level level = Level::test;
  std::size_t reorder_index = 0;  // 0 = identity baseline
  std::size_t rerun_index = 1;
  std::string target_id;
  std::filesystem::path executed_file;   // test/describe level: artifact, or the original at reorder 0
  std::vector<std::filesystem::path> files;  // suite level: inventory in manifest order
  std::filesystem::path order_manifest;  // suite level
  std::filesystem::path output_path;     // Jest JSON, campaign mirror
  std::filesystem::path layout_path;     // copy in the project's results directory
  std::filesystem::path log_stem;
};

struct RunRecord {
  RunSpec run_spec;
  int exit_status = -1;
  bool timed_out = false;
  bool valid = false;
  int attempts = 0;
  std::chrono::milliseconds wall_time{0};
  std::chrono::system_clock::time_point started_at;
  std::chrono::system_clock::time_point finished_at;
  std::map<TestIdentity, Outcome> outcomes;
  std::filesystem::path raw_json_path;
  std::string note;
};

struct CampaignPaths {
  std::filesystem::path project;
  std::filesystem::path campaign_dir;  // <project>/.odre/<campaign id>
  std::string campaign_id;

  std::filesystem::path mirror_dir(Level level) const { return campaign_dir / "results" / results_dir_name(level); }
  std::filesystem::path layout_dir(Level level) const { return project / results_dir_name(level); }
  std::filesystem::path logs_dir() const { return campaign_dir / "logs"; }
  std::filesystem::path orders_dir() const { return campaign_dir / "orders"; }
};

inline std::string sanitize_id(std::string_view id) {
  std::string out;
  for (char c : id) out += (c == '/' || c == '\\' || c == ' ' || c == ':') ? '_' : c;
  return out;
}

/// JSON manifest read by the suite-level sequencer through ODRE_ORDER_FILE.
inline nlohmann::json order_manifest_json(const std::string& campaign_id,
                                          const std::vector<std::filesystem::path>& ordered_paths) {
  nlohmann::json paths = nlohmann::json::array();
  for (const auto& p : ordered_paths) paths.push_back(p.string());
  return {{"campaign_id", campaign_id}, {"ordered_paths", paths}};
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
}

/// Expands a plan into run specs: (order sets + 1 baseline) x reruns per target.
/// Suite-level order manifests are written to the campaign directory here.
inline std::vector<RunSpec> build_run_specs(const PermutationPlan& plan,
                                            const std::vector<ReorderedArtifact>& artifacts,
                                            const std::vector<std::filesystem::path>& inventory_files,
                                            const Config& config, const CampaignPaths& paths) {
  std::vector<RunSpec> specs;
  auto add_reruns = [&](RunSpec base, const std::string& mirror_stem) {
    for (std::size_t rerun = 1; rerun <= config.rerun_count; ++rerun) {
      RunSpec spec = base;
      spec.rerun_index = rerun;
      spec.output_path = paths.mirror_dir(plan.level) /
                         fmt::format("{}{}_{}_{}.json", kOutputPrefix, mirror_stem, spec.reorder_index, rerun);
      spec.layout_path = paths.layout_dir(plan.level) /
                         layout_file_name(plan.level, spec.executed_file, spec.reorder_index, rerun);
      spec.log_stem = paths.logs_dir() / fmt::format("{}_{}_{}", mirror_stem.empty() ? "suite" : mirror_stem,
                                                     spec.reorder_index, rerun);
      specs.push_back(std::move(spec));
    }
  };

  if (plan.level == Level::suite) {
    for (const auto& target : plan.targets) {
      std::vector<OrderSet> sets{OrderSet{0, {}}};
      sets.insert(sets.end(), target.order_sets.begin(), target.order_sets.end());
      for (const auto& set : sets) {
        RunSpec base;
        base.level = Level::suite;
        base.reorder_index = set.reorder_index;
        base.target_id = target.target_id;
        const Permutation perm =
            set.orders.empty() ? identity_permutation(inventory_files.size()) : set.orders.front().permutation;
        for (auto index : perm) base.files.push_back(inventory_files.at(index));
        base.order_manifest = paths.orders_dir() / fmt::format("order-{}.json", set.reorder_index);
        write_text_file(base.order_manifest, order_manifest_json(paths.campaign_id, base.files).dump(2));
        add_reruns(base, "");
      }
    }
    return specs;
  }

  for (const auto& target : plan.targets) {
    std::string stem = split_test_file_name(sanitize_id(target.target_id)).stem;
    RunSpec base;
    base.level = plan.level;
    base.target_id = target.target_id;
    base.reorder_index = 0;
    base.executed_file = target.source;
    add_reruns(base, stem);
    for (const auto& set : target.order_sets) {
      auto found = std::find_if(artifacts.begin(), artifacts.end(), [&](const ReorderedArtifact& a) {
        return a.source_file == target.source && a.reorder_index == set.reorder_index;
      });
      if (found == artifacts.end()) {
        throw Error(fmt::format("no artifact for {} order {}", target.target_id, set.reorder_index));
      }
      RunSpec spec = base;
      spec.reorder_index = set.reorder_index;
      spec.executed_file = found->output_path;
      add_reruns(spec, stem);
    }
  }
  return specs;
}

/// Maps Jest's JSON report onto test identities. Returns nullopt when the
/// document is not a Jest result.
inline std::optional<std::map<TestIdentity, Outcome>> parse_jest_results(
    const std::string& json_text, const RunSpec& spec, const std::filesystem::path& project_root,
    const std::map<std::string, std::vector<TestIdentity>>& expected) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (!doc.is_object() || !doc.contains("testResults") || !doc["testResults"].is_array()) return std::nullopt;

  std::map<TestIdentity, Outcome> outcomes;
  for (const auto& result : doc["testResults"]) {
    std::string reported = result.value("name", std::string{});
    std::string file_id;
    if (spec.level == Level::suite) {
      std::error_code ec;
      auto canonical = std::filesystem::weakly_canonical(reported, ec);
      file_id = relative_id(ec ? std::filesystem::path(reported) : canonical, project_root);
    } else {
      file_id = spec.target_id;
    }
    std::map<TestIdentity, Modifier> modifiers;
    if (auto it = expected.find(file_id); it != expected.end()) {
      for (const auto& id : it->second) modifiers[id] = id.modifier;
    }
    std::map<std::pair<std::vector<std::string>, std::string>, int> seen;
    if (!result.contains("assertionResults") || !result["assertionResults"].is_array()) continue;
    for (const auto& assertion : result["assertionResults"]) {
      TestIdentity id;
      id.file = file_id;
      if (assertion.contains("ancestorTitles") && assertion["ancestorTitles"].is_array()) {
        for (const auto& t : assertion["ancestorTitles"]) id.describe_path.push_back(t.get<std::string>());
      }
      std::string title = assertion.value("title", std::string{});
      int n = ++seen[{id.describe_path, title}];
      id.test_name = n == 1 ? title : fmt::format("{} [#{}]", title, n);
      if (auto m = modifiers.find(id); m != modifiers.end()) id.modifier = m->second;
      outcomes[id] = outcome_from_jest_status(assertion.value("status", std::string{"failed"}));
    }
  }
  return outcomes;
}

/// Builds the Jest command line for one run.
inline std::vector<std::string> jest_command(const RunSpec& spec, const Config& config,
                                             const EnvironmentReport& env) {
  std::vector<std::string> argv = config.jest_invocation;
  argv.push_back("--json");
  argv.push_back("--outputFile=" + spec.output_path.string());
  argv.push_back("--runInBand");
  argv.push_back("--ci");
  if (spec.level == Level::suite) {
    if (!config.sequencer_path) throw EnvironmentError("suite level needs a test sequencer (--sequencer)");
    argv.push_back("--testSequencer=" + config.sequencer_path->string());
  }
  std::vector<std::filesystem::path> targets =
      spec.level == Level::suite ? spec.files : std::vector<std::filesystem::path>{spec.executed_file};
  if (env.jest_at_least(kRunTestsByPathJest)) {
    argv.push_back("--runTestsByPath");
    for (const auto& t : targets) argv.push_back(t.string());
  } else {
    static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
    for (const auto& t : targets) argv.push_back(std::regex_replace(t.string(), special, R"(\$&)") + "$");
  }
  return argv;
}

/// Runs Jest once for `spec`. A missing or unreadable JSON report is retried
/// once; a timeout is an outcome, not an invalid run.
inline RunRecord run_one(const RunSpec& spec, const Config& config, const EnvironmentReport& env,
                         const std::map<std::string, std::vector<TestIdentity>>& expected) {
  namespace fs = std::filesystem;
  RunRecord record;
  record.run_spec = spec;
  record.raw_json_path = spec.output_path;
  record.started_at = std::chrono::system_clock::now();
  fs::create_directories(spec.output_path.parent_path());
  fs::create_directories(spec.log_stem.parent_path());

  ProcessOptions options;
  options.argv = jest_command(spec, config, env);
  options.cwd = config.project_path;
  options.timeout = std::chrono::duration_cast<std::chrono::milliseconds>(config.per_run_timeout);
  options.stdout_path = spec.log_stem.string() + ".out";
  options.stderr_path = spec.log_stem.string() + ".err";
  options.extra_env.emplace_back("CI", "true");
  if (spec.level == Level::suite) options.extra_env.emplace_back(std::string(kOrderFileEnv), spec.order_manifest.string());

  for (int attempt = 1; attempt <= 2; ++attempt) {
    record.attempts = attempt;
    std::error_code ec;
    fs::remove(spec.output_path, ec);
    auto result = run_process(options);
    record.exit_status = result.exit_code;
    record.wall_time = result.wall;
    if (result.spawn_failed) {
      record.note = result.spawn_error;
      continue;
    }
    if (result.timed_out) {
      record.timed_out = true;
      record.valid = true;
      record.note = fmt::format("killed after {}s", config.per_run_timeout.count());
      break;
    }
    if (!fs::exists(spec.output_path, ec)) {
      record.note = "Jest wrote no JSON report";
      continue;
    }
    auto parsed = parse_jest_results(read_file(spec.output_path), spec, config.project_path, expected);
    if (!parsed) {
      record.note = "Jest JSON report is corrupt";
      continue;
    }
    record.outcomes = std::move(*parsed);
    record.valid = true;
    record.note.clear();
    break;
  }
  record.finished_at = std::chrono::system_clock::now();
  return record;
}

struct CampaignRun {
  std::vector<RunRecord> records;
  std::vector<std::string> layout_collisions;
  bool unreliable = false;
};

/// Executes every spec, serially unless config.jobs > 1, and copies each JSON
/// report into the project's results directory under its layout name.
inline CampaignRun run_campaign(const std::vector<RunSpec>& specs, const Config& config,
                                const EnvironmentReport& env,
                                const std::map<std::string, std::vector<TestIdentity>>& expected,
                                const std::function<void(const RunRecord&, std::size_t, std::size_t)>& on_done = {}) {
  namespace fs = std::filesystem;
  CampaignRun run;
  run.records.resize(specs.size());
  std::mutex mutex;
  std::size_t completed = 0;
  std::set<fs::path> layout_written;

  auto finish = [&](std::size_t index, RunRecord record) {
    std::lock_guard lock(mutex);
    const auto& spec = record.run_spec;
    std::error_code ec;
    if (fs::exists(spec.output_path, ec)) {
      fs::create_directories(spec.layout_path.parent_path(), ec);
      if (!layout_written.insert(spec.layout_path).second) {
        run.layout_collisions.push_back(
            fmt::format("{} (reorder {}, rerun {})", spec.layout_path.string(), spec.reorder_index, spec.rerun_index));
      }
      fs::copy_file(spec.output_path, spec.layout_path, fs::copy_options::overwrite_existing, ec);
      if (ec) log::warn("cannot copy {} to {}: {}", spec.output_path.string(), spec.layout_path.string(), ec.message());
    }
    run.records[index] = std::move(record);
    ++completed;
    if (on_done) on_done(run.records[index], completed, specs.size());
  };

  unsigned jobs = std::max(1u, config.jobs);
  if (jobs == 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) finish(i, run_one(specs[i], config, env, expected));
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) finish(i, run_one(specs[i], config, env, expected));
      });
    }
  }

  std::size_t invalid = std::count_if(run.records.begin(), run.records.end(), [](const RunRecord& r) { return !r.valid; });
  run.unreliable = !run.records.empty() && invalid * 2 > run.records.size();
  return run;
}

inline void to_json(nlohmann::json& j, const RunSpec& s) {
  j = nlohmann::json{{"level", to_string(s.level)},
                     {"target", s.target_id},
                     {"reorder", s.reorder_index},
                     {"rerun", s.rerun_index},
                     {"output_json", s.output_path.string()},
                     {"layout_path", s.layout_path.string()}};
  if (s.level == Level::suite) {
    j["order_manifest"] = s.order_manifest.string();
  } else {
    j["executed_file"] = s.executed_file.string();
  }
}

}  // namespace odre
