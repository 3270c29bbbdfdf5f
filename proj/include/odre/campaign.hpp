#pragma once

// End-to-end campaign: environment check, discovery, planning, artifact
// generation, Jest runs, classification and reporting.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "odre/analysis.hpp"
#include "odre/config.hpp"
#include "odre/discovery.hpp"
#include "odre/environment.hpp"
#include "odre/orchestrator.hpp"
#include "odre/permutation.hpp"
#include "odre/report.hpp"
#include "odre/rewriter.hpp"
#include "odre/suite_model.hpp"

namespace odre {

inline constexpr std::string_view kWorkDirName = ".odre";
inline constexpr std::string_view kSequencerEnv = "ODRE_SEQUENCER";

struct CampaignResult {
  Config config;
  EnvironmentReport environment;
  TestFileInventory inventory;
  std::vector<TestSuiteModel> models;
  PermutationPlan plan;
  std::vector<ReorderedArtifact> artifacts;
  std::vector<RunSpec> specs;
  CampaignRun run;
  OutcomeMatrix matrix;
  std::vector<Verdict> verdicts;
  ReportSummary summary;
  CleanupReport cleanup;
  CampaignPaths paths;
  std::vector<std::string> warnings;
  int exit_code = 0;
};

/// Removes generated files when the campaign ends, including on exceptions.
class ArtifactGuard {
 public:
  explicit ArtifactGuard(bool keep) : keep_(keep) {}
  ArtifactGuard(const ArtifactGuard&) = delete;
  ArtifactGuard& operator=(const ArtifactGuard&) = delete;
  ~ArtifactGuard() {
    if (!done_) cleanup(paths_, keep_);
  }

  void track(const std::filesystem::path& path) { paths_.push_back(path); }

  CleanupReport finish() {
    done_ = true;
    return cleanup(paths_, keep_);
  }

 private:
  std::vector<std::filesystem::path> paths_;
  bool keep_;
  bool done_ = false;
};

inline std::string make_campaign_id(const Config& config) {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &utc);
  return fmt::format("{}-{}-s{}", stamp, to_string(config.level), config.seed);
}

inline CampaignPaths make_campaign_paths(const Config& config) {
  CampaignPaths paths;
  paths.project = config.project_path;
  std::string base = make_campaign_id(config);
  paths.campaign_id = base;
  for (int n = 2; std::filesystem::exists(config.project_path / kWorkDirName / paths.campaign_id); ++n) {
    paths.campaign_id = fmt::format("{}-{}", base, n);
  }
  paths.campaign_dir = config.project_path / kWorkDirName / paths.campaign_id;
  std::filesystem::create_directories(paths.campaign_dir);
  return paths;
}

inline nlohmann::json campaign_manifest(const CampaignResult& c) {
  nlohmann::json doc;
  doc["schema"] = 1;
  doc["campaign_id"] = c.paths.campaign_id;
  doc["project_path"] = c.config.project_path.string();
  doc["level"] = to_string(c.config.level);
  doc["seed"] = c.config.seed;
  doc["rerun_count"] = c.config.rerun_count;
  doc["reorder_count"] = c.config.reorder_count;
  doc["environment"] = c.environment;
  doc["plan"] = c.plan;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : c.inventory.files) files.push_back(f.string());
  doc["inventory"] = files;

  std::map<std::string, std::size_t> per_target;
  for (const auto& t : c.plan.targets) per_target[t.target_id] = (t.order_sets.size() + 1) * c.config.rerun_count;
  std::size_t expected_runs = 0;
  nlohmann::json per_target_json = nlohmann::json::object();
  for (const auto& [id, n] : per_target) {
    per_target_json[id] = n;
    expected_runs += n;
  }
  doc["expected_run_count"] = expected_runs;
  doc["expected_runs_per_target"] = per_target_json;

  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < c.specs.size(); ++i) {
    nlohmann::json entry = c.specs[i];
    if (i < c.run.records.size() && c.run.records[i].attempts > 0) {
      const auto& r = c.run.records[i];
      entry["exit_status"] = r.exit_status;
      entry["valid"] = r.valid;
      entry["timed_out"] = r.timed_out;
      entry["attempts"] = r.attempts;
      entry["wall_ms"] = r.wall_time.count();
      entry["started_at_ms"] =
          std::chrono::duration_cast<std::chrono::milliseconds>(r.started_at.time_since_epoch()).count();
      entry["finished_at_ms"] =
          std::chrono::duration_cast<std::chrono::milliseconds>(r.finished_at.time_since_epoch()).count();
      if (!r.note.empty()) entry["note"] = r.note;
    }
    runs.push_back(std::move(entry));
  }
  doc["runs"] = runs;
  doc["run_count"] = c.specs.size();
  doc["layout_collisions"] = c.run.layout_collisions;
  doc["unreliable"] = c.run.unreliable;
  doc["warnings"] = c.warnings;
  return doc;
}

using ProgressFn = std::function<void(const RunRecord&, std::size_t done, std::size_t total)>;

/// Runs a whole campaign. Throws EnvironmentError / DiscoveryError for the
/// fatal cases; per-file parse or rewrite problems become warnings.
inline CampaignResult run_detection(Config config, const ProgressFn& progress = {}) {
  CampaignResult c;

  c.environment = check_environment(config);
  if (!c.environment.supported) {
    throw EnvironmentError(fmt::format("unsupported environment: {}", fmt::join(c.environment.diagnostics, "; ")));
  }
  for (const auto& d : c.environment.diagnostics) log::warn("{}", d);
  config.jest_invocation = c.environment.jest_invocation;
  if (config.level == Level::suite) {
    if (!c.environment.jest_at_least(kSequencerJest)) {
      throw EnvironmentError(fmt::format("suite level needs Jest {}+ for --testSequencer", kSequencerJest.to_string()));
    }
    if (!config.sequencer_path) {
      if (const char* env = std::getenv(std::string(kSequencerEnv).c_str()); env && *env) {
        config.sequencer_path = std::filesystem::absolute(env);
      }
    }
    if (!config.sequencer_path || !std::filesystem::exists(*config.sequencer_path)) {
      throw EnvironmentError(fmt::format("suite level needs the test sequencer module: pass --sequencer=<path> or set {}",
                                         kSequencerEnv));
    }
  }
  c.config = config;

  c.inventory = list_test_files(config);
  for (const auto& w : c.inventory.warnings) {
    log::warn("{}", w);
    c.warnings.push_back(w);
  }
  c.paths = make_campaign_paths(config);
  log::info("campaign {} (level={}, seed={}, reorder={}, rerun={})", c.paths.campaign_id, to_string(config.level),
            config.seed, config.reorder_count, config.rerun_count);

  std::map<std::string, std::vector<TestIdentity>> expected;
  for (const auto& file : c.inventory.files) {
    std::string id = relative_id(file, config.project_path);
    try {
      auto model = parse_suite(file.string(), read_file(file));
      for (const auto& w : model.warnings) c.warnings.push_back(fmt::format("{}: {}", id, w));
      expected[id] = expected_identities(model, id);
      c.models.push_back(std::move(model));
    } catch (const ExtractionError& e) {
      auto message = fmt::format("{} is not reorderable: {}", id, e.what());
      log::warn("{}", message);
      c.warnings.push_back(message);
    }
  }

  ArtifactGuard guard(config.keep_artifacts);
  if (config.level == Level::suite) {
    c.plan = build_plan(c.inventory, config);
  } else {
    c.plan = build_plan(c.models, config);
    for (auto& target : c.plan.targets) {
      const auto& model = *std::find_if(c.models.begin(), c.models.end(),
                                        [&](const TestSuiteModel& m) { return m.file_path == target.source; });
      std::vector<ReorderedArtifact> made;
      try {
        for (const auto& set : target.order_sets) {
          made.push_back(render_artifact(model, target, set, config.level, config.seed, config.project_path));
        }
        for (const auto& artifact : made) {
          guard.track(artifact.output_path);
          write_artifact(artifact);
        }
      } catch (const RewriteError& e) {
        auto message = fmt::format("{}: {}; only the original order is run", target.target_id, e.what());
        log::warn("{}", message);
        c.warnings.push_back(message);
        c.plan.diagnostics.push_back(message);
        target.order_sets.clear();
        for (const auto& artifact : made) {
          std::error_code ec;
          if (is_generated_file(artifact.output_path)) std::filesystem::remove(artifact.output_path, ec);
        }
        continue;
      }
      for (auto& artifact : made) c.artifacts.push_back(std::move(artifact));
    }
  }
  for (const auto& d : c.plan.diagnostics) log::info("plan: {}", d);

  c.specs = build_run_specs(c.plan, c.artifacts, c.inventory.files, config, c.paths);
  write_text_file(c.paths.campaign_dir / "campaign-manifest.json", campaign_manifest(c).dump(2));
  log::info("{} Jest runs scheduled", c.specs.size());

  c.run = run_campaign(c.specs, config, c.environment, expected, progress);
  if (!c.run.layout_collisions.empty()) {
    c.warnings.push_back(fmt::format("{} result file name(s) in the project layout were reused; the campaign mirror "
                                     "under {} keeps every run",
                                     c.run.layout_collisions.size(), c.paths.campaign_dir.string()));
  }

  c.matrix = build_matrix(c.run.records, expected);
  c.verdicts = classify(c.matrix, config.inconclusive_threshold);
  c.cleanup = guard.finish();
  for (const auto& f : c.cleanup.failures) c.warnings.push_back("could not delete " + f);

  ReportContext context;
  context.campaign_id = c.paths.campaign_id;
  context.environment = c.environment;
  context.run_count = c.run.records.size();
  context.invalid_runs = static_cast<std::size_t>(
      std::count_if(c.run.records.begin(), c.run.records.end(), [](const RunRecord& r) { return !r.valid; }));
  context.unreliable = c.run.unreliable;
  context.warnings = c.warnings;
  context.kept_artifacts = c.cleanup.kept;
  context.output_dir = c.paths.campaign_dir;
  c.summary = emit_report(c.verdicts, c.plan, config, context);
  write_text_file(c.paths.campaign_dir / "campaign-manifest.json", campaign_manifest(c).dump(2));

  c.exit_code = (config.fail_on_od && c.summary.order_dependent > 0) ? 1 : 0;
  return c;
}

}  // namespace odre
