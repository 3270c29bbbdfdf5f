#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "odre/analysis.hpp"
#include "odre/config.hpp"
#include "odre/environment.hpp"
#include "odre/permutation.hpp"
#include "odre/rewriter.hpp"

namespace odre {

inline constexpr int kReportSchema = 1;

struct ReportContext {
  std::string campaign_id;
  EnvironmentReport environment;
  std::size_t run_count = 0;
  std::size_t invalid_runs = 0;
  bool unreliable = false;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> kept_artifacts;
  std::filesystem::path output_dir;
};

struct ReportSummary {
  std::map<VerdictClass, std::size_t> counts;
  std::size_t order_dependent = 0;
  std::size_t tests_analyzed = 0;
  std::filesystem::path json_path;
  std::filesystem::path markdown_path;
  bool written_to_stdout = false;
};

inline std::string regenerate_command(const Config& config) {
  std::string cmd = fmt::format("odre --project_path=\"{}\" --level={} --seed={} --reorder={} --rerun={} --keep-artifacts",
                                config.project_path.string(), to_string(config.level), config.seed,
                                config.reorder_count, config.rerun_count);
  if (config.nested_describes) cmd += " --nested-describes";
  return cmd;
}

/// Jest command that replays one order of a verdict's target.
inline std::string replay_command(const Config& config, const Verdict& verdict, std::size_t reorder_index,
                                  const std::string& campaign_dir) {
  std::string jest = config.jest_invocation.empty() ? "npx jest" : fmt::format("{}", fmt::join(config.jest_invocation, " "));
  if (config.level == Level::suite) {
    auto manifest = std::filesystem::path(campaign_dir) / "orders" / fmt::format("order-{}.json", reorder_index);
    return fmt::format("{}=\"{}\" {} --runInBand --testSequencer=<sequencer>", kOrderFileEnv, manifest.string(), jest);
  }
  auto source = config.project_path / verdict.identity.file;
  auto file = reorder_index == 0 ? source : name_artifact(source, config.level, reorder_index);
  return fmt::format("{} --runInBand --runTestsByPath \"{}\"", jest, file.lexically_relative(config.project_path).string());
}

inline nlohmann::json verdict_json(const Verdict& v) {
  nlohmann::json j;
  j["file"] = v.identity.file;
  j["describe_path"] = v.identity.describe_path;
  j["test"] = v.identity.test_name;
  j["modifier"] = to_string(v.identity.modifier);
  j["class"] = to_string(v.verdict);
  j["witness_orders"] = v.witness_orders ? nlohmann::json::array({v.witness_orders->first, v.witness_orders->second})
                                         : nlohmann::json(nullptr);
  auto& evidence = j["evidence"] = nlohmann::json::array();
  for (const auto& ev : v.evidence) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [outcome, n] : ev.counts) counts[std::string(to_string(outcome))] = n;
    evidence.push_back({{"reorder", ev.reorder_index}, {"counts", counts}, {"invalid_runs", ev.invalid_runs}});
  }
  return j;
}

inline std::string render_markdown(const std::vector<Verdict>& verdicts, const PermutationPlan& plan,
                                   const Config& config, const ReportContext& context, const ReportSummary& summary) {
  std::ostringstream md;
  md << "# Order-dependence report\n\n";
  md << fmt::format("- Project: `{}`\n", config.project_path.string());
  md << fmt::format("- Campaign: `{}`\n", context.campaign_id);
  md << fmt::format("- Level: {}, seed: {}, reorders: {}, reruns: {}\n", to_string(config.level), config.seed,
                    config.reorder_count, config.rerun_count);
  md << fmt::format("- Jest runs: {} ({} invalid){}\n", context.run_count, context.invalid_runs,
                    context.unreliable ? " **unreliable: more than half of the runs were invalid**" : "");
  md << fmt::format("- Order sets evaluated: {} plus the identity baseline per target\n\n", plan.total_order_sets());

  if (summary.tests_analyzed == 0) {
    md << "Zero tests analyzed.\n";
  } else {
    md << fmt::format("{} tests analyzed.\n\n", summary.tests_analyzed);
    md << "| Class | Tests |\n|---|---|\n";
    for (auto c : {VerdictClass::order_dependent_candidate, VerdictClass::nondeterministic_flaky,
                   VerdictClass::stable_pass, VerdictClass::stable_fail, VerdictClass::inconclusive}) {
      auto it = summary.counts.find(c);
      md << fmt::format("| {} | {} |\n", to_string(c), it == summary.counts.end() ? 0 : it->second);
    }
  }

  if (summary.order_dependent > 0) {
    md << "\n## Order-dependent candidates\n\n";
    md << "Order 0 is the original order. Regenerate the orders with:\n\n";
    md << "```\n" << regenerate_command(config) << "\n```\n\n";
    md << "| Test | File | Witness orders | Outcomes | Reproduce |\n|---|---|---|---|---|\n";
    for (const auto& v : verdicts) {
      if (v.verdict != VerdictClass::order_dependent_candidate) continue;
      auto [a, b] = *v.witness_orders;
      std::string outcomes;
      for (const auto& ev : v.evidence) {
        if (ev.reorder_index != a && ev.reorder_index != b) continue;
        for (const auto& [o, n] : ev.counts) outcomes += fmt::format("{}: {}x{} ", ev.reorder_index, n, to_string(o));
      }
      std::string name;
      for (const auto& d : v.identity.describe_path) name += d + " › ";
      name += v.identity.test_name;
      md << fmt::format("| {} | `{}` | {}, {} | {}| `{}` vs `{}` |\n", name, v.identity.file, a, b, outcomes,
                        replay_command(config, v, a, context.output_dir.string()),
                        replay_command(config, v, b, context.output_dir.string()));
    }
  }

  bool flaky_header = false;
  for (const auto& v : verdicts) {
    if (v.verdict != VerdictClass::nondeterministic_flaky) continue;
    if (!flaky_header) {
      md << "\n## Nondeterministic (not order-dependent)\n\n";
      flaky_header = true;
    }
    md << fmt::format("- `{}`\n", v.identity.display());
  }
  if (!context.warnings.empty()) {
    md << "\n## Warnings\n\n";
    for (const auto& w : context.warnings) md << "- " << w << "\n";
  }
  if (!context.kept_artifacts.empty()) {
    md << "\n## Generated files kept\n\n";
    for (const auto& p : context.kept_artifacts) md << fmt::format("- `{}`\n", p.string());
  }
  return md.str();
}

/// Writes odre-report.json and odre-report.md into context.output_dir. If the
/// directory is not writable both documents go to stdout instead.
inline ReportSummary emit_report(const std::vector<Verdict>& verdicts, const PermutationPlan& plan,
                                 const Config& config, const ReportContext& context) {
  ReportSummary summary;
  summary.tests_analyzed = verdicts.size();
  for (const auto& v : verdicts) ++summary.counts[v.verdict];
  summary.order_dependent = summary.counts[VerdictClass::order_dependent_candidate];

  nlohmann::json doc;
  doc["schema"] = kReportSchema;
  doc["campaign_id"] = context.campaign_id;
  doc["config"] = {
      {"project_path", config.project_path.string()},
      {"level", to_string(config.level)},
      {"seed", config.seed},
      {"rerun_count", config.rerun_count},
      {"reorder_count", config.reorder_count},
      {"per_run_timeout_seconds", config.per_run_timeout.count()},
      {"keep_artifacts", config.keep_artifacts},
      {"fail_on_od", config.fail_on_od},
      {"jobs", config.jobs},
      {"inconclusive_threshold", config.inconclusive_threshold},
      {"nested_describes", config.nested_describes},
  };
  doc["seed"] = config.seed;
  doc["environment"] = context.environment;
  doc["plan"] = plan;
  doc["runs"] = {{"total", context.run_count}, {"invalid", context.invalid_runs}, {"unreliable", context.unreliable}};
  nlohmann::json counts = nlohmann::json::object();
  for (auto c : {VerdictClass::order_dependent_candidate, VerdictClass::nondeterministic_flaky,
                 VerdictClass::stable_pass, VerdictClass::stable_fail, VerdictClass::inconclusive}) {
    counts[std::string(to_string(c))] = summary.counts[c];
  }
  doc["summary"] = {{"tests_analyzed", summary.tests_analyzed}, {"counts", counts}};
  auto& list = doc["verdicts"] = nlohmann::json::array();
  for (const auto& v : verdicts) {
    auto j = verdict_json(v);
    if (v.witness_orders) {
      j["reproduce"] = {{"regenerate", regenerate_command(config)},
                        {"first", replay_command(config, v, v.witness_orders->first, context.output_dir.string())},
                        {"second", replay_command(config, v, v.witness_orders->second, context.output_dir.string())}};
    }
    list.push_back(std::move(j));
  }
  doc["warnings"] = context.warnings;
  nlohmann::json kept = nlohmann::json::array();
  for (const auto& p : context.kept_artifacts) kept.push_back(p.string());
  doc["kept_artifacts"] = kept;

  std::string json_text = doc.dump(2) + "\n";
  std::string md_text = render_markdown(verdicts, plan, config, context, summary);

  summary.json_path = context.output_dir / "odre-report.json";
  summary.markdown_path = context.output_dir / "odre-report.md";
  try {
    write_text_file(summary.json_path, json_text);
    write_text_file(summary.markdown_path, md_text);
  } catch (const std::exception& e) {
    log::warn("cannot write reports to {} ({}); printing them instead", context.output_dir.string(), e.what());
    std::cout << json_text << "\n" << md_text;
    summary.written_to_stdout = true;
  }
  return summary;
}

}  // namespace odre
