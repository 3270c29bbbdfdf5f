#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "odre/common.hpp"
#include "odre/permutation.hpp"
#include "odre/provenance.hpp"
#include "odre/suite_model.hpp"

namespace odre {

struct ReorderedArtifact {
  std::filesystem::path source_file;
  std::size_t reorder_index = 0;
  Level level = Level::test;
  std::filesystem::path output_path;
  OrderSet order_set;
  std::string provenance_marker;
  std::string content;  // full file bytes, marker included
};

/// Splits "Foo.test.js" into ("Foo", ".test.js"). Files without a
/// test/spec suffix split at the final extension and report `recognized = false`.
struct TestFileName {
  std::string stem;
  std::string suffix;
  bool recognized = false;
};

inline TestFileName split_test_file_name(const std::string& filename) {
  static const std::regex pattern(R"(^(.+?)(\.(?:test|spec)\.[cm]?[jt]sx?)$)");
  std::smatch m;
  if (std::regex_match(filename, m, pattern)) return {m[1].str(), m[2].str(), true};
  auto dot = filename.rfind('.');
  if (dot == std::string::npos || dot == 0) return {filename, "", false};
  return {filename.substr(0, dot), filename.substr(dot), false};
}

/// Foo.test.js -> Foo<n>.test.js (test level) or Foodescribe<n>.test.js
/// (describe level), in the source's directory.
inline std::filesystem::path name_artifact(const std::filesystem::path& source_file, Level level,
                                           std::size_t reorder_index) {
  auto parts = split_test_file_name(source_file.filename().string());
  std::string infix = level == Level::describe ? "describe" : "";
  return source_file.parent_path() / fmt::format("{}{}{}{}", parts.stem, infix, reorder_index, parts.suffix);
}

/// Walks a child-index path from the root body down to a container's child list.
inline std::vector<Child>& container_children(TestSuiteModel& model, const std::vector<std::size_t>& path) {
  std::vector<Child>* list = &model.body;
  for (auto index : path) list = &std::get<TestNode>((*list)[index]).children;
  return *list;
}

/// Returns a copy of the model with each container's units moved between the
/// slots they occupy: slot k receives original unit permutation[k].
inline TestSuiteModel apply_order_set(const TestSuiteModel& model, const PlanTarget& target, const OrderSet& set) {
  TestSuiteModel out = model;
  // Deepest containers first so parent paths stay valid while children move.
  std::vector<std::size_t> order(target.containers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return target.containers[a].path.size() > target.containers[b].path.size();
  });
  for (auto c : order) {
    const auto& container = target.containers[c];
    auto found = std::find_if(set.orders.begin(), set.orders.end(),
                              [&](const Order& o) { return o.container_id == container.id; });
    if (found == set.orders.end()) continue;
    const auto& perm = found->permutation;
    if (perm.size() != container.unit_slots.size() || !is_bijection(perm)) {
      throw RewriteError(fmt::format("order for {} is not a bijection over its {} units", container.id,
                                     container.unit_slots.size()));
    }
    auto& children = container_children(out, container.path);
    std::vector<Child> units;
    for (auto slot : container.unit_slots) {
      if (slot >= children.size() || !std::holds_alternative<TestNode>(children[slot])) {
        throw RewriteError(fmt::format("container {} does not match the model", container.id));
      }
      units.push_back(children[slot]);
    }
    for (std::size_t k = 0; k < perm.size(); ++k) children[container.unit_slots[k]] = units[perm[k]];
  }
  return out;
}

using NodeSignature = std::tuple<std::vector<std::string>, NodeKind, std::string, Modifier>;

/// Multiset of (describe path, kind, name, modifier) over every node.
inline std::multiset<NodeSignature> node_signatures(const TestSuiteModel& model) {
  std::multiset<NodeSignature> out;
  for_each_node(model, [&](const TestNode& node) {
    std::vector<std::string> path;
    for (const auto& n : node.container_path) path.push_back(display_name(n));
    out.emplace(std::move(path), node.kind, display_name(node.name), node.modifier);
  });
  return out;
}

inline std::string insert_marker(const std::string& content, const std::string& marker) {
  if (content.compare(0, 2, "#!") == 0) {
    auto nl = content.find('\n');
    if (nl == std::string::npos) return content + "\n" + marker + "\n";
    return content.substr(0, nl + 1) + marker + "\n" + content.substr(nl + 1);
  }
  return marker + "\n" + content;
}

inline std::string strip_marker(const std::string& content) {
  std::size_t at = 0;
  if (content.compare(0, 2, "#!") == 0) {
    auto nl = content.find('\n');
    if (nl == std::string::npos) return content;
    at = nl + 1;
  }
  if (content.compare(at, kMarkerPrefix.size(), kMarkerPrefix) != 0) return content;
  auto nl = content.find('\n', at);
  return content.substr(0, at) + (nl == std::string::npos ? "" : content.substr(nl + 1));
}

/// Renders the reordered file in memory and checks it re-parses to the same
/// node multiset. A statement that relied on automatic semicolon insertion
/// can merge with a neighbour once moved; that surfaces here as RewriteError.
inline ReorderedArtifact render_artifact(const TestSuiteModel& model, const PlanTarget& target, const OrderSet& set,
                                         Level level, std::uint64_t seed, const std::filesystem::path& project_root) {
  if (level == Level::suite) throw RewriteError("suite level orders are passed to the sequencer, not rewritten");
  ReorderedArtifact artifact;
  artifact.source_file = model.file_path;
  artifact.reorder_index = set.reorder_index;
  artifact.level = level;
  artifact.output_path = name_artifact(model.file_path, level, set.reorder_index);
  artifact.order_set = set;
  artifact.provenance_marker =
      provenance_marker(level, set.reorder_index, seed, relative_id(model.file_path, project_root));

  std::string body = reconstruct(apply_order_set(model, target, set));
  TestSuiteModel reparsed;
  try {
    reparsed = parse_suite(artifact.output_path.string(), body);
  } catch (const ExtractionError& e) {
    throw RewriteError(fmt::format("reordered {} no longer parses: {}", model.file_path, e.what()));
  }
  if (node_signatures(reparsed) != node_signatures(model)) {
    throw RewriteError(fmt::format("reordering {} (order {}) changed its test structure", model.file_path,
                                   set.reorder_index));
  }
  artifact.content = insert_marker(body, artifact.provenance_marker);
  return artifact;
}

/// Writes via a temporary file and rename. Refuses to overwrite a file that
/// lacks the provenance marker.
inline void write_artifact(const ReorderedArtifact& artifact) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (fs::exists(artifact.output_path, ec) && !is_generated_file(artifact.output_path)) {
    throw RewriteError(fmt::format("refusing to overwrite {}: it exists and was not generated by odre",
                                   artifact.output_path.string()));
  }
  fs::path temp = artifact.output_path;
  temp += fmt::format(".odre-tmp-{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    out.write(artifact.content.data(), static_cast<std::streamsize>(artifact.content.size()));
    if (!out) throw RewriteError(fmt::format("cannot write {}", temp.string()));
  }
  fs::rename(temp, artifact.output_path, ec);
  if (ec) {
    fs::remove(temp);
    throw RewriteError(fmt::format("cannot move {} into place: {}", artifact.output_path.string(), ec.message()));
  }
}

inline ReorderedArtifact rewrite(const TestSuiteModel& model, const PlanTarget& target, const OrderSet& set,
                                 Level level, std::uint64_t seed, const std::filesystem::path& project_root) {
  auto artifact = render_artifact(model, target, set, level, seed, project_root);
  write_artifact(artifact);
  return artifact;
}

struct CleanupReport {
  std::vector<std::filesystem::path> removed;
  std::vector<std::filesystem::path> kept;
  std::vector<std::filesystem::path> skipped_unmarked;
  std::vector<std::string> failures;
};

/// Deletes generated files unless `keep_artifacts`. Files without the
/// provenance marker are never deleted.
inline CleanupReport cleanup(const std::vector<std::filesystem::path>& artifacts, bool keep_artifacts) {
  namespace fs = std::filesystem;
  CleanupReport report;
  for (const auto& path : artifacts) {
    std::error_code ec;
    if (!fs::exists(path, ec)) continue;
    if (!is_generated_file(path)) {
      report.skipped_unmarked.push_back(path);
      continue;
    }
    if (keep_artifacts) {
      report.kept.push_back(path);
      continue;
    }
    if (fs::remove(path, ec)) {
      report.removed.push_back(path);
    } else {
      report.failures.push_back(fmt::format("{}: {}", path.string(), ec ? ec.message() : "not removed"));
      log::warn("could not delete {}", path.string());
    }
  }
  return report;
}

}  // namespace odre
