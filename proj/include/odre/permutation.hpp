#pragma once

// Reproducible order generation.
//
// All randomness comes from SplitMix64 so any implementation can reproduce a
// plan from its seed. A sample is a Fisher-Yates shuffle of the identity,
// walking i = n-1 .. 1 and swapping i with next() % (i + 1).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "odre/common.hpp"
#include "odre/config.hpp"
#include "odre/discovery.hpp"
#include "odre/suite_model.hpp"

namespace odre {

using Permutation = std::vector<std::size_t>;

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// 64-bit FNV-1a.
inline std::uint64_t stable_hash(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t container_seed(std::uint64_t campaign_seed, std::string_view container_id) {
  return SplitMix64(campaign_seed ^ stable_hash(container_id)).next();
}

inline Permutation identity_permutation(std::size_t n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

inline bool is_bijection(const Permutation& p) {
  std::vector<bool> seen(p.size(), false);
  for (auto v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

/// n! saturated at `cap` (so the comparison against a requested count never overflows).
inline std::uint64_t factorial_capped(std::size_t n, std::uint64_t cap) {
  std::uint64_t f = 1;
  for (std::size_t k = 2; k <= n; ++k) {
    if (f > cap / k) return cap + 1;
    f *= k;
  }
  return f;
}

/// Lexicographic unranking: the rank-th permutation of 0..n-1. Requires rank < n!.
inline Permutation unrank_permutation(std::size_t n, std::uint64_t rank) {
  Permutation pool = identity_permutation(n);
  Permutation out;
  out.reserve(n);
  for (std::size_t remaining = n; remaining > 0; --remaining) {
    std::uint64_t block = factorial_capped(remaining - 1, UINT64_MAX - 1);
    std::size_t pick = static_cast<std::size_t>(rank / block);
    rank %= block;
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

inline constexpr std::size_t kMaxDuplicateDraws = 1000;

/// Returns min(count, n!) distinct permutations of 0..n-1.
///
/// When n! <= count every permutation is returned in lexicographic order.
/// Otherwise `count` seeded Fisher-Yates samples are drawn, rejecting
/// duplicates; after kMaxDuplicateDraws rejections the remainder is filled by
/// lexicographic unranking, skipping permutations already present.
inline std::vector<Permutation> generate_orders(std::size_t n_units, std::size_t count, std::uint64_t stream_seed) {
  std::vector<Permutation> out;
  if (count == 0) return out;
  if (n_units <= 1) {
    out.push_back(identity_permutation(n_units));
    return out;
  }
  if (factorial_capped(n_units, count) <= count) {
    Permutation p = identity_permutation(n_units);
    do {
      out.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
  }

  SplitMix64 rng(stream_seed);
  std::set<Permutation> seen;
  std::size_t rejected = 0;
  while (out.size() < count && rejected < kMaxDuplicateDraws) {
    Permutation p = identity_permutation(n_units);
    for (std::size_t i = n_units - 1; i >= 1; --i) {
      std::size_t j = static_cast<std::size_t>(rng.next() % (i + 1));
      std::swap(p[i], p[j]);
    }
    if (seen.insert(p).second) {
      out.push_back(std::move(p));
    } else {
      ++rejected;
    }
  }
  for (std::uint64_t rank = 0; out.size() < count; ++rank) {
    Permutation p = unrank_permutation(n_units, rank);
    if (seen.insert(p).second) out.push_back(std::move(p));
  }
  return out;
}

struct Order {
  std::string container_id;
  Permutation permutation;  // permutation[k] = original unit index placed in slot k
  friend bool operator==(const Order&, const Order&) = default;
};

struct OrderSet {
  std::size_t reorder_index = 0;  // 1-based; 0 is the identity baseline
  std::vector<Order> orders;      // one per container of the target
};

/// A reorderable sibling list: the top-level scope, a describe body, or the project's file list.
struct Container {
  std::string id;
  std::vector<std::size_t> path;        // child indices from the root body; empty for the root
  std::vector<std::size_t> unit_slots;  // indices of reorderable siblings in that child list
  std::vector<std::string> unit_labels;
  bool exhaustive = false;
};

/// Everything reordered together: one test file (test/describe level) or the project (suite level).
struct PlanTarget {
  std::string target_id;  // project-relative path, or "<project>" at suite level
  std::filesystem::path source;
  std::vector<Container> containers;
  std::vector<OrderSet> order_sets;
};

struct PermutationPlan {
  Level level = Level::test;
  std::uint64_t seed = 0;
  std::size_t reorder_count = 0;
  bool includes_identity = true;
  std::vector<PlanTarget> targets;
  std::vector<std::string> diagnostics;

  std::size_t total_order_sets() const {
    std::size_t n = 0;
    for (const auto& t : targets) n += t.order_sets.size();
    return n;
  }
};

inline std::string relative_id(const std::filesystem::path& file, const std::filesystem::path& root) {
  auto rel = file.lexically_relative(root);
  return (rel.empty() ? file : rel).generic_string();
}

namespace detail {

inline void collect_containers(const std::vector<Child>& children, std::vector<std::size_t>& path,
                               const std::string& label, Level level, bool nested_describes, bool root,
                               const std::string& file_id, std::vector<Container>& out) {
  bool wanted = level == Level::test || root || nested_describes;
  if (wanted) {
    Container c;
    c.path = path;
    c.id = file_id + "::" + label;
    NodeKind unit_kind = level == Level::test ? NodeKind::test : NodeKind::describe;
    for (std::size_t i = 0; i < children.size(); ++i) {
      if (const auto* node = std::get_if<TestNode>(&children[i]); node && node->kind == unit_kind) {
        c.unit_slots.push_back(i);
        c.unit_labels.push_back(display_name(node->name));
      }
    }
    out.push_back(std::move(c));
  }
  for (std::size_t i = 0; i < children.size(); ++i) {
    const auto* node = std::get_if<TestNode>(&children[i]);
    if (!node || !node->has_body) continue;
    if (level != Level::test && !nested_describes) continue;
    path.push_back(i);
    collect_containers(node->children, path, fmt::format("{}/{}:{}", label, i, display_name(node->name)), level,
                       nested_describes, false, file_id, out);
    path.pop_back();
  }
}

inline void assign_orders(PlanTarget& target, std::size_t reorder_count, std::uint64_t seed,
                          std::vector<std::string>& diagnostics) {
  std::vector<Container> kept;
  std::vector<std::vector<Permutation>> candidates;
  for (auto& c : target.containers) {
    if (c.unit_slots.size() < 2) {
      diagnostics.push_back(fmt::format("{}: {} reorderable unit(s), identity only", c.id, c.unit_slots.size()));
      continue;
    }
    auto orders = generate_orders(c.unit_slots.size(), reorder_count, container_seed(seed, c.id));
    c.exhaustive = factorial_capped(c.unit_slots.size(), reorder_count) <= reorder_count;
    candidates.push_back(std::move(orders));
    kept.push_back(std::move(c));
  }
  target.containers = std::move(kept);
  std::size_t sets = 0;
  for (const auto& list : candidates) sets = std::max(sets, list.size());
  for (std::size_t k = 0; k < sets; ++k) {
    OrderSet set;
    set.reorder_index = k + 1;
    for (std::size_t c = 0; c < target.containers.size(); ++c) {
      const auto& list = candidates[c];
      set.orders.push_back({target.containers[c].id, list[k % list.size()]});
    }
    target.order_sets.push_back(std::move(set));
  }
}

}  // namespace detail

/// Test or describe level: one target per parsed file.
///
/// Test level gives every scope (top level and each block-bodied describe) its
/// own orders over its direct tests. Describe level orders the top-level
/// describe blocks, and nested describe siblings too with `nested_describes`.
/// Containers with fewer than two units keep the identity and are dropped from
/// the plan with a diagnostic.
inline PermutationPlan build_plan(const std::vector<TestSuiteModel>& models, const Config& config) {
  if (config.level == Level::suite) throw Error("build_plan: suite level plans are built from the inventory");
  PermutationPlan plan;
  plan.level = config.level;
  plan.seed = config.seed;
  plan.reorder_count = config.reorder_count;
  for (const auto& model : models) {
    PlanTarget target;
    target.source = model.file_path;
    target.target_id = relative_id(model.file_path, config.project_path);
    std::vector<std::size_t> path;
    detail::collect_containers(model.body, path, "<root>", config.level, config.nested_describes, true,
                               target.target_id, target.containers);
    detail::assign_orders(target, config.reorder_count, config.seed, plan.diagnostics);
    plan.targets.push_back(std::move(target));
  }
  return plan;
}

/// Suite level: a single target whose one container is the inventory's file list.
inline PermutationPlan build_plan(const TestFileInventory& inventory, const Config& config) {
  PermutationPlan plan;
  plan.level = Level::suite;
  plan.seed = config.seed;
  plan.reorder_count = config.reorder_count;
  PlanTarget target;
  target.target_id = "<project>";
  target.source = config.project_path;
  Container c;
  c.id = "<project>::files";
  for (std::size_t i = 0; i < inventory.files.size(); ++i) {
    c.unit_slots.push_back(i);
    c.unit_labels.push_back(relative_id(inventory.files[i], config.project_path));
  }
  target.containers.push_back(std::move(c));
  detail::assign_orders(target, config.reorder_count, config.seed, plan.diagnostics);
  plan.targets.push_back(std::move(target));
  return plan;
}

inline void to_json(nlohmann::json& j, const PermutationPlan& plan) {
  j = nlohmann::json::object();
  j["level"] = to_string(plan.level);
  j["seed"] = plan.seed;
  j["reorder_count"] = plan.reorder_count;
  j["includes_identity"] = plan.includes_identity;
  j["diagnostics"] = plan.diagnostics;
  auto& targets = j["targets"] = nlohmann::json::array();
  for (const auto& t : plan.targets) {
    nlohmann::json target{{"target", t.target_id}, {"source", t.source.string()}};
    auto& containers = target["containers"] = nlohmann::json::array();
    for (const auto& c : t.containers) {
      containers.push_back({{"id", c.id}, {"units", c.unit_labels}, {"exhaustive", c.exhaustive}});
    }
    auto& sets = target["order_sets"] = nlohmann::json::array();
    for (const auto& s : t.order_sets) {
      nlohmann::json orders = nlohmann::json::array();
      for (const auto& o : s.orders) orders.push_back({{"container", o.container_id}, {"permutation", o.permutation}});
      sets.push_back({{"reorder", s.reorder_index}, {"orders", orders}});
    }
    targets.push_back(std::move(target));
  }
}

}  // namespace odre
