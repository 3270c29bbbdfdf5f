#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "odre/common.hpp"
#include "odre/orchestrator.hpp"

namespace odre {

struct Cell {
  Outcome outcome = Outcome::missing;
  bool invalid_run = false;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// identity -> reorder index -> one cell per rerun.
struct OutcomeMatrix {
  std::size_t rerun_count = 0;
  std::map<TestIdentity, std::map<std::size_t, std::vector<Cell>>> cells;
};

/// Arranges run records into a matrix. An identity seen in any run of a target
/// gets a cell in every run of that target: absent results become MISSING, or
/// TIMEOUT when that run was killed.
inline OutcomeMatrix build_matrix(const std::vector<RunRecord>& records,
                                  const std::map<std::string, std::vector<TestIdentity>>& expected = {}) {
  OutcomeMatrix matrix;
  std::map<std::string, std::vector<const RunRecord*>> by_target;
  for (const auto& r : records) {
    by_target[r.run_spec.target_id].push_back(&r);
    matrix.rerun_count = std::max(matrix.rerun_count, r.run_spec.rerun_index);
  }

  std::map<TestIdentity, std::map<std::size_t, std::vector<std::optional<Cell>>>> staging;
  std::map<std::tuple<TestIdentity, std::size_t, std::size_t>, const RunRecord*> owner;
  for (const auto& [target, runs] : by_target) {
    std::set<TestIdentity> ids;
    for (const auto* r : runs) {
      for (const auto& [id, outcome] : r->outcomes) ids.insert(id);
    }
    // Suite-level runs cover every file; test/describe runs cover one.
    for (const auto& [file, list] : expected) {
      bool covered = runs.front()->run_spec.level == Level::suite || file == target;
      if (covered) ids.insert(list.begin(), list.end());
    }
    for (const auto* r : runs) {
      const auto& spec = r->run_spec;
      if (spec.rerun_index == 0) throw IntegrityError("rerun indices start at 1");
      for (const auto& id : ids) {
        auto [it, inserted] = owner.try_emplace({id, spec.reorder_index, spec.rerun_index}, r);
        if (!inserted) {
          const auto& other = it->second->run_spec;
          throw IntegrityError(fmt::format("runs '{}' and '{}' both report {} for reorder {}, rerun {}",
                                           other.output_path.string(), spec.output_path.string(), id.display(),
                                           spec.reorder_index, spec.rerun_index));
        }
        Cell cell;
        cell.invalid_run = !r->valid;
        if (auto found = r->outcomes.find(id); found != r->outcomes.end()) {
          cell.outcome = found->second;
        } else {
          cell.outcome = r->timed_out ? Outcome::timeout : Outcome::missing;
        }
        auto& row = staging[id][spec.reorder_index];
        if (row.size() < matrix.rerun_count) row.resize(matrix.rerun_count);
        row[spec.rerun_index - 1] = cell;
      }
    }
  }

  for (auto& [id, orders] : staging) {
    auto& dest = matrix.cells[id];
    for (auto& [reorder, row] : orders) {
      row.resize(matrix.rerun_count);
      auto& out = dest[reorder];
      for (auto& cell : row) out.push_back(cell.value_or(Cell{Outcome::missing, true}));
    }
  }
  return matrix;
}

enum class VerdictClass {
  order_dependent_candidate,
  nondeterministic_flaky,
  stable_pass,
  stable_fail,
  inconclusive,
};

inline std::string_view to_string(VerdictClass c) {
  switch (c) {
    case VerdictClass::order_dependent_candidate: return "ORDER_DEPENDENT_CANDIDATE";
    case VerdictClass::nondeterministic_flaky: return "NONDETERMINISTIC_FLAKY";
    case VerdictClass::stable_pass: return "STABLE_PASS";
    case VerdictClass::stable_fail: return "STABLE_FAIL";
    case VerdictClass::inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

struct OrderEvidence {
  std::size_t reorder_index = 0;
  std::map<Outcome, std::size_t> counts;
  std::size_t invalid_runs = 0;
  friend bool operator==(const OrderEvidence&, const OrderEvidence&) = default;
};

struct Verdict {
  TestIdentity identity;
  VerdictClass verdict = VerdictClass::inconclusive;
  std::optional<std::pair<std::size_t, std::size_t>> witness_orders;
  std::vector<OrderEvidence> evidence;
};

/// Outcomes compared for order dependence: TIMEOUT and MISSING count as
/// failures, TODO as skipped.
enum class OutcomeClass { pass, fail, skip };

inline OutcomeClass outcome_class(Outcome o) {
  switch (o) {
    case Outcome::pass: return OutcomeClass::pass;
    case Outcome::skip:
    case Outcome::todo: return OutcomeClass::skip;
    default: return OutcomeClass::fail;
  }
}

/// Per-identity decision, in precedence order:
///  - more than `inconclusive_threshold` of the cells come from invalid runs: INCONCLUSIVE
///  - some order has differing outcome classes across its reruns: NONDETERMINISTIC_FLAKY
///  - two orders have different (uniform) classes: ORDER_DEPENDENT_CANDIDATE,
///    witnessed by the baseline and the first order differing from it when possible
///  - otherwise STABLE_FAIL if uniformly failing, else STABLE_PASS.
/// Cells from invalid runs are excluded from the last three rules.
inline std::vector<Verdict> classify(const OutcomeMatrix& matrix,
                                     double inconclusive_threshold = kDefaultInconclusiveThreshold) {
  std::vector<Verdict> verdicts;
  for (const auto& [id, orders] : matrix.cells) {
    Verdict v;
    v.identity = id;
    std::size_t total = 0;
    std::size_t invalid = 0;
    std::map<std::size_t, std::set<OutcomeClass>> classes;
    for (const auto& [reorder, row] : orders) {
      OrderEvidence ev;
      ev.reorder_index = reorder;
      for (const auto& cell : row) {
        ++total;
        if (cell.invalid_run) {
          ++invalid;
          ++ev.invalid_runs;
          continue;
        }
        ++ev.counts[cell.outcome];
        classes[reorder].insert(outcome_class(cell.outcome));
      }
      v.evidence.push_back(std::move(ev));
    }

    if (total == 0 || static_cast<double>(invalid) > inconclusive_threshold * static_cast<double>(total) ||
        classes.empty()) {
      v.verdict = VerdictClass::inconclusive;
    } else if (std::any_of(classes.begin(), classes.end(), [](const auto& kv) { return kv.second.size() > 1; })) {
      v.verdict = VerdictClass::nondeterministic_flaky;
    } else {
      std::vector<std::pair<std::size_t, OutcomeClass>> uniform;
      for (const auto& [reorder, set] : classes) uniform.emplace_back(reorder, *set.begin());
      for (std::size_t a = 0; a < uniform.size() && !v.witness_orders; ++a) {
        for (std::size_t b = a + 1; b < uniform.size(); ++b) {
          if (uniform[a].second != uniform[b].second) {
            v.witness_orders = std::make_pair(uniform[a].first, uniform[b].first);
            break;
          }
        }
      }
      if (v.witness_orders) {
        v.verdict = VerdictClass::order_dependent_candidate;
      } else {
        v.verdict = uniform.front().second == OutcomeClass::fail ? VerdictClass::stable_fail : VerdictClass::stable_pass;
      }
    }
    verdicts.push_back(std::move(v));
  }
  return verdicts;
}

}  // namespace odre
