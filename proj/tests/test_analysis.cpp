#include <gtest/gtest.h>

#include "odre/analysis.hpp"

using namespace odre;

namespace {

const TestIdentity kId{"a.test.js", {}, "t"};

/// Rows as strings: 'P' pass, 'F' fail, 'S' skip, 'T' timeout, 'M' missing,
/// 'x' cell from an invalid run.
OutcomeMatrix matrix_of(const std::vector<std::string>& rows) {
  OutcomeMatrix m;
  m.rerun_count = rows.empty() ? 0 : rows[0].size();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto& row = m.cells[kId][k];
    for (char c : rows[k]) {
      switch (c) {
        case 'P': row.push_back({Outcome::pass, false}); break;
        case 'F': row.push_back({Outcome::fail, false}); break;
        case 'S': row.push_back({Outcome::skip, false}); break;
        case 'T': row.push_back({Outcome::timeout, false}); break;
        case 'M': row.push_back({Outcome::missing, false}); break;
        default: row.push_back({Outcome::missing, true}); break;
      }
    }
  }
  return m;
}

Verdict only(const OutcomeMatrix& m, double threshold = 0.2) {
  auto v = classify(m, threshold);
  EXPECT_EQ(v.size(), 1u);
  return v.front();
}

RunRecord record(std::size_t reorder, std::size_t rerun, std::map<TestIdentity, Outcome> outcomes,
                 bool valid = true, bool timed_out = false) {
  RunRecord r;
  r.run_spec.target_id = "a.test.js";
  r.run_spec.reorder_index = reorder;
  r.run_spec.rerun_index = rerun;
  r.valid = valid;
  r.timed_out = timed_out;
  r.outcomes = std::move(outcomes);
  return r;
}

}  // namespace

TEST(Classify, Listing1Pattern) {
  auto v = only(matrix_of({"FFFFFFFFFF", "FFFFFFFFFF", "PPPPPPPPPP"}));
  EXPECT_EQ(v.verdict, VerdictClass::order_dependent_candidate);
  EXPECT_EQ(v.witness_orders, std::make_pair(std::size_t{0}, std::size_t{2}));
}

TEST(Classify, StableOutcomes) {
  EXPECT_EQ(only(matrix_of({"PPP", "PPP"})).verdict, VerdictClass::stable_pass);
  EXPECT_EQ(only(matrix_of({"FFF", "FFF"})).verdict, VerdictClass::stable_fail);
  EXPECT_EQ(only(matrix_of({"SSS", "SSS"})).verdict, VerdictClass::stable_pass);
  EXPECT_EQ(only(matrix_of({"TTT", "FFF"})).verdict, VerdictClass::stable_fail);
}

TEST(Classify, MixedOrderIsFlakyEvenWhenOrdersDiffer) {
  EXPECT_EQ(only(matrix_of({"PPP", "PFP", "FFF"})).verdict, VerdictClass::nondeterministic_flaky);
  EXPECT_FALSE(only(matrix_of({"PFP", "PPP"})).witness_orders.has_value());
}

TEST(Classify, SkipVersusPassIsOrderDependent) {
  EXPECT_EQ(only(matrix_of({"SS", "PP"})).verdict, VerdictClass::order_dependent_candidate);
}

TEST(Classify, InvalidRunsAboveThresholdAreInconclusive) {
  EXPECT_EQ(only(matrix_of({"PPPPP", "xxPPP"})).verdict, VerdictClass::stable_pass);  // 2/10 is not above 0.2
  EXPECT_EQ(only(matrix_of({"PPPPP", "xxxPP"})).verdict, VerdictClass::inconclusive);
  EXPECT_EQ(only(matrix_of({"xx", "xx"})).verdict, VerdictClass::inconclusive);
}

TEST(Classify, InvalidCellsDoNotCreateFlakiness) {
  auto v = only(matrix_of({"PPPPP", "PPPPx"}));
  EXPECT_EQ(v.verdict, VerdictClass::stable_pass);
  EXPECT_EQ(v.evidence[1].invalid_runs, 1u);
}

TEST(Classify, WitnessIsLowestOrderAndFirstDifference) {
  auto v = only(matrix_of({"PP", "PP", "FF", "PP", "FF"}));
  EXPECT_EQ(v.witness_orders, std::make_pair(std::size_t{0}, std::size_t{2}));
}

TEST(Classify, EvidenceCounts) {
  auto v = only(matrix_of({"PPF"}));
  ASSERT_EQ(v.evidence.size(), 1u);
  EXPECT_EQ(v.evidence[0].counts.at(Outcome::pass), 2u);
  EXPECT_EQ(v.evidence[0].counts.at(Outcome::fail), 1u);
}

TEST(BuildMatrix, FillsMissingAndTimeouts) {
  TestIdentity a{"a.test.js", {}, "a"};
  TestIdentity b{"a.test.js", {}, "b"};
  std::vector<RunRecord> records = {
      record(0, 1, {{a, Outcome::pass}, {b, Outcome::pass}}),
      record(0, 2, {{a, Outcome::pass}}),
      record(1, 1, {}, true, true),
      record(1, 2, {}, false),
  };
  auto m = build_matrix(records);
  EXPECT_EQ(m.rerun_count, 2u);
  EXPECT_EQ(m.cells.at(b).at(0)[1].outcome, Outcome::missing);
  EXPECT_EQ(m.cells.at(a).at(1)[0].outcome, Outcome::timeout);
  EXPECT_TRUE(m.cells.at(a).at(1)[1].invalid_run);
}

TEST(BuildMatrix, ExpectedIdentitiesAppearEvenIfNeverReported) {
  TestIdentity a{"a.test.js", {}, "a"};
  TestIdentity ghost{"a.test.js", {}, "ghost"};
  std::map<std::string, std::vector<TestIdentity>> expected{{"a.test.js", {a, ghost}}};
  auto m = build_matrix({record(0, 1, {{a, Outcome::pass}})}, expected);
  ASSERT_TRUE(m.cells.count(ghost));
  EXPECT_EQ(m.cells.at(ghost).at(0)[0].outcome, Outcome::missing);
}

TEST(BuildMatrix, DuplicateCellIsAnIntegrityError) {
  TestIdentity a{"a.test.js", {}, "a"};
  std::vector<RunRecord> records = {record(0, 1, {{a, Outcome::pass}}), record(0, 1, {{a, Outcome::fail}})};
  EXPECT_THROW(build_matrix(records), IntegrityError);
}
