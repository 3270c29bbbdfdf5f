#include <gtest/gtest.h>

#include "odre/rewriter.hpp"
#include "test_support.hpp"

using namespace odre;
using test_support::ScratchDir;

namespace {

constexpr const char* kListing1 = R"(test('calls logger once', () => {
  logger.log(`Test Log`);
  expect(logger.log).toHaveBeenCalledTimes(1);
});

test('logger has not been called yet', () => {
  expect(logger.log).not.toHaveBeenCalled(); 
});
)";

Config config_for(const std::filesystem::path& root, Level level, std::uint64_t seed) {
  Config c;
  c.project_path = root;
  c.level = level;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(ArtifactNames, FollowTheSuiteScheme) {
  EXPECT_EQ(name_artifact("/p/Foo.test.js", Level::test, 3), std::filesystem::path("/p/Foo3.test.js"));
  EXPECT_EQ(name_artifact("/p/Foo.test.js", Level::describe, 3), std::filesystem::path("/p/Foodescribe3.test.js"));
  EXPECT_EQ(name_artifact("/p/x/Bar.spec.ts", Level::test, 10), std::filesystem::path("/p/x/Bar10.spec.ts"));
  EXPECT_EQ(name_artifact("/p/a.b.test.mjs", Level::test, 1), std::filesystem::path("/p/a.b1.test.mjs"));
}

TEST(ArtifactNames, SplitRecognisesTestSuffixes) {
  auto parts = split_test_file_name("Foo.test.js");
  EXPECT_EQ(parts.stem, "Foo");
  EXPECT_EQ(parts.suffix, ".test.js");
  EXPECT_TRUE(parts.recognized);
  auto other = split_test_file_name("helper.js");
  EXPECT_EQ(other.stem, "helper");
  EXPECT_FALSE(other.recognized);
}

TEST(Rewriter, Listing1ReversedSwapsOnlyTheTests) {
  auto model = parse_suite("/p/logger.test.js", kListing1);
  auto plan = build_plan(std::vector<TestSuiteModel>{model}, config_for("/p", Level::test, 1));
  const auto& reversed = plan.targets[0].order_sets[1];
  ASSERT_EQ(reversed.orders[0].permutation, (Permutation{1, 0}));
  auto artifact = render_artifact(model, plan.targets[0], reversed, Level::test, 1, "/p");
  EXPECT_EQ(artifact.output_path, std::filesystem::path("/p/logger2.test.js"));
  // Leading whitespace belongs to the statement after it, so the blank line travels with the second test.
  std::string expected = std::string("// @odre generated level=test reorder=2 seed=1 source=logger.test.js\n") +
                         R"(

test('logger has not been called yet', () => {
  expect(logger.log).not.toHaveBeenCalled(); 
});test('calls logger once', () => {
  logger.log(`Test Log`);
  expect(logger.log).toHaveBeenCalledTimes(1);
});
)";
  EXPECT_EQ(artifact.content, expected);
}

TEST(Rewriter, IdentityOrderReproducesTheSource) {
  auto model = parse_suite("/p/logger.test.js", kListing1);
  auto plan = build_plan(std::vector<TestSuiteModel>{model}, config_for("/p", Level::test, 1));
  auto artifact = render_artifact(model, plan.targets[0], plan.targets[0].order_sets[0], Level::test, 1, "/p");
  EXPECT_EQ(strip_marker(artifact.content), kListing1);
}

TEST(Rewriter, AnchoredStatementsStayInPlace) {
  std::string src = R"(const a = 1;
test('x', () => {});
beforeEach(() => {});
test('y', () => {});
const b = 2;
test('z', () => {});
)";
  auto model = parse_suite("/p/s.test.js", src);
  auto plan = build_plan(std::vector<TestSuiteModel>{model}, config_for("/p", Level::test, 4));
  PlanTarget target = plan.targets[0];
  OrderSet set{1, {{target.containers[0].id, {2, 0, 1}}}};
  auto out = strip_marker(render_artifact(model, target, set, Level::test, 4, "/p").content);
  EXPECT_EQ(out, R"(const a = 1;
test('z', () => {});
beforeEach(() => {});
test('x', () => {});
const b = 2;
test('y', () => {});
)");
}

TEST(Rewriter, DescribeLevelMovesWholeBlocks) {
  std::string src = "describe('a', () => {\n  test('1', () => {});\n});\ndescribe('b', () => {\n  test('2', () => {});\n});\n";
  auto model = parse_suite("/p/Foo.test.js", src);
  auto plan = build_plan(std::vector<TestSuiteModel>{model}, config_for("/p", Level::describe, 1));
  auto artifact = render_artifact(model, plan.targets[0], plan.targets[0].order_sets[1], Level::describe, 1, "/p");
  EXPECT_EQ(artifact.output_path, std::filesystem::path("/p/Foodescribe2.test.js"));
  EXPECT_EQ(strip_marker(artifact.content),
            "\ndescribe('b', () => {\n  test('2', () => {});\n});describe('a', () => {\n  test('1', () => {});\n});\n");
}

TEST(Rewriter, RejectsNonBijection) {
  auto model = parse_suite("/p/logger.test.js", kListing1);
  auto plan = build_plan(std::vector<TestSuiteModel>{model}, config_for("/p", Level::test, 1));
  OrderSet bad{1, {{plan.targets[0].containers[0].id, {0, 0}}}};
  EXPECT_THROW(render_artifact(model, plan.targets[0], bad, Level::test, 1, "/p"), RewriteError);
}

TEST(Rewriter, AsiHazardIsCaughtByVerification) {
  // Moving the unterminated call in front of `(...)()` would merge the two statements.
  std::string src = "test('a', () => {})\ntest('b', () => {});\n(function () {})();\n";
  auto model = parse_suite("/p/asi.test.js", src);
  EXPECT_EQ(reconstruct(model), src);
  auto plan = build_plan(std::vector<TestSuiteModel>{model}, config_for("/p", Level::test, 1));
  ASSERT_EQ(plan.targets[0].order_sets.size(), 2u);
  EXPECT_NO_THROW(render_artifact(model, plan.targets[0], plan.targets[0].order_sets[0], Level::test, 1, "/p"));
  EXPECT_THROW(render_artifact(model, plan.targets[0], plan.targets[0].order_sets[1], Level::test, 1, "/p"),
               RewriteError);
}

TEST(Rewriter, MarkerHandlesHashbang) {
  auto marked = insert_marker("#!/usr/bin/env node\ntest('a', () => {});\n", "// @odre generated x");
  EXPECT_EQ(marked, "#!/usr/bin/env node\n// @odre generated x\ntest('a', () => {});\n");
  EXPECT_TRUE(has_provenance_marker(marked));
  EXPECT_EQ(strip_marker(marked), "#!/usr/bin/env node\ntest('a', () => {});\n");
}

TEST(Rewriter, WriteRefusesToClobberUserFiles) {
  ScratchDir dir;
  ReorderedArtifact artifact;
  artifact.output_path = dir.path() / "Foo1.test.js";
  artifact.content = "// @odre generated level=test reorder=1 seed=1 source=Foo.test.js\n";
  test_support::spit(artifact.output_path, "test('mine', () => {});\n");
  EXPECT_THROW(write_artifact(artifact), RewriteError);
  EXPECT_EQ(test_support::slurp(artifact.output_path), "test('mine', () => {});\n");

  std::filesystem::remove(artifact.output_path);
  write_artifact(artifact);
  EXPECT_EQ(test_support::slurp(artifact.output_path), artifact.content);
  write_artifact(artifact);  // a previously generated file may be replaced
}

TEST(Cleanup, DeletesOnlyMarkedFiles) {
  ScratchDir dir;
  auto marked = dir.path() / "A1.test.js";
  auto user = dir.path() / "A2.test.js";
  test_support::spit(marked, "// @odre generated level=test reorder=1 seed=1 source=A.test.js\n");
  test_support::spit(user, "test('x', () => {});\n");
  auto kept = cleanup({marked, user}, true);
  EXPECT_EQ(kept.kept.size(), 1u);
  EXPECT_TRUE(std::filesystem::exists(marked));
  auto report = cleanup({marked, user, dir.path() / "missing.test.js"}, false);
  EXPECT_EQ(report.removed, (std::vector<std::filesystem::path>{marked}));
  EXPECT_EQ(report.skipped_unmarked, (std::vector<std::filesystem::path>{user}));
  EXPECT_FALSE(std::filesystem::exists(marked));
  EXPECT_TRUE(std::filesystem::exists(user));
}

TEST(Rewriter, NodeSignaturesIgnoreOrder) {
  auto a = parse_suite("a.test.js", "test('x', () => {});\ntest('y', () => {});\n");
  auto b = parse_suite("b.test.js", "test('y', () => {});\ntest('x', () => {});\n");
  auto c = parse_suite("c.test.js", "test('y', () => {});\ntest.skip('x', () => {});\n");
  EXPECT_EQ(node_signatures(a), node_signatures(b));
  EXPECT_NE(node_signatures(a), node_signatures(c));
}
