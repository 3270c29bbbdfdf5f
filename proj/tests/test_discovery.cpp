#include <gtest/gtest.h>

#include "odre/discovery.hpp"
#include "test_support.hpp"

using namespace odre;
using test_support::spit;

TEST(Discovery, ParsesListTestsOutput) {
  test_support::ScratchDir dir;
  auto root = dir.path();
  spit(root / "b.test.js", "test('b', () => {});\n");
  spit(root / "a.test.js", "test('a', () => {});\n");
  std::string out = (root / "b.test.js").string() + "\n" + "some banner\n" + (root / "a.test.js").string() +
                    "\r\n" + (root / "a.test.js").string() + "\n\n";
  auto inv = parse_list_tests_output(root, out);
  EXPECT_EQ(inv.files, (std::vector<std::filesystem::path>{root / "a.test.js", root / "b.test.js"}));
  EXPECT_EQ(inv.discovery_method, DiscoveryMethod::list_tests);
  EXPECT_TRUE(inv.warnings.empty());
}

TEST(Discovery, ExcludesGeneratedFiles) {
  test_support::ScratchDir dir;
  auto root = dir.path();
  spit(root / "Foo.test.js", "test('a', () => {});\n");
  spit(root / "Foo1.test.js", "// @odre generated level=test reorder=1 seed=1 source=Foo.test.js\ntest('a', () => {});\n");
  auto inv = parse_list_tests_output(root, (root / "Foo.test.js").string() + "\n" + (root / "Foo1.test.js").string());
  EXPECT_EQ(inv.files, (std::vector<std::filesystem::path>{root / "Foo.test.js"}));
  EXPECT_EQ(inv.excluded_generated, (std::vector<std::filesystem::path>{root / "Foo1.test.js"}));
}

TEST(Discovery, EmptyListWarns) {
  test_support::ScratchDir dir;
  auto inv = parse_list_tests_output(dir.path(), "");
  EXPECT_TRUE(inv.files.empty());
  EXPECT_EQ(inv.discovery_method, DiscoveryMethod::none);
  EXPECT_EQ(inv.warnings.size(), 1u);
}

TEST(Discovery, FlagsFilesOutsideTheProject) {
  test_support::ScratchDir dir;
  spit(dir.path() / "proj" / "package.json", "{}");
  spit(dir.path() / "shared.test.js", "test('a', () => {});\n");
  auto inv = parse_list_tests_output(dir.path() / "proj", (dir.path() / "shared.test.js").string());
  EXPECT_EQ(inv.files.size(), 1u);
  EXPECT_EQ(inv.outside_project.size(), 1u);
  EXPECT_EQ(inv.warnings.size(), 1u);
}

TEST(Discovery, FailingJestRaisesWithStderr) {
  test_support::ScratchDir dir;
  auto fake = dir.path() / "jest";
  spit(fake, "#!/bin/sh\necho 'config is broken' >&2\nexit 1\n");
  std::filesystem::permissions(fake, std::filesystem::perms::owner_all);
  Config c;
  c.project_path = dir.path();
  c.jest_invocation = {fake.string()};
  try {
    list_test_files(c);
    FAIL() << "expected DiscoveryError";
  } catch (const DiscoveryError& e) {
    EXPECT_NE(e.stderr_text().find("config is broken"), std::string::npos);
  }
}

TEST(Provenance, MarkerFormat) {
  EXPECT_EQ(provenance_marker(Level::describe, 3, 42, "src/Foo.test.js"),
            "// @odre generated level=describe reorder=3 seed=42 source=src/Foo.test.js");
  EXPECT_TRUE(has_provenance_marker("// @odre generated level=test\n"));
  EXPECT_FALSE(has_provenance_marker("\n// @odre generated level=test\n"));
  EXPECT_FALSE(has_provenance_marker("test('a', () => {});"));
}
