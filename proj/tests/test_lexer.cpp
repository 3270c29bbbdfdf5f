#include <gtest/gtest.h>

#include "odre/js/lexer.hpp"

using odre::js::TokenKind;

namespace {

std::vector<std::string> texts(std::string_view src) {
  std::vector<std::string> out;
  for (const auto& t : odre::js::tokenize(src)) out.emplace_back(t.text(src));
  return out;
}

TokenKind kind_of(std::string_view src, std::string_view token) {
  for (const auto& t : odre::js::tokenize(src)) {
    if (t.text(src) == token) return t.kind;
  }
  ADD_FAILURE() << "token not found: " << token;
  return TokenKind::punctuator;
}

}  // namespace

TEST(Lexer, SkipsCommentsAndKeepsPositions) {
  std::string_view src = "a // line\n/* block */ b";
  auto toks = odre::js::tokenize(src);
  ASSERT_EQ(toks.size(), 2u);
  EXPECT_EQ(toks[1].text(src), "b");
  EXPECT_TRUE(toks[1].newline_before);
  EXPECT_FALSE(toks[0].newline_before);
}

TEST(Lexer, SlashAfterOperandIsDivision) {
  EXPECT_EQ(texts("a / b / c"), (std::vector<std::string>{"a", "/", "b", "/", "c"}));
  EXPECT_EQ(texts("x = (1) / 2"), (std::vector<std::string>{"x", "=", "(", "1", ")", "/", "2"}));
}

TEST(Lexer, SlashInExpressionPositionIsRegex) {
  EXPECT_EQ(kind_of("x = /a[/]b/g;", "/a[/]b/g"), TokenKind::regex);
  EXPECT_EQ(kind_of("return /}/.test(s)", "/}/"), TokenKind::regex);
  EXPECT_EQ(kind_of("f(/\\//)", "/\\//"), TokenKind::regex);
}

TEST(Lexer, TemplateLiteralIsOneTokenWithNestedBraces) {
  std::string_view src = "`a ${ {b: `c${d}`}.b } e` + 1";
  auto toks = odre::js::tokenize(src);
  ASSERT_GE(toks.size(), 1u);
  EXPECT_EQ(toks[0].kind, TokenKind::template_string);
  EXPECT_EQ(toks[0].text(src), "`a ${ {b: `c${d}`}.b } e`");
}

TEST(Lexer, StringsHideBracketsAndCommentMarkers) {
  auto t = texts("f('}', \"//\", '/*')");
  EXPECT_EQ(t, (std::vector<std::string>{"f", "(", "'}'", ",", "\"//\"", ",", "'/*'", ")"}));
}

TEST(Lexer, HashbangIsSkipped) {
  auto t = texts("#!/usr/bin/env node\nx");
  EXPECT_EQ(t, (std::vector<std::string>{"x"}));
}

TEST(Lexer, UnterminatedStringThrowsWithLocation) {
  try {
    odre::js::tokenize("a\nb = 'oops", "f.js");
    FAIL() << "expected ExtractionError";
  } catch (const odre::ExtractionError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Lexer, UnterminatedBlockCommentThrows) {
  EXPECT_THROW(odre::js::tokenize("a /* never closed"), odre::ExtractionError);
}

TEST(Lexer, DecodesStringLiterals) {
  EXPECT_EQ(odre::js::decode_string_literal("'it\\'s'"), "it's");
  EXPECT_EQ(odre::js::decode_string_literal("\"tab\\tnl\\n\""), "tab\tnl\n");
  EXPECT_EQ(odre::js::decode_string_literal("'\\x41\\u0042\\u{43}'"), "ABC");
  EXPECT_EQ(odre::js::decode_string_literal("'\\u2713'"), "\xE2\x9C\x93");
  EXPECT_EQ(odre::js::decode_string_literal("`plain`"), "plain");
}

TEST(Lexer, LocateReportsLineAndColumn) {
  auto loc = odre::js::locate("ab\ncd", 4);
  EXPECT_EQ(loc.line, 2u);
  EXPECT_EQ(loc.column, 2u);
}
