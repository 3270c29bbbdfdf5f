#pragma once

// Tokenizer for ECMAScript (and the TypeScript superset as far as bracket
// structure goes). It exists to find statement boundaries, so templates are
// single tokens and comments are skipped entirely.

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "odre/common.hpp"

namespace odre::js {

enum class TokenKind {
  identifier,  // includes keywords
  punctuator,
  string,
  template_string,
  number,
  regex,
  private_name,
};

struct Token {
  TokenKind kind;
  std::size_t begin;
  std::size_t end;
  bool newline_before = false;

  std::string_view text(std::string_view source) const { return source.substr(begin, end - begin); }
};

/// 1-based line and column of a byte offset.
struct Location {
  std::size_t line;
  std::size_t column;
};

inline Location locate(std::string_view source, std::size_t offset) {
  Location loc{1, 1};
  offset = std::min(offset, source.size());
  for (std::size_t i = 0; i < offset; ++i) {
    if (source[i] == '\n') {
      ++loc.line;
      loc.column = 1;
    } else {
      ++loc.column;
    }
  }
  return loc;
}

namespace detail {

inline bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c == '\\' || c >= 0x80;
}

inline bool is_ident_part(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Keywords after which a slash starts a regular expression.
inline bool keyword_precedes_expression(std::string_view word) {
  static constexpr std::array<std::string_view, 16> words = {
      "return", "typeof", "instanceof", "in",    "of",    "new",   "delete", "void",
      "throw",  "case",   "do",         "else",  "yield", "await", "extends", "export"};
  return std::find(words.begin(), words.end(), word) != words.end();
}

class Lexer {
 public:
  Lexer(std::string_view source, std::string file) : src_(source), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    skip_hashbang();
    while (true) {
      bool newline = skip_trivia();
      if (pos_ >= src_.size()) break;
      Token tok = next(newline);
      out.push_back(tok);
    }
    return out;
  }

 private:
  [[noreturn]] void fail(std::size_t offset, const std::string& message) const {
    auto loc = locate(src_, offset);
    throw ExtractionError(file_, loc.line, loc.column, message);
  }

  unsigned char at(std::size_t i) const { return i < src_.size() ? static_cast<unsigned char>(src_[i]) : 0; }

  // Length of a line terminator at i, or 0.
  std::size_t line_terminator(std::size_t i) const {
    unsigned char c = at(i);
    if (c == '\n' || c == '\r') return 1;
    if (c == 0xE2 && at(i + 1) == 0x80 && (at(i + 2) == 0xA8 || at(i + 2) == 0xA9)) return 3;
    return 0;
  }

  // Non-newline whitespace length at i, or 0.
  std::size_t whitespace(std::size_t i) const {
    unsigned char c = at(i);
    if (c == ' ' || c == '\t' || c == '\v' || c == '\f') return 1;
    if (c == 0xC2 && at(i + 1) == 0xA0) return 2;                       // NBSP
    if (c == 0xEF && at(i + 1) == 0xBB && at(i + 2) == 0xBF) return 3;  // BOM
    return 0;
  }

  void skip_hashbang() {
    if (src_.substr(0, 2) == "#!") {
      while (pos_ < src_.size() && line_terminator(pos_) == 0) ++pos_;
    }
  }

  // Returns true when a line terminator was crossed.
  bool skip_trivia() {
    bool newline = false;
    while (pos_ < src_.size()) {
      if (auto n = whitespace(pos_)) {
        pos_ += n;
      } else if (auto n = line_terminator(pos_)) {
        pos_ += n;
        newline = true;
      } else if (at(pos_) == '/' && at(pos_ + 1) == '/') {
        while (pos_ < src_.size() && line_terminator(pos_) == 0) ++pos_;
      } else if (at(pos_) == '/' && at(pos_ + 1) == '*') {
        std::size_t close = src_.find("*/", pos_ + 2);
        if (close == std::string_view::npos) fail(pos_, "unterminated block comment");
        for (std::size_t i = pos_; i < close; ++i) {
          if (line_terminator(i)) newline = true;
        }
        pos_ = close + 2;
      } else {
        break;
      }
    }
    return newline;
  }

  bool regex_allowed() const {
    if (!has_last_) return true;
    switch (last_.kind) {
      case TokenKind::identifier: return keyword_precedes_expression(last_.text(src_));
      case TokenKind::punctuator: {
        auto t = last_.text(src_);
        return !(t == ")" || t == "]" || t == "++" || t == "--");
      }
      default: return false;
    }
  }

  Token next(bool newline) {
    std::size_t start = pos_;
    unsigned char c = at(pos_);
    TokenKind kind;
    if (c == '"' || c == '\'') {
      lex_string(c);
      kind = TokenKind::string;
    } else if (c == '`') {
      lex_template();
      kind = TokenKind::template_string;
    } else if (is_digit(c) || (c == '.' && is_digit(at(pos_ + 1)))) {
      lex_number();
      kind = TokenKind::number;
    } else if (c == '#' && is_ident_start(at(pos_ + 1))) {
      ++pos_;
      lex_identifier();
      kind = TokenKind::private_name;
    } else if (is_ident_start(c)) {
      lex_identifier();
      kind = TokenKind::identifier;
    } else if (c == '/' && regex_allowed()) {
      lex_regex();
      kind = TokenKind::regex;
    } else {
      lex_punctuator();
      kind = TokenKind::punctuator;
    }
    Token tok{kind, start, pos_, newline};
    last_ = tok;
    has_last_ = true;
    return tok;
  }

  void lex_string(unsigned char quote) {
    std::size_t start = pos_++;
    while (true) {
      if (pos_ >= src_.size()) fail(start, "unterminated string literal");
      unsigned char c = at(pos_);
      if (c == quote) {
        ++pos_;
        return;
      }
      if (c == '\\') {
        pos_ += 2;
        if (at(pos_ - 1) == '\r' && at(pos_) == '\n') ++pos_;
        continue;
      }
      if (c == '\n' || c == '\r') fail(start, "unterminated string literal");
      ++pos_;
    }
  }

  void lex_template() {
    std::size_t start = pos_++;
    while (true) {
      if (pos_ >= src_.size()) fail(start, "unterminated template literal");
      unsigned char c = at(pos_);
      if (c == '`') {
        ++pos_;
        return;
      }
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      if (c == '$' && at(pos_ + 1) == '{') {
        pos_ += 2;
        skip_substitution(start);
        continue;
      }
      ++pos_;
    }
  }

  // Consumes tokens up to and including the `}` closing a `${`.
  void skip_substitution(std::size_t template_start) {
    Token saved = last_;
    bool saved_has = has_last_;
    has_last_ = false;
    int depth = 0;
    while (true) {
      bool newline = skip_trivia();
      if (pos_ >= src_.size()) fail(template_start, "unterminated template literal");
      unsigned char c = at(pos_);
      if (c == '}' && depth == 0) {
        ++pos_;
        break;
      }
      Token tok = next(newline);
      auto t = tok.text(src_);
      if (tok.kind == TokenKind::punctuator) {
        if (t == "{") ++depth;
        if (t == "}") --depth;
      }
    }
    last_ = saved;
    has_last_ = saved_has;
  }

  void lex_number() {
    bool radix = at(pos_) == '0' && (std::string_view("xXoObB").find(static_cast<char>(at(pos_ + 1))) !=
                                     std::string_view::npos);
    while (pos_ < src_.size()) {
      unsigned char c = at(pos_);
      if (is_ident_part(c) || c == '.') {
        ++pos_;
      } else if ((c == '+' || c == '-') && !radix && (at(pos_ - 1) == 'e' || at(pos_ - 1) == 'E')) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  void lex_identifier() {
    while (pos_ < src_.size()) {
      unsigned char c = at(pos_);
      if (line_terminator(pos_) || whitespace(pos_)) break;
      if (c == '\\' && at(pos_ + 1) == 'u') {
        pos_ += 2;
        continue;
      }
      if (!is_ident_part(c)) break;
      ++pos_;
    }
  }

  void lex_regex() {
    std::size_t start = pos_++;
    bool in_class = false;
    while (true) {
      if (pos_ >= src_.size() || line_terminator(pos_)) fail(start, "unterminated regular expression");
      unsigned char c = at(pos_);
      if (c == '\\') {
        pos_ += 2;
        continue;
      }
      if (c == '[') in_class = true;
      if (c == ']') in_class = false;
      ++pos_;
      if (c == '/' && !in_class) break;
    }
    while (pos_ < src_.size() && is_ident_part(at(pos_))) ++pos_;
  }

  void lex_punctuator() {
    static constexpr std::array<std::string_view, 48> table = {
        ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "?\?=", "=>",
        "==",   "!=",  "<=",  ">=",  "&&",  "||",  "??",  "?.",  "++",  "--",  "+=",  "-=",
        "*=",   "/=",  "%=",  "&=",  "|=",  "^=",  "**",  "<<",  ">>",  "{",   "}",   "(",
        ")",    "[",   "]",   ";",   ",",   "<",   ">",   "+",   "-",   "*",   "/",   "%"};
    static constexpr std::string_view singles = "&|^!~?:=.@#";
    auto rest = src_.substr(pos_);
    for (auto p : table) {
      if (rest.substr(0, p.size()) == p) {
        // `?.5` is a conditional followed by a number.
        if (p == "?." && is_digit(at(pos_ + 2))) continue;
        pos_ += p.size();
        return;
      }
    }
    if (singles.find(static_cast<char>(at(pos_))) != std::string_view::npos) {
      ++pos_;
      return;
    }
    fail(pos_, fmt::format("unexpected character 0x{:02x}", at(pos_)));
  }

  std::string_view src_;
  std::string file_;
  std::size_t pos_ = 0;
  Token last_{TokenKind::punctuator, 0, 0, false};
  bool has_last_ = false;
};

}  // namespace detail

/// Splits `source` into tokens. Throws ExtractionError on lexical errors
/// (unterminated strings, templates, comments or regular expressions).
inline std::vector<Token> tokenize(std::string_view source, std::string file = {}) {
  return detail::Lexer(source, std::move(file)).run();
}

/// Decodes the value of a string literal token (quotes included in `literal`).
/// Template literals without substitutions are accepted as well.
inline std::string decode_string_literal(std::string_view literal) {
  std::string out;
  if (literal.size() < 2) return out;
  auto body = literal.substr(1, literal.size() - 2);
  auto append_utf8 = [&out](unsigned long cp) {
    if (cp < 0x80) {
      out += static_cast<char>(cp);
    } else if (cp < 0x800) {
      out += static_cast<char>(0xC0 | (cp >> 6));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
      out += static_cast<char>(0xE0 | (cp >> 12));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
      out += static_cast<char>(0xF0 | (cp >> 18));
      out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
      out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
      out += static_cast<char>(0x80 | (cp & 0x3F));
    }
  };
  auto hex = [&](std::size_t from, std::size_t count) -> unsigned long {
    return std::stoul(std::string(body.substr(from, count)), nullptr, 16);
  };
  for (std::size_t i = 0; i < body.size(); ++i) {
    char c = body[i];
    if (c != '\\' || i + 1 >= body.size()) {
      out += c;
      continue;
    }
    char e = body[++i];
    switch (e) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case 'b': out += '\b'; break;
      case 'f': out += '\f'; break;
      case 'v': out += '\v'; break;
      case '0': out += '\0'; break;
      case '\r':
        if (i + 1 < body.size() && body[i + 1] == '\n') ++i;
        break;
      case '\n': break;
      case 'x':
        if (i + 2 < body.size()) {
          append_utf8(hex(i + 1, 2));
          i += 2;
        }
        break;
      case 'u':
        if (i + 1 < body.size() && body[i + 1] == '{') {
          auto close = body.find('}', i + 2);
          if (close != std::string_view::npos) {
            append_utf8(hex(i + 2, close - i - 2));
            i = close;
          }
        } else if (i + 4 < body.size()) {
          unsigned long cp = hex(i + 1, 4);
          i += 4;
          // Surrogate pair.
          if (cp >= 0xD800 && cp <= 0xDBFF && i + 6 < body.size() && body[i + 1] == '\\' && body[i + 2] == 'u') {
            unsigned long low = hex(i + 3, 4);
            if (low >= 0xDC00 && low <= 0xDFFF) {
              cp = 0x10000 + ((cp - 0xD800) << 10) + (low - 0xDC00);
              i += 6;
            }
          }
          append_utf8(cp);
        }
        break;
      default: out += e; break;
    }
  }
  return out;
}

}  // namespace odre::js
