#pragma once

// Structural model of a Jest test file.
//
// Every byte of the file belongs to exactly one span: the prologue statements,
// the body statements (recursively for describe blocks with a block-bodied
// callback), or a trailing span. Leading comments and whitespace belong to the
// statement that follows them. reconstruct() walks the tree and concatenates
// spans, so a model whose sibling lists were permuted renders the permuted file.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "odre/common.hpp"
#include "odre/js/lexer.hpp"

namespace odre {

/// Half-open byte range into the original file.
struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
};

enum class NodeKind { describe, test };
enum class Modifier { none, only, skip, each, todo };
enum class HookKind { none, before_each, before_all, after_each, after_all };

inline std::string_view to_string(NodeKind kind) { return kind == NodeKind::describe ? "describe" : "test"; }

inline std::string_view to_string(Modifier modifier) {
  switch (modifier) {
    case Modifier::none: return "";
    case Modifier::only: return "only";
    case Modifier::skip: return "skip";
    case Modifier::each: return "each";
    case Modifier::todo: return "todo";
  }
  return "";
}

inline std::string_view to_string(HookKind hook) {
  switch (hook) {
    case HookKind::none: return "";
    case HookKind::before_each: return "beforeEach";
    case HookKind::before_all: return "beforeAll";
    case HookKind::after_each: return "afterEach";
    case HookKind::after_all: return "afterAll";
  }
  return "";
}

/// A statement that is never moved.
struct AnchoredStatement {
  SourceSpan span;
  std::size_t position_index = 0;
  HookKind hook = HookKind::none;
};

struct TestNode;
using Child = std::variant<TestNode, AnchoredStatement>;

struct TestNode {
  NodeKind kind = NodeKind::test;
  std::optional<std::string> name;  // nullopt when the title is not a plain literal
  Modifier modifier = Modifier::none;
  SourceSpan span;
  std::size_t position_index = 0;
  // Ancestor describe names; nullopt entries are dynamic titles.
  std::vector<std::optional<std::string>> container_path;
  // Describe blocks with a block-bodied callback own their statements. head and
  // tail cover the bytes before the first and after the last child; for other
  // nodes head == span and tail is empty.
  SourceSpan head;
  SourceSpan tail;
  bool has_body = false;
  std::vector<Child> children;

  bool is_dynamic() const { return !name.has_value(); }
};

struct TestSuiteModel {
  std::string file_path;
  std::string source;
  std::vector<AnchoredStatement> prologue;
  std::vector<Child> body;
  SourceSpan trailing;
  // Index of every recognised hook call, wherever it sits in the tree.
  std::vector<AnchoredStatement> hooks;
  std::vector<std::string> warnings;

  std::string_view text(SourceSpan span) const { return std::string_view(source).substr(span.begin, span.size()); }
};

inline std::string display_name(const std::optional<std::string>& name) { return name ? *name : "<dynamic>"; }

namespace detail {

class StructureParser {
 public:
  StructureParser(std::string_view source, std::string file)
      : src_(source), file_(std::move(file)), toks_(js::tokenize(source, file_)) {
    build_match_table();
  }

  TestSuiteModel parse() {
    TestSuiteModel model;
    model.file_path = file_;
    model.source = std::string(src_);

    std::vector<Child> all;
    std::size_t tail_begin = parse_block(0, toks_.size(), 0, {}, all, model);
    model.trailing = {tail_begin, src_.size()};

    bool in_body = false;
    for (auto& child : all) {
      if (!in_body && std::holds_alternative<TestNode>(child)) in_body = true;
      if (in_body) {
        model.body.push_back(std::move(child));
      } else {
        model.prologue.push_back(std::get<AnchoredStatement>(child));
      }
    }
    if (count_nodes(model.body) == 0) model.warnings.push_back("no describe/it/test constructs found");
    return model;
  }

 private:
  static std::size_t count_nodes(const std::vector<Child>& children) {
    std::size_t n = 0;
    for (const auto& c : children) {
      if (const auto* node = std::get_if<TestNode>(&c)) n += 1 + count_nodes(node->children);
    }
    return n;
  }

  [[noreturn]] void fail(std::size_t offset, const std::string& message) const {
    auto loc = js::locate(src_, offset);
    throw ExtractionError(file_, loc.line, loc.column, message);
  }

  std::string_view text(std::size_t i) const { return i < toks_.size() ? toks_[i].text(src_) : std::string_view{}; }
  bool is_punct(std::size_t i, std::string_view p) const {
    return i < toks_.size() && toks_[i].kind == js::TokenKind::punctuator && text(i) == p;
  }
  bool is_ident(std::size_t i, std::string_view name) const {
    return i < toks_.size() && toks_[i].kind == js::TokenKind::identifier && text(i) == name;
  }
  bool is_ident(std::size_t i) const { return i < toks_.size() && toks_[i].kind == js::TokenKind::identifier; }

  void build_match_table() {
    match_.assign(toks_.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < toks_.size(); ++i) {
      if (toks_[i].kind != js::TokenKind::punctuator) continue;
      auto t = text(i);
      if (t == "(" || t == "[" || t == "{") {
        stack.push_back(i);
      } else if (t == ")" || t == "]" || t == "}") {
        if (stack.empty()) fail(toks_[i].begin, fmt::format("unmatched '{}'", t));
        std::size_t open = stack.back();
        stack.pop_back();
        char expected = text(open) == "(" ? ')' : text(open) == "[" ? ']' : '}';
        if (t[0] != expected) fail(toks_[i].begin, fmt::format("expected '{}' but found '{}'", expected, t));
        match_[open] = i;
        match_[i] = open;
      }
    }
    if (!stack.empty()) fail(toks_[stack.back()].begin, fmt::format("unclosed '{}'", text(stack.back())));
  }

  std::size_t after_group(std::size_t i, std::size_t limit) const {
    if (i >= limit || !(is_punct(i, "(") || is_punct(i, "[") || is_punct(i, "{"))) {
      fail(i < toks_.size() ? toks_[i].begin : src_.size(), "expected an opening bracket");
    }
    return match_[i] + 1;
  }

  // Whether a token can be the last token of an expression.
  bool ends_expression(std::size_t i) const {
    const auto& tok = toks_[i];
    switch (tok.kind) {
      case js::TokenKind::identifier: {
        static constexpr std::array<std::string_view, 13> open_words = {
            "in", "instanceof", "typeof", "new", "delete", "void", "await", "extends", "case", "else", "do", "export",
            "default"};
        return std::find(open_words.begin(), open_words.end(), text(i)) == open_words.end();
      }
      case js::TokenKind::punctuator: {
        auto t = text(i);
        return t == ")" || t == "]" || t == "}" || t == "++" || t == "--";
      }
      default: return true;
    }
  }

  // Whether a token at the start of a new line continues the previous expression.
  bool continues_expression(std::size_t i) const {
    const auto& tok = toks_[i];
    switch (tok.kind) {
      case js::TokenKind::template_string: return true;
      case js::TokenKind::identifier: {
        auto t = text(i);
        return t == "in" || t == "instanceof" || t == "as" || t == "satisfies";
      }
      case js::TokenKind::punctuator: {
        auto t = text(i);
        return !(t == "++" || t == "--" || t == "!" || t == "~" || t == "{" || t == "..." || t == "@" ||
                 t == "#" || t == ";");
      }
      default: return false;
    }
  }

  std::size_t expression_end(std::size_t i, std::size_t limit) const {
    std::size_t j = i;
    while (j < limit) {
      if (j > i && toks_[j].newline_before && ends_expression(j - 1) && !continues_expression(j)) return j;
      if (is_punct(j, ";")) return j + 1;
      if (is_punct(j, "(") || is_punct(j, "[") || is_punct(j, "{")) {
        j = match_[j] + 1;
        continue;
      }
      if (is_punct(j, ")") || is_punct(j, "]") || is_punct(j, "}")) return j;
      ++j;
    }
    return j;
  }

  std::size_t skip_optional_semicolon(std::size_t j, std::size_t limit) const {
    return (j < limit && is_punct(j, ";")) ? j + 1 : j;
  }

  std::size_t function_end(std::size_t i, std::size_t limit) const {
    std::size_t j = i;
    while (j < limit && !is_punct(j, "(")) ++j;
    if (j >= limit) fail(toks_[i].begin, "malformed function declaration");
    j = match_[j] + 1;
    while (j < limit && !is_punct(j, "{")) {
      if (is_punct(j, ";")) return j + 1;  // overload signature / declare
      if (is_punct(j, "(") || is_punct(j, "[")) {
        j = match_[j] + 1;
        continue;
      }
      ++j;
    }
    if (j >= limit) fail(toks_[i].begin, "function declaration without a body");
    return match_[j] + 1;
  }

  std::size_t class_end(std::size_t i, std::size_t limit) const {
    std::size_t j = i + 1;
    while (j < limit && !is_punct(j, "{")) {
      if (is_punct(j, "(") || is_punct(j, "[")) {
        j = match_[j] + 1;
        continue;
      }
      ++j;
    }
    if (j >= limit) fail(toks_[i].begin, "class declaration without a body");
    return match_[j] + 1;
  }

  // Index one past the last token of the statement starting at token i.
  std::size_t statement_end(std::size_t i, std::size_t limit) const {
    if (i >= limit) fail(i < toks_.size() ? toks_[i].begin : src_.size(), "expected a statement");
    if (is_punct(i, "{")) return match_[i] + 1;
    if (is_punct(i, ";")) return i + 1;
    if (is_punct(i, ")") || is_punct(i, "]") || is_punct(i, "}")) fail(toks_[i].begin, "unexpected closing bracket");
    if (!is_ident(i)) return expression_end(i, limit);

    // `x.if`, `x = ...` style uses of keywords never start a statement, so a
    // following `.`, `=` or `:` means this is an ordinary expression.
    auto word = text(i);
    bool member_like = is_punct(i + 1, ".") || is_punct(i + 1, "?.") || is_punct(i + 1, "=");
    if (member_like) return expression_end(i, limit);

    if (word == "if") {
      std::size_t j = statement_end(after_group(i + 1, limit), limit);
      if (j < limit && is_ident(j, "else")) j = statement_end(j + 1, limit);
      return j;
    }
    if (word == "for") {
      std::size_t j = i + 1;
      if (is_ident(j, "await")) ++j;
      return statement_end(after_group(j, limit), limit);
    }
    if (word == "while" || word == "with") return statement_end(after_group(i + 1, limit), limit);
    if (word == "do") {
      std::size_t j = statement_end(i + 1, limit);
      if (j < limit && is_ident(j, "while")) j = skip_optional_semicolon(after_group(j + 1, limit), limit);
      return j;
    }
    if (word == "try") {
      std::size_t j = after_group(i + 1, limit);
      if (j < limit && is_ident(j, "catch")) {
        ++j;
        if (is_punct(j, "(")) j = match_[j] + 1;
        j = after_group(j, limit);
      }
      if (j < limit && is_ident(j, "finally")) j = after_group(j + 1, limit);
      return j;
    }
    if (word == "switch") return after_group(after_group(i + 1, limit), limit);
    if (word == "function") return function_end(i, limit);
    if (word == "async" && is_ident(i + 1, "function") && !toks_[i + 1].newline_before) return function_end(i + 1, limit);
    if (word == "class") return class_end(i, limit);
    if (word == "export") {
      std::size_t k = is_ident(i + 1, "default") ? i + 2 : i + 1;
      if (is_ident(k, "function")) return function_end(k, limit);
      if (is_ident(k, "async") && is_ident(k + 1, "function")) return function_end(k + 1, limit);
      if (is_ident(k, "class")) return class_end(k, limit);
      return expression_end(i, limit);
    }
    if (word == "return" || word == "break" || word == "continue" || word == "debugger") {
      std::size_t j = i + 1;
      if (j >= limit || toks_[j].newline_before || is_punct(j, "}")) return j;
      if (is_punct(j, ";")) return j + 1;
      return expression_end(i, limit);
    }
    if (is_punct(i + 1, ":")) return statement_end(i + 2, limit);  // label
    return expression_end(i, limit);
  }

  struct Callee {
    bool valid = false;
    NodeKind kind = NodeKind::test;
    Modifier modifier = Modifier::none;
    HookKind hook = HookKind::none;
    std::size_t title_call_open = 0;  // index of the `(` of the call holding title and callback
  };

  // Recognises `describe|it|test[.modifier](...)`, `x.each(table)(...)` and hooks
  // when they form the whole statement [first, last).
  Callee classify_call(std::size_t first, std::size_t last) const {
    Callee result;
    if (last > first && is_punct(last - 1, ";")) --last;
    if (!is_ident(first) || last <= first) return result;
    auto word = text(first);

    static constexpr std::array<std::pair<std::string_view, HookKind>, 4> hooks = {{
        {"beforeEach", HookKind::before_each},
        {"beforeAll", HookKind::before_all},
        {"afterEach", HookKind::after_each},
        {"afterAll", HookKind::after_all},
    }};
    for (auto [hook_name, kind] : hooks) {
      if (word == hook_name && is_punct(first + 1, "(") && match_[first + 1] + 1 == last) {
        result.hook = kind;
        return result;
      }
    }

    if (word != "describe" && word != "it" && word != "test") return result;
    std::size_t j = first + 1;
    Modifier modifier = Modifier::none;
    if (is_punct(j, ".")) {
      if (!is_ident(j + 1)) return result;
      auto member = text(j + 1);
      if (member == "only") modifier = Modifier::only;
      else if (member == "skip") modifier = Modifier::skip;
      else if (member == "each") modifier = Modifier::each;
      else if (member == "todo") modifier = Modifier::todo;
      else return result;
      j += 2;
    }
    if (modifier == Modifier::each) {
      if (j < last && toks_[j].kind == js::TokenKind::template_string) {
        ++j;
      } else if (is_punct(j, "(")) {
        j = match_[j] + 1;
      } else {
        return result;
      }
    }
    if (!is_punct(j, "(") || match_[j] + 1 != last) return result;
    result.valid = true;
    result.kind = word == "describe" ? NodeKind::describe : NodeKind::test;
    result.modifier = modifier;
    result.title_call_open = j;
    return result;
  }

  // Splits the arguments of the call opened at `open` into token ranges.
  std::vector<std::pair<std::size_t, std::size_t>> call_arguments(std::size_t open) const {
    std::vector<std::pair<std::size_t, std::size_t>> args;
    std::size_t close = match_[open];
    std::size_t start = open + 1;
    std::size_t j = start;
    while (j < close) {
      if (is_punct(j, "(") || is_punct(j, "[") || is_punct(j, "{")) {
        j = match_[j] + 1;
        continue;
      }
      if (is_punct(j, ",")) {
        args.emplace_back(start, j);
        start = j + 1;
      }
      ++j;
    }
    if (start < close) args.emplace_back(start, close);
    return args;
  }

  std::optional<std::string> literal_title(std::pair<std::size_t, std::size_t> arg) const {
    if (arg.second - arg.first != 1) return std::nullopt;
    const auto& tok = toks_[arg.first];
    auto t = tok.text(src_);
    if (tok.kind == js::TokenKind::string) return js::decode_string_literal(t);
    if (tok.kind == js::TokenKind::template_string && t.find("${") == std::string_view::npos) {
      return js::decode_string_literal(t);
    }
    return std::nullopt;
  }

  // Finds the `{` opening a block-bodied callback in [first, last).
  std::optional<std::size_t> callback_body(std::pair<std::size_t, std::size_t> arg) const {
    auto [first, last] = arg;
    std::size_t j = first;
    if (is_ident(j, "async")) ++j;
    if (is_ident(j, "function")) {
      while (j < last && !is_punct(j, "(")) ++j;
      if (j >= last) return std::nullopt;
      j = match_[j] + 1;
      while (j < last && !is_punct(j, "{")) ++j;
      if (j < last && match_[j] + 1 == last) return j;
      return std::nullopt;
    }
    for (std::size_t k = j; k < last; ++k) {
      if (is_punct(k, "(") || is_punct(k, "[")) {
        k = match_[k];
        continue;
      }
      if (is_punct(k, "{") && !is_punct(k - 1, "=>")) {
        k = match_[k];
        continue;
      }
      if (is_punct(k, "=>")) {
        if (is_punct(k + 1, "{") && match_[k + 1] + 1 == last) return k + 1;
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  // Parses the statements in tokens [first, limit). Byte coverage starts at
  // `byte_begin`; returns where the unclaimed tail of the block begins.
  std::size_t parse_block(std::size_t first, std::size_t limit, std::size_t byte_begin,
                          const std::vector<std::optional<std::string>>& path, std::vector<Child>& out,
                          TestSuiteModel& model) {
    std::size_t cursor = byte_begin;
    std::size_t i = first;
    while (i < limit) {
      std::size_t end = statement_end(i, limit);
      if (end <= i) fail(toks_[i].begin, "unexpected token");
      SourceSpan span{cursor, toks_[end - 1].end};
      Callee callee = classify_call(i, end);
      std::size_t position = out.size();
      if (callee.valid) {
        out.emplace_back(build_node(callee, span, position, path, model));
      } else {
        AnchoredStatement stmt{span, position, callee.hook};
        if (stmt.hook != HookKind::none) model.hooks.push_back(stmt);
        out.emplace_back(stmt);
      }
      cursor = span.end;
      i = end;
    }
    return cursor;
  }

  TestNode build_node(const Callee& callee, SourceSpan span, std::size_t position,
                      const std::vector<std::optional<std::string>>& path, TestSuiteModel& model) {
    TestNode node;
    node.kind = callee.kind;
    node.modifier = callee.modifier;
    node.span = span;
    node.position_index = position;
    node.container_path = path;
    node.head = span;
    node.tail = {span.end, span.end};

    auto args = call_arguments(callee.title_call_open);
    if (!args.empty()) node.name = literal_title(args.front());

    if (node.kind == NodeKind::describe && args.size() >= 2) {
      if (auto open = callback_body(args[1])) {
        std::size_t close = match_[*open];
        auto child_path = path;
        child_path.push_back(node.name);
        node.has_body = true;
        std::size_t body_begin = toks_[*open].end;
        std::size_t tail_begin = parse_block(*open + 1, close, body_begin, child_path, node.children, model);
        node.head = {span.begin, body_begin};
        node.tail = {tail_begin, span.end};
      }
    }
    return node;
  }

  std::string_view src_;
  std::string file_;
  std::vector<js::Token> toks_;
  std::vector<std::size_t> match_;
};

inline void render(const TestSuiteModel& model, const Child& child, std::string& out) {
  if (const auto* stmt = std::get_if<AnchoredStatement>(&child)) {
    out += model.text(stmt->span);
    return;
  }
  const auto& node = std::get<TestNode>(child);
  out += model.text(node.head);
  for (const auto& c : node.children) render(model, c, out);
  out += model.text(node.tail);
}

}  // namespace detail

/// Parses a test file into its structural model.
///
/// A statement is a test construct when it is a call whose callee is the
/// identifier `describe`, `it` or `test`, optionally behind one member access
/// (`.only`, `.skip`, `.each`, `.todo`). Calls nested in loops, functions or
/// conditionals stay part of the enclosing anchored statement. Aliased test
/// functions are not recognised.
inline TestSuiteModel parse_suite(std::string file_path, std::string_view source) {
  return detail::StructureParser(source, std::move(file_path)).parse();
}

/// Renders the model back to bytes in its current sibling order.
inline std::string reconstruct(const TestSuiteModel& model) {
  std::string out;
  out.reserve(model.source.size());
  for (const auto& stmt : model.prologue) out += model.text(stmt.span);
  for (const auto& child : model.body) detail::render(model, child, out);
  out += model.text(model.trailing);
  return out;
}

/// Visits every TestNode depth-first in current sibling order.
template <typename Fn>
void for_each_node(const std::vector<Child>& children, Fn&& fn) {
  for (const auto& child : children) {
    if (const auto* node = std::get_if<TestNode>(&child)) {
      fn(*node);
      for_each_node(node->children, fn);
    }
  }
}

template <typename Fn>
void for_each_node(const TestSuiteModel& model, Fn&& fn) {
  for_each_node(model.body, fn);
}

inline std::size_t count_nodes(const TestSuiteModel& model, NodeKind kind) {
  std::size_t n = 0;
  for_each_node(model, [&](const TestNode& node) { n += node.kind == kind ? 1 : 0; });
  return n;
}

}  // namespace odre
