#include "obo/parser.hpp"

#include <algorithm>
#include <cassert>
#include <optional>
#include <string>

#include "obo/error.hpp"
#include "obo/lexer.hpp"

namespace obo {

namespace {

bool is_modifier(const Token& t) {
  if (t.kind != TokKind::Keyword) return false;
  return t.text == "public" || t.text == "private" || t.text == "protected" ||
         t.text == "static" || t.text == "final" || t.text == "abstract" ||
         t.text == "native" || t.text == "synchronized" || t.text == "strictfp" ||
         t.text == "transient" || t.text == "volatile" || t.text == "default";
}

bool is_primitive(const Token& t) {
  if (t.kind != TokKind::Keyword) return false;
  return t.text == "boolean" || t.text == "byte" || t.text == "short" || t.text == "int" ||
         t.text == "long" || t.text == "char" || t.text == "float" || t.text == "double" ||
         t.text == "void";
}

bool is_type_decl_kw(const Token& t) {
  return t.kind == TokKind::Keyword &&
         (t.text == "class" || t.text == "interface" || t.text == "enum");
}

[[noreturn]] void parse_error(const Token& t, const std::string& what) {
  fail(Errc::ParseFailure,
       what + " near byte " + std::to_string(t.begin) + " (token '" + t.text + "')");
}

// ---------------------------------------------------------------------------
// Structural scanner: locates method/constructor spans without building ASTs.
// ---------------------------------------------------------------------------

class SpanScanner {
 public:
  explicit SpanScanner(const std::vector<Token>& toks) : t_(toks) {}

  std::vector<MethodSpan> run() {
    std::size_t i = 0;
    while (!at_end(i)) {
      if (t_[i].is(TokKind::Keyword, "package") || t_[i].is(TokKind::Keyword, "import")) {
        i = skip_to_semi(i);
        continue;
      }
      if (t_[i].is(TokKind::Punct, ";")) {
        ++i;
        continue;
      }
      i = scan_type_decl(i);
    }
    std::sort(out_.begin(), out_.end(),
              [](const MethodSpan& a, const MethodSpan& b) { return a.begin < b.begin; });
    return std::move(out_);
  }

 private:
  const std::vector<Token>& t_;
  std::vector<MethodSpan> out_;

  bool at_end(std::size_t i) const { return t_[i].kind == TokKind::End; }

  std::size_t skip_to_semi(std::size_t i) const {
    while (!at_end(i) && !t_[i].is(TokKind::Punct, ";")) ++i;
    return at_end(i) ? i : i + 1;
  }

  std::size_t skip_annotation(std::size_t i) const {
    // i at '@'. Consumes @Qualified.Name and an optional argument list.
    ++i;
    while (t_[i].kind == TokKind::Ident || t_[i].is(TokKind::Punct, ".")) ++i;
    if (t_[i].is(TokKind::Punct, "(")) i = skip_balanced(i, "(", ")");
    return i;
  }

  std::size_t skip_balanced(std::size_t i, std::string_view open, std::string_view close) const {
    if (!t_[i].is(TokKind::Punct, open)) parse_error(t_[i], "expected '" + std::string(open) + "'");
    int depth = 0;
    while (!at_end(i)) {
      if (t_[i].is(TokKind::Punct, open)) ++depth;
      if (t_[i].is(TokKind::Punct, close)) {
        --depth;
        if (depth == 0) return i + 1;
      }
      ++i;
    }
    parse_error(t_.back(), "unbalanced '" + std::string(open) + "'");
  }

  // Skips a generic argument list starting at '<'. Tokens '>>' and '>>>'
  // close several levels at once.
  std::size_t skip_type_args(std::size_t i) const {
    int depth = 0;
    while (!at_end(i)) {
      const Token& tk = t_[i];
      if (tk.is(TokKind::Operator, "<")) {
        ++depth;
      } else if (tk.is(TokKind::Operator, ">")) {
        depth -= 1;
      } else if (tk.is(TokKind::Operator, ">>")) {
        depth -= 2;
      } else if (tk.is(TokKind::Operator, ">>>")) {
        depth -= 3;
      }
      ++i;
      if (depth <= 0) return i;
    }
    parse_error(t_.back(), "unbalanced type arguments");
  }

  std::size_t scan_type_decl(std::size_t i) {
    while (t_[i].is(TokKind::Punct, "@") && !t_[i + 1].is(TokKind::Keyword, "interface"))
      i = skip_annotation(i);
    while (is_modifier(t_[i])) ++i;
    if (t_[i].is(TokKind::Punct, "@") && t_[i + 1].is(TokKind::Keyword, "interface")) ++i;
    if (!is_type_decl_kw(t_[i])) parse_error(t_[i], "expected type declaration");
    bool is_enum = t_[i].text == "enum";
    ++i;
    if (t_[i].kind != TokKind::Ident) parse_error(t_[i], "expected type name");
    std::string name = t_[i].text;
    ++i;
    // Header (type params, extends, implements) contains no braces.
    while (!at_end(i) && !t_[i].is(TokKind::Punct, "{")) ++i;
    return scan_type_body(i, name, is_enum);
  }

  // i at '{' of a class/interface/enum/annotation or anonymous body.
  std::size_t scan_type_body(std::size_t i, const std::string& type_name, bool is_enum) {
    if (!t_[i].is(TokKind::Punct, "{")) parse_error(t_[i], "expected '{'");
    ++i;
    if (is_enum) i = scan_enum_constants(i);
    while (!at_end(i) && !t_[i].is(TokKind::Punct, "}")) i = scan_member(i, type_name);
    if (at_end(i)) parse_error(t_.back(), "unterminated type body");
    return i + 1;
  }

  std::size_t scan_enum_constants(std::size_t i) {
    while (!at_end(i)) {
      while (t_[i].is(TokKind::Punct, "@")) i = skip_annotation(i);
      if (t_[i].is(TokKind::Punct, "}")) return i;
      if (t_[i].is(TokKind::Punct, ";")) return i + 1;
      if (t_[i].kind != TokKind::Ident) parse_error(t_[i], "expected enum constant");
      ++i;
      if (t_[i].is(TokKind::Punct, "(")) {
        std::size_t close = skip_balanced(i, "(", ")");
        scan_expr_region(i + 1, close - 1);
        i = close;
      }
      if (t_[i].is(TokKind::Punct, "{")) i = scan_type_body(i, "", false);
      if (t_[i].is(TokKind::Punct, ",")) ++i;
    }
    return i;
  }

  std::size_t scan_member(std::size_t i, const std::string& type_name) {
    while (t_[i].is(TokKind::Punct, "@") && !t_[i + 1].is(TokKind::Keyword, "interface"))
      i = skip_annotation(i);
    std::size_t decl_start = i;
    while (is_modifier(t_[i])) ++i;
    if (t_[i].is(TokKind::Punct, ";")) return i + 1;
    if (is_type_decl_kw(t_[i]) ||
        (t_[i].is(TokKind::Punct, "@") && t_[i + 1].is(TokKind::Keyword, "interface"))) {
      return scan_type_decl(decl_start);
    }
    if (t_[i].is(TokKind::Punct, "{")) {
      // Initializer block: excluded from method extraction entirely.
      return skip_balanced(i, "{", "}");
    }
    std::size_t after_mods = i;
    if (t_[i].is(TokKind::Operator, "<")) after_mods = i = skip_type_args(i);
    // Find the first of '(', '=', ';' at bracket depth zero.
    std::size_t j = i;
    int paren = 0, brace = 0, bracket = 0;
    while (!at_end(j)) {
      const Token& tk = t_[j];
      if (tk.kind == TokKind::Punct) {
        if (tk.text == "(") ++paren;
        else if (tk.text == ")") --paren;
        else if (tk.text == "{") ++brace;
        else if (tk.text == "}") --brace;
        else if (tk.text == "[") ++bracket;
        else if (tk.text == "]") --bracket;
      }
      if (paren == 1 && tk.is(TokKind::Punct, "(")) break;                       // method
      if (paren == 0 && brace == 0 && bracket == 0 &&
          (tk.is(TokKind::Operator, "=") || tk.is(TokKind::Punct, ";")))
        break;                                                                   // field
      ++j;
    }
    if (at_end(j)) parse_error(t_.back(), "unterminated member");
    if (t_[j].is(TokKind::Punct, "(")) return scan_method(decl_start, after_mods, j, type_name);
    // Field: consume declarators up to ';' at depth zero, scanning
    // initializers for anonymous and local classes.
    std::size_t k = i;
    paren = brace = bracket = 0;
    while (!at_end(k)) {
      const Token& tk = t_[k];
      if (tk.kind == TokKind::Punct) {
        if (tk.text == "(") ++paren;
        else if (tk.text == ")") --paren;
        else if (tk.text == "{") ++brace;
        else if (tk.text == "}") --brace;
        else if (tk.text == "[") ++bracket;
        else if (tk.text == "]") --bracket;
        else if (tk.text == ";" && paren == 0 && brace == 0 && bracket == 0)
          break;
      }
      ++k;
    }
    if (at_end(k)) parse_error(t_.back(), "unterminated field declaration");
    scan_expr_region(i, k);
    return k + 1;
  }

  std::size_t scan_method(std::size_t decl_start, std::size_t after_mods, std::size_t lparen,
                          const std::string& type_name) {
    (void)type_name;
    if (t_[lparen - 1].kind != TokKind::Ident) parse_error(t_[lparen - 1], "expected method name");
    // A declaration whose name directly follows the modifiers has no return
    // type: a constructor.
    bool is_ctor = (after_mods == lparen - 1);
    std::size_t i = skip_balanced(lparen, "(", ")");
    // Throws clause / annotation default value. The body brace or ';' is the
    // first '{' or ';' at depth zero from here.
    while (!at_end(i) && !t_[i].is(TokKind::Punct, "{") && !t_[i].is(TokKind::Punct, ";")) {
      if (t_[i].is(TokKind::Punct, "(")) {
        i = skip_balanced(i, "(", ")");
        continue;
      }
      ++i;
    }
    if (at_end(i)) parse_error(t_.back(), "unterminated method declaration");
    if (t_[i].is(TokKind::Punct, ";")) return i + 1;  // no body, no unit
    std::size_t close = skip_balanced(i, "{", "}");
    out_.push_back(MethodSpan{t_[decl_start].begin, t_[close - 1].end, is_ctor});
    scan_expr_region(i + 1, close - 1);
    return close;
  }

  // Walks a token range looking for anonymous class bodies and local type
  // declarations; everything else is passed over.
  void scan_expr_region(std::size_t b, std::size_t e) {
    std::size_t i = b;
    while (i < e) {
      if (t_[i].is(TokKind::Keyword, "new")) {
        std::size_t j = i + 1;
        if (t_[j].kind == TokKind::Ident || is_primitive(t_[j])) {
          ++j;
          while (j < e) {
            if (t_[j].is(TokKind::Punct, ".") && t_[j + 1].kind == TokKind::Ident) {
              j += 2;
            } else if (t_[j].is(TokKind::Operator, "<")) {
              // Diamond or explicit type arguments.
              if (t_[j + 1].is(TokKind::Operator, ">")) j += 2;
              else j = skip_type_args(j);
            } else {
              break;
            }
          }
          if (j < e && t_[j].is(TokKind::Punct, "(")) {
            std::size_t close = skip_balanced(j, "(", ")");
            if (close < e && t_[close].is(TokKind::Punct, "{")) {
              scan_expr_region(j + 1, close - 1);
              i = scan_type_body(close, "", false);
              continue;
            }
          }
        }
        ++i;
        continue;
      }
      if (is_type_decl_kw(t_[i]) && t_[i + 1].kind == TokKind::Ident &&
          !(i > 0 && t_[i - 1].is(TokKind::Punct, "."))) {
        // Local class/interface/enum declaration.
        std::size_t start = i;
        i = scan_type_decl(start);
        continue;
      }
      ++i;
    }
  }
};

}  // namespace

std::vector<MethodSpan> scan_method_spans(std::string_view file_source) {
  std::vector<Token> toks = lex_java(file_source);
  return SpanScanner(toks).run();
}

// ---------------------------------------------------------------------------
// Method parser: builds the simplified AST for one declaration.
// ---------------------------------------------------------------------------

namespace {

class MethodParser {
 public:
  MethodParser(std::string_view src, bool is_ctor)
      : src_(src), toks_(lex_java(src)), is_ctor_(is_ctor) {}

  AstNode run() {
    AstNode root = parse_declaration(is_ctor_ ? NodeKind::CtorDecl : NodeKind::MethodDecl, "");
    if (!cur().is(TokKind::End)) parse_error(cur(), "trailing tokens after method body");
    root.span = Span{0, static_cast<std::uint32_t>(src_.size())};
    return root;
  }

 private:
  std::string_view src_;
  std::vector<Token> toks_;
  bool is_ctor_;
  std::size_t pos_ = 0;

  const Token& cur() const { return toks_[pos_]; }
  const Token& peek(std::size_t k = 1) const {
    std::size_t i = pos_ + k;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token& advance() { return toks_[pos_++]; }

  void expect_punct(std::string_view p) {
    if (!cur().is(TokKind::Punct, p)) parse_error(cur(), "expected '" + std::string(p) + "'");
    ++pos_;
  }

  bool accept_punct(std::string_view p) {
    if (cur().is(TokKind::Punct, p)) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool accept_op(std::string_view o) {
    if (cur().is(TokKind::Operator, o)) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodeKind leaf_kind(const Token& t) {
    switch (t.kind) {
      case TokKind::Ident: return NodeKind::Ident;
      case TokKind::Keyword: return NodeKind::Kw;
      case TokKind::IntLit: return NodeKind::IntLit;
      case TokKind::LongLit: return NodeKind::LongLit;
      case TokKind::FloatLit: return NodeKind::FloatLit;
      case TokKind::DoubleLit: return NodeKind::DoubleLit;
      case TokKind::CharLit: return NodeKind::CharLit;
      case TokKind::StrLit: return NodeKind::StrLit;
      case TokKind::BoolLit: return NodeKind::BoolLit;
      case TokKind::NullLit: return NodeKind::NullLit;
      case TokKind::Operator: return NodeKind::Op;
      default: parse_error(t, "token cannot form a terminal");
    }
  }

  AstNode leaf(const Token& t) const {
    return AstNode{leaf_kind(t), Span{t.begin, t.end}, t.text, {}};
  }

  AstNode eat_leaf() { return leaf(advance()); }

  static AstNode make(NodeKind kind, std::vector<AstNode> children) {
    assert(!children.empty());
    Span s{children.front().span.begin, children.back().span.end};
    return AstNode{kind, s, {}, std::move(children)};
  }

  static void append(std::vector<AstNode>& v, AstNode n) { v.push_back(std::move(n)); }

  // --- speculative helpers -------------------------------------------------

  // Checks whether tokens starting at i form a type; returns the index one
  // past the type on success.
  std::optional<std::size_t> spec_type(std::size_t i) const {
    if (is_primitive(toks_[i])) {
      ++i;
    } else if (toks_[i].kind == TokKind::Ident) {
      ++i;
      while (true) {
        if (toks_[i].is(TokKind::Punct, ".") && toks_[i + 1].kind == TokKind::Ident) {
          i += 2;
        } else if (toks_[i].is(TokKind::Operator, "<")) {
          auto j = spec_type_args(i);
          if (!j) return std::nullopt;
          i = *j;
        } else {
          break;
        }
      }
    } else {
      return std::nullopt;
    }
    while (toks_[i].is(TokKind::Punct, "[") && toks_[i + 1].is(TokKind::Punct, "]")) i += 2;
    return i;
  }

  std::optional<std::size_t> spec_type_args(std::size_t i) const {
    int depth = 0;
    while (toks_[i].kind != TokKind::End) {
      const Token& tk = toks_[i];
      if (tk.is(TokKind::Operator, "<")) ++depth;
      else if (tk.is(TokKind::Operator, ">")) depth -= 1;
      else if (tk.is(TokKind::Operator, ">>")) depth -= 2;
      else if (tk.is(TokKind::Operator, ">>>")) depth -= 3;
      else if (tk.kind == TokKind::Ident || tk.is(TokKind::Punct, ".") ||
               tk.is(TokKind::Punct, ",") || tk.is(TokKind::Punct, "?") ||
               tk.is(TokKind::Punct, "[") || tk.is(TokKind::Punct, "]") ||
               tk.is(TokKind::Punct, "@") || tk.is(TokKind::Operator, "&") ||
               tk.is(TokKind::Keyword, "extends") || tk.is(TokKind::Keyword, "super") ||
               is_primitive(tk)) {
        // acceptable type-argument content
      } else {
        return std::nullopt;
      }
      ++i;
      if (depth <= 0) return i;
    }
    return std::nullopt;
  }

  // Local variable declaration test at the current statement position.
  bool looks_like_var_decl(std::size_t i) const {
    auto j = spec_type(i);
    if (!j) return false;
    if (toks_[*j].kind != TokKind::Ident) return false;
    const Token& after = toks_[*j + 1];
    return after.is(TokKind::Operator, "=") || after.is(TokKind::Punct, ";") ||
           after.is(TokKind::Punct, ",") || after.is(TokKind::Punct, "[");
  }

  // --- declarations ---------------------------------------------------------

  // Parses modifiers, optional type parameters, return type (methods), name,
  // parameter list, throws clause, body.
  AstNode parse_declaration(NodeKind kind, const std::string& enclosing_type) {
    (void)enclosing_type;
    std::vector<AstNode> ch;
    while (is_modifier(cur())) append(ch, eat_leaf());
    if (cur().is(TokKind::Operator, "<")) skip_type_params();
    if (kind == NodeKind::MethodDecl) append(ch, parse_type_ref());
    if (cur().kind != TokKind::Ident) parse_error(cur(), "expected declaration name");
    append(ch, eat_leaf());
    expect_punct("(");
    while (!cur().is(TokKind::Punct, ")")) {
      append(ch, parse_param());
      if (!accept_punct(",")) break;
    }
    expect_punct(")");
    while (cur().is(TokKind::Punct, "[")) {  // archaic trailing dims
      ++pos_;
      expect_punct("]");
    }
    if (cur().is(TokKind::Keyword, "throws")) {
      append(ch, eat_leaf());
      append(ch, parse_type_ref());
      while (accept_punct(",")) append(ch, parse_type_ref());
    }
    if (!cur().is(TokKind::Punct, "{")) parse_error(cur(), "expected method body");
    if (auto body = parse_block()) append(ch, std::move(*body));
    return make(kind, std::move(ch));
  }

  void skip_type_params() {
    int depth = 0;
    while (!cur().is(TokKind::End)) {
      if (cur().is(TokKind::Operator, "<")) ++depth;
      else if (cur().is(TokKind::Operator, ">")) depth -= 1;
      else if (cur().is(TokKind::Operator, ">>")) depth -= 2;
      else if (cur().is(TokKind::Operator, ">>>")) depth -= 3;
      ++pos_;
      if (depth <= 0) return;
    }
    parse_error(cur(), "unbalanced type parameters");
  }

  void skip_annotations() {
    while (cur().is(TokKind::Punct, "@")) {
      ++pos_;
      while (cur().kind == TokKind::Ident || cur().is(TokKind::Punct, ".")) ++pos_;
      if (cur().is(TokKind::Punct, "(")) skip_balanced_parens();
    }
  }

  void skip_balanced_parens() {
    int depth = 0;
    while (!cur().is(TokKind::End)) {
      if (cur().is(TokKind::Punct, "(")) ++depth;
      if (cur().is(TokKind::Punct, ")")) {
        --depth;
        ++pos_;
        if (depth == 0) return;
        continue;
      }
      ++pos_;
    }
    parse_error(cur(), "unbalanced parentheses");
  }

  AstNode parse_param() {
    std::vector<AstNode> ch;
    skip_annotations();
    while (cur().is(TokKind::Keyword, "final")) append(ch, eat_leaf());
    skip_annotations();
    append(ch, parse_type_ref());
    accept_punct("...");
    if (cur().kind == TokKind::Ident) append(ch, eat_leaf());
    else if (cur().is(TokKind::Keyword, "this")) append(ch, eat_leaf());  // receiver param
    else parse_error(cur(), "expected parameter name");
    while (cur().is(TokKind::Punct, "[")) {
      ++pos_;
      expect_punct("]");
    }
    return make(NodeKind::Param, std::move(ch));
  }

  // Collects the lexical Ident/Kw leaves of a type, including generic
  // arguments; punctuation and wildcard markers are dropped.
  AstNode parse_type_ref() {
    std::vector<AstNode> ch;
    skip_annotations();
    if (is_primitive(cur())) {
      append(ch, eat_leaf());
    } else if (cur().kind == TokKind::Ident) {
      append(ch, eat_leaf());
      while (true) {
        if (cur().is(TokKind::Punct, ".") && peek().kind == TokKind::Ident) {
          ++pos_;
          append(ch, eat_leaf());
        } else if (cur().is(TokKind::Operator, "<")) {
          collect_type_args(ch);
        } else {
          break;
        }
      }
    } else {
      parse_error(cur(), "expected type");
    }
    while (cur().is(TokKind::Punct, "[") && peek().is(TokKind::Punct, "]")) pos_ += 2;
    return make(NodeKind::TypeRef, std::move(ch));
  }

  void collect_type_args(std::vector<AstNode>& ch) {
    int depth = 0;
    while (!cur().is(TokKind::End)) {
      const Token& tk = cur();
      if (tk.is(TokKind::Operator, "<")) ++depth;
      else if (tk.is(TokKind::Operator, ">")) depth -= 1;
      else if (tk.is(TokKind::Operator, ">>")) depth -= 2;
      else if (tk.is(TokKind::Operator, ">>>")) depth -= 3;
      else if (tk.kind == TokKind::Ident || tk.kind == TokKind::Keyword) append(ch, leaf(tk));
      ++pos_;
      if (depth <= 0) return;
    }
    parse_error(cur(), "unbalanced type arguments");
  }

  // --- statements -----------------------------------------------------------

  // Requires cur() == '{'. Returns nullopt for an empty block: childless
  // interior nodes are never created.
  std::optional<AstNode> parse_block() {
    expect_punct("{");
    std::vector<AstNode> ch;
    while (!cur().is(TokKind::Punct, "}")) {
      if (cur().is(TokKind::End)) parse_error(cur(), "unterminated block");
      if (auto s = parse_statement()) append(ch, std::move(*s));
    }
    ++pos_;
    if (ch.empty()) return std::nullopt;  // empty block is omitted from the tree
    return make(NodeKind::Block, std::move(ch));
  }

  std::optional<AstNode> parse_statement() {
    skip_annotations();
    const Token& t = cur();
    if (t.is(TokKind::Punct, ";")) {
      ++pos_;
      return std::nullopt;
    }
    if (t.is(TokKind::Punct, "{")) return parse_block();
    if (t.kind == TokKind::Keyword) {
      const std::string& k = t.text;
      if (k == "if") return parse_if();
      if (k == "while") return parse_while();
      if (k == "do") return parse_do();
      if (k == "for") return parse_for();
      if (k == "return") return parse_return();
      if (k == "break" || k == "continue") return parse_break_continue();
      if (k == "throw") return parse_throw();
      if (k == "try") return parse_try();
      if (k == "switch") return parse_switch();
      if (k == "synchronized" && peek().is(TokKind::Punct, "(")) return parse_sync();
      if (k == "assert") return parse_assert();
      if (k == "class" || k == "interface" || k == "enum") return parse_local_type();
      if (k == "final" || k == "static" || k == "abstract") {
        // Could prefix a local class or a local variable declaration.
        std::size_t j = pos_;
        while (is_modifier(toks_[j])) ++j;
        if (is_type_decl_kw(toks_[j])) return parse_local_type();
        return parse_var_decl_stmt();
      }
    }
    if (t.kind == TokKind::Ident && peek().is(TokKind::Punct, ":") &&
        !peek(2).is(TokKind::Punct, ":")) {
      // Label. (The '::' case is lexed as one token, so a single ':' here is
      // unambiguous.)
      std::vector<AstNode> ch;
      append(ch, eat_leaf());
      expect_punct(":");
      if (auto s = parse_statement()) append(ch, std::move(*s));
      return make(NodeKind::LabeledStmt, std::move(ch));
    }
    if (looks_like_var_decl(pos_)) return parse_var_decl_stmt();
    AstNode e = parse_expression();
    expect_punct(";");
    return make(NodeKind::ExprStmt, {std::move(e)});
  }

  AstNode parse_if() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // if
    expect_punct("(");
    append(ch, parse_expression());
    expect_punct(")");
    if (auto s = parse_statement()) append(ch, std::move(*s));
    if (cur().is(TokKind::Keyword, "else")) {
      append(ch, eat_leaf());
      if (auto s = parse_statement()) append(ch, std::move(*s));
    }
    return make(NodeKind::IfStmt, std::move(ch));
  }

  AstNode parse_while() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // while
    expect_punct("(");
    append(ch, parse_expression());
    expect_punct(")");
    if (auto s = parse_statement()) append(ch, std::move(*s));
    return make(NodeKind::WhileStmt, std::move(ch));
  }

  AstNode parse_do() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // do
    if (auto s = parse_statement()) append(ch, std::move(*s));
    if (!cur().is(TokKind::Keyword, "while")) parse_error(cur(), "expected 'while'");
    append(ch, eat_leaf());
    expect_punct("(");
    append(ch, parse_expression());
    expect_punct(")");
    expect_punct(";");
    return make(NodeKind::DoStmt, std::move(ch));
  }

  AstNode parse_for() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // for
    expect_punct("(");
    // Enhanced for: [final] Type name ':' expr
    {
      std::size_t j = pos_;
      while (toks_[j].is(TokKind::Keyword, "final")) ++j;
      if (auto ty = spec_type(j)) {
        if (toks_[*ty].kind == TokKind::Ident && toks_[*ty + 1].is(TokKind::Punct, ":")) {
          std::vector<AstNode> pch;
          while (cur().is(TokKind::Keyword, "final")) append(pch, eat_leaf());
          append(pch, parse_type_ref());
          append(pch, eat_leaf());  // name
          append(ch, make(NodeKind::Param, std::move(pch)));
          expect_punct(":");
          append(ch, parse_expression());
          expect_punct(")");
          if (auto s = parse_statement()) append(ch, std::move(*s));
          return make(NodeKind::ForEachStmt, std::move(ch));
        }
      }
    }
    // Basic for.
    if (!cur().is(TokKind::Punct, ";")) {
      std::vector<AstNode> init;
      std::size_t j = pos_;
      while (toks_[j].is(TokKind::Keyword, "final")) ++j;
      if (looks_like_var_decl(j)) {
        append(init, parse_var_decl_core());
      } else {
        append(init, parse_expression());
        while (accept_punct(",")) append(init, parse_expression());
      }
      append(ch, make(NodeKind::ForInit, std::move(init)));
    }
    expect_punct(";");
    if (!cur().is(TokKind::Punct, ";")) {
      append(ch, make(NodeKind::ForCond, {parse_expression()}));
    }
    expect_punct(";");
    if (!cur().is(TokKind::Punct, ")")) {
      std::vector<AstNode> upd;
      append(upd, parse_expression());
      while (accept_punct(",")) append(upd, parse_expression());
      append(ch, make(NodeKind::ForUpdate, std::move(upd)));
    }
    expect_punct(")");
    if (auto s = parse_statement()) append(ch, std::move(*s));
    return make(NodeKind::ForStmt, std::move(ch));
  }

  AstNode parse_return() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // return
    if (!cur().is(TokKind::Punct, ";")) append(ch, parse_expression());
    expect_punct(";");
    return make(NodeKind::ReturnStmt, std::move(ch));
  }

  AstNode parse_break_continue() {
    bool is_break = cur().text == "break";
    std::vector<AstNode> ch;
    append(ch, eat_leaf());
    if (cur().kind == TokKind::Ident) append(ch, eat_leaf());
    expect_punct(";");
    return make(is_break ? NodeKind::BreakStmt : NodeKind::ContinueStmt, std::move(ch));
  }

  AstNode parse_throw() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());
    append(ch, parse_expression());
    expect_punct(";");
    return make(NodeKind::ThrowStmt, std::move(ch));
  }

  AstNode parse_try() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // try
    if (accept_punct("(")) {
      while (!cur().is(TokKind::Punct, ")")) {
        std::vector<AstNode> rch;
        while (cur().is(TokKind::Keyword, "final")) append(rch, eat_leaf());
        if (looks_like_var_decl(pos_) ||
            (spec_type(pos_) && toks_[*spec_type(pos_)].kind == TokKind::Ident)) {
          append(rch, parse_type_ref());
          append(rch, eat_leaf());  // name
          if (accept_op("=")) append(rch, parse_expression());
        } else {
          append(rch, parse_expression());  // existing-variable resource
        }
        append(ch, make(NodeKind::TryResource, std::move(rch)));
        if (!accept_punct(";")) break;
      }
      expect_punct(")");
    }
    if (auto b = parse_block()) append(ch, std::move(*b));
    while (cur().is(TokKind::Keyword, "catch")) {
      std::vector<AstNode> cch;
      append(cch, eat_leaf());
      expect_punct("(");
      while (cur().is(TokKind::Keyword, "final")) append(cch, eat_leaf());
      append(cch, parse_type_ref());
      while (accept_op("|")) append(cch, parse_type_ref());
      if (cur().kind != TokKind::Ident) parse_error(cur(), "expected catch parameter");
      append(cch, eat_leaf());
      expect_punct(")");
      if (auto b = parse_block()) append(cch, std::move(*b));
      append(ch, make(NodeKind::CatchClause, std::move(cch)));
    }
    if (cur().is(TokKind::Keyword, "finally")) {
      std::vector<AstNode> fch;
      append(fch, eat_leaf());
      if (auto b = parse_block()) append(fch, std::move(*b));
      append(ch, make(NodeKind::FinallyClause, std::move(fch)));
    }
    return make(NodeKind::TryStmt, std::move(ch));
  }

  AstNode parse_switch() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // switch
    expect_punct("(");
    append(ch, parse_expression());
    expect_punct(")");
    expect_punct("{");
    while (!cur().is(TokKind::Punct, "}")) {
      if (cur().is(TokKind::End)) parse_error(cur(), "unterminated switch");
      std::vector<AstNode> cch;
      if (cur().is(TokKind::Keyword, "case")) {
        append(cch, eat_leaf());
        append(cch, parse_expression());
        while (accept_punct(",")) append(cch, parse_expression());
      } else if (cur().is(TokKind::Keyword, "default")) {
        append(cch, eat_leaf());
      } else {
        parse_error(cur(), "expected 'case' or 'default'");
      }
      if (!accept_punct(":")) {
        if (!accept_punct("->")) parse_error(cur(), "expected ':' in switch case");
      }
      while (!cur().is(TokKind::Keyword, "case") && !cur().is(TokKind::Keyword, "default") &&
             !cur().is(TokKind::Punct, "}")) {
        if (cur().is(TokKind::End)) parse_error(cur(), "unterminated switch case");
        if (auto s = parse_statement()) append(cch, std::move(*s));
      }
      append(ch, make(NodeKind::SwitchCase, std::move(cch)));
    }
    ++pos_;
    return make(NodeKind::SwitchStmt, std::move(ch));
  }

  AstNode parse_sync() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // synchronized
    expect_punct("(");
    append(ch, parse_expression());
    expect_punct(")");
    if (auto b = parse_block()) append(ch, std::move(*b));
    return make(NodeKind::SyncStmt, std::move(ch));
  }

  AstNode parse_assert() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());
    append(ch, parse_expression());
    if (accept_punct(":")) append(ch, parse_expression());
    expect_punct(";");
    return make(NodeKind::AssertStmt, std::move(ch));
  }

  AstNode parse_local_type() {
    std::vector<AstNode> ch;
    while (is_modifier(cur())) append(ch, eat_leaf());
    if (!is_type_decl_kw(cur())) parse_error(cur(), "expected local type declaration");
    bool is_enum = cur().text == "enum";
    append(ch, eat_leaf());
    if (cur().kind != TokKind::Ident) parse_error(cur(), "expected type name");
    std::string name = cur().text;
    append(ch, eat_leaf());
    while (!cur().is(TokKind::Punct, "{")) {
      if (cur().is(TokKind::End)) parse_error(cur(), "unterminated type header");
      if (cur().kind == TokKind::Ident || cur().kind == TokKind::Keyword) append(ch, eat_leaf());
      else ++pos_;
    }
    parse_type_members(ch, name, is_enum);
    return make(NodeKind::LocalTypeDecl, std::move(ch));
  }

  // Parses '{ members }' of a local/anonymous type into `ch`.
  void parse_type_members(std::vector<AstNode>& ch, const std::string& type_name, bool is_enum) {
    expect_punct("{");
    if (is_enum) {
      while (!cur().is(TokKind::Punct, ";") && !cur().is(TokKind::Punct, "}")) {
        skip_annotations();
        if (cur().kind == TokKind::Ident) append(ch, eat_leaf());
        if (cur().is(TokKind::Punct, "(")) {
          ++pos_;
          while (!cur().is(TokKind::Punct, ")")) {
            append(ch, parse_expression());
            if (!accept_punct(",")) break;
          }
          expect_punct(")");
        }
        if (cur().is(TokKind::Punct, "{")) {
          std::vector<AstNode> bch;
          parse_type_members(bch, "", false);
          if (!bch.empty()) append(ch, make(NodeKind::AnonClassBody, std::move(bch)));
        }
        if (!accept_punct(",")) break;
      }
      accept_punct(";");
    }
    while (!cur().is(TokKind::Punct, "}")) {
      if (cur().is(TokKind::End)) parse_error(cur(), "unterminated type body");
      if (auto m = parse_member(type_name)) append(ch, std::move(*m));
    }
    ++pos_;
  }

  std::optional<AstNode> parse_member(const std::string& type_name) {
    skip_annotations();
    if (accept_punct(";")) return std::nullopt;
    std::size_t save = pos_;
    while (is_modifier(toks_[save])) ++save;
    if (is_type_decl_kw(toks_[save])) return parse_local_type();
    if (toks_[save].is(TokKind::Punct, "{")) {
      // Instance/static initializer inside a class body.
      while (pos_ < save) ++pos_;  // consume modifiers (e.g. 'static')
      auto b = parse_block();
      if (b) return b;
      return std::nullopt;
    }
    // Method or field? Find first of '(', '=', ';' at depth 0.
    std::size_t j = save;
    if (toks_[j].is(TokKind::Operator, "<")) {
      // generic method: skip type params speculatively
      int depth = 0;
      while (toks_[j].kind != TokKind::End) {
        if (toks_[j].is(TokKind::Operator, "<")) ++depth;
        else if (toks_[j].is(TokKind::Operator, ">")) depth -= 1;
        else if (toks_[j].is(TokKind::Operator, ">>")) depth -= 2;
        else if (toks_[j].is(TokKind::Operator, ">>>")) depth -= 3;
        ++j;
        if (depth <= 0) break;
      }
    }
    std::size_t probe = j;
    int brace = 0, bracket = 0;
    bool is_method = false;
    while (toks_[probe].kind != TokKind::End) {
      const Token& tk = toks_[probe];
      if (tk.kind == TokKind::Punct) {
        if (tk.text == "(") { is_method = true; break; }
        if (tk.text == ";") break;
        if (tk.text == "{") ++brace;
        else if (tk.text == "}") --brace;
        else if (tk.text == "[") ++bracket;
        else if (tk.text == "]") --bracket;
      }
      if (tk.is(TokKind::Operator, "=") && brace == 0 && bracket == 0) break;
      ++probe;
    }
    if (is_method) {
      // Constructor: name '(' immediately after the modifiers, no return type.
      bool ctor = (probe == j + 1) && toks_[j].kind == TokKind::Ident;
      return parse_declaration(ctor ? NodeKind::CtorDecl : NodeKind::MethodDecl, type_name);
    }
    return parse_var_decl_stmt();
  }

  AstNode parse_var_decl_stmt() {
    AstNode n = parse_var_decl_core();
    expect_punct(";");
    return n;
  }

  AstNode parse_var_decl_core() {
    std::vector<AstNode> ch;
    while (is_modifier(cur())) append(ch, eat_leaf());
    append(ch, parse_type_ref());
    while (true) {
      std::vector<AstNode> dch;
      if (cur().kind != TokKind::Ident) parse_error(cur(), "expected variable name");
      append(dch, eat_leaf());
      while (cur().is(TokKind::Punct, "[") && peek().is(TokKind::Punct, "]")) pos_ += 2;
      if (cur().is(TokKind::Operator, "=")) {
        append(dch, eat_leaf());
        if (cur().is(TokKind::Punct, "{")) append(dch, parse_array_init());
        else append(dch, parse_expression());
      }
      append(ch, make(NodeKind::VarDeclarator, std::move(dch)));
      if (!accept_punct(",")) break;
    }
    return make(NodeKind::VarDeclStmt, std::move(ch));
  }

  AstNode parse_array_init() {
    const Token& open = cur();
    expect_punct("{");
    std::vector<AstNode> ch;
    while (!cur().is(TokKind::Punct, "}")) {
      if (cur().is(TokKind::End)) parse_error(cur(), "unterminated array initializer");
      if (cur().is(TokKind::Punct, "{")) append(ch, parse_array_init());
      else append(ch, parse_expression());
      if (!accept_punct(",")) break;
    }
    const Token& close = cur();
    expect_punct("}");
    if (ch.empty()) {
      // Empty initializer: represent as an Op leaf covering the braces so the
      // node has substance (interior nodes may not be childless).
      return AstNode{NodeKind::Op, Span{open.begin, close.end}, "{}", {}};
    }
    return make(NodeKind::ArrayInitExpr, std::move(ch));
  }

  // --- expressions ----------------------------------------------------------

  AstNode parse_expression() { return parse_assignment(); }

  static bool is_assign_op(const Token& t) {
    if (t.kind != TokKind::Operator) return false;
    return t.text == "=" || t.text == "+=" || t.text == "-=" || t.text == "*=" ||
           t.text == "/=" || t.text == "%=" || t.text == "&=" || t.text == "|=" ||
           t.text == "^=" || t.text == "<<=" || t.text == ">>=" || t.text == ">>>=";
  }

  AstNode parse_assignment() {
    AstNode lhs = parse_ternary();
    if (is_assign_op(cur())) {
      AstNode op = eat_leaf();
      AstNode rhs = cur().is(TokKind::Punct, "{") ? parse_array_init() : parse_assignment();
      return make(NodeKind::AssignExpr, {std::move(lhs), std::move(op), std::move(rhs)});
    }
    return lhs;
  }

  AstNode parse_ternary() {
    AstNode c = parse_or();
    if (cur().is(TokKind::Punct, "?")) {
      ++pos_;
      AstNode t = parse_expression();
      expect_punct(":");
      AstNode e = parse_ternary();
      return make(NodeKind::TernaryExpr, {std::move(c), std::move(t), std::move(e)});
    }
    return c;
  }

  struct BinLevel {
    std::string_view op;
    NodeKind kind;
  };

  AstNode parse_binary_level(AstNode (MethodParser::*next)(),
                             std::initializer_list<BinLevel> ops) {
    AstNode lhs = (this->*next)();
    while (cur().kind == TokKind::Operator) {
      const BinLevel* hit = nullptr;
      for (const BinLevel& bl : ops)
        if (cur().text == bl.op) { hit = &bl; break; }
      if (!hit) break;
      AstNode op = eat_leaf();
      AstNode rhs = (this->*next)();
      lhs = make(hit->kind, {std::move(lhs), std::move(op), std::move(rhs)});
    }
    return lhs;
  }

  AstNode parse_or() {
    return parse_binary_level(&MethodParser::parse_and, {{"||", NodeKind::OrExpr}});
  }
  AstNode parse_and() {
    return parse_binary_level(&MethodParser::parse_bitor, {{"&&", NodeKind::AndExpr}});
  }
  AstNode parse_bitor() {
    return parse_binary_level(&MethodParser::parse_bitxor, {{"|", NodeKind::BitOrExpr}});
  }
  AstNode parse_bitxor() {
    return parse_binary_level(&MethodParser::parse_bitand, {{"^", NodeKind::BitXorExpr}});
  }
  AstNode parse_bitand() {
    return parse_binary_level(&MethodParser::parse_equality, {{"&", NodeKind::BitAndExpr}});
  }
  AstNode parse_equality() {
    return parse_binary_level(&MethodParser::parse_relational,
                              {{"==", NodeKind::EqExpr}, {"!=", NodeKind::NeExpr}});
  }

  AstNode parse_relational() {
    AstNode lhs = parse_shift();
    while (true) {
      if (cur().is(TokKind::Keyword, "instanceof")) {
        std::vector<AstNode> ch;
        append(ch, std::move(lhs));
        append(ch, eat_leaf());
        append(ch, parse_type_ref());
        if (cur().kind == TokKind::Ident) append(ch, eat_leaf());  // pattern binding
        lhs = make(NodeKind::InstanceOfExpr, std::move(ch));
        continue;
      }
      if (cur().kind != TokKind::Operator) break;
      NodeKind kind;
      if (cur().text == "<") kind = NodeKind::LtExpr;
      else if (cur().text == ">") kind = NodeKind::GtExpr;
      else if (cur().text == "<=") kind = NodeKind::LeExpr;
      else if (cur().text == ">=") kind = NodeKind::GeExpr;
      else break;
      AstNode op = eat_leaf();
      AstNode rhs = parse_shift();
      lhs = make(kind, {std::move(lhs), std::move(op), std::move(rhs)});
    }
    return lhs;
  }

  AstNode parse_shift() {
    return parse_binary_level(&MethodParser::parse_additive,
                              {{"<<", NodeKind::ShlExpr},
                               {">>", NodeKind::ShrExpr},
                               {">>>", NodeKind::UshrExpr}});
  }
  AstNode parse_additive() {
    return parse_binary_level(&MethodParser::parse_multiplicative,
                              {{"+", NodeKind::AddExpr}, {"-", NodeKind::SubExpr}});
  }
  AstNode parse_multiplicative() {
    return parse_binary_level(&MethodParser::parse_unary,
                              {{"*", NodeKind::MulExpr},
                               {"/", NodeKind::DivExpr},
                               {"%", NodeKind::ModExpr}});
  }

  AstNode parse_unary() {
    if (cur().kind == TokKind::Operator) {
      const std::string& o = cur().text;
      NodeKind kind;
      if (o == "++") kind = NodeKind::PreIncExpr;
      else if (o == "--") kind = NodeKind::PreDecExpr;
      else if (o == "+") kind = NodeKind::PlusExpr;
      else if (o == "-") kind = NodeKind::NegExpr;
      else if (o == "!") kind = NodeKind::NotExpr;
      else if (o == "~") kind = NodeKind::BitNotExpr;
      else {
        parse_error(cur(), "unexpected operator in expression");
      }
      AstNode op = eat_leaf();
      AstNode operand = parse_unary();
      return make(kind, {std::move(op), std::move(operand)});
    }
    // Cast?
    if (cur().is(TokKind::Punct, "(")) {
      if (auto ty = spec_type(pos_ + 1)) {
        if (toks_[*ty].is(TokKind::Punct, ")")) {
          const Token& after = toks_[*ty + 1];
          bool primitive = is_primitive(toks_[pos_ + 1]);
          bool castable_next =
              after.kind == TokKind::Ident || after.kind == TokKind::IntLit ||
              after.kind == TokKind::LongLit || after.kind == TokKind::FloatLit ||
              after.kind == TokKind::DoubleLit || after.kind == TokKind::CharLit ||
              after.kind == TokKind::StrLit || after.kind == TokKind::BoolLit ||
              after.kind == TokKind::NullLit || after.is(TokKind::Punct, "(") ||
              after.is(TokKind::Keyword, "new") || after.is(TokKind::Keyword, "this") ||
              after.is(TokKind::Keyword, "super") || after.is(TokKind::Operator, "!") ||
              after.is(TokKind::Operator, "~");
          if (primitive || castable_next) {
            ++pos_;  // '('
            AstNode ty_node = parse_type_ref();
            expect_punct(")");
            AstNode operand = parse_unary();
            return make(NodeKind::CastExpr, {std::move(ty_node), std::move(operand)});
          }
        }
      }
    }
    return parse_postfix();
  }

  AstNode parse_postfix() {
    AstNode e = parse_primary();
    while (true) {
      if (cur().is(TokKind::Punct, ".")) {
        ++pos_;
        if (cur().is(TokKind::Operator, "<")) skip_type_params();  // explicit witness
        if (cur().kind == TokKind::Ident) {
          AstNode name = eat_leaf();
          if (cur().is(TokKind::Punct, "(")) {
            std::vector<AstNode> ch;
            append(ch, make(NodeKind::FieldAccessExpr, {std::move(e), std::move(name)}));
            parse_args(ch);
            e = make(NodeKind::CallExpr, std::move(ch));
          } else {
            e = make(NodeKind::FieldAccessExpr, {std::move(e), std::move(name)});
          }
        } else if (cur().kind == TokKind::Keyword &&
                   (cur().text == "this" || cur().text == "class" || cur().text == "super" ||
                    cur().text == "new")) {
          AstNode kw = eat_leaf();
          if (cur().is(TokKind::Punct, "(")) {
            std::vector<AstNode> ch;
            append(ch, make(NodeKind::FieldAccessExpr, {std::move(e), std::move(kw)}));
            parse_args(ch);
            e = make(NodeKind::CallExpr, std::move(ch));
          } else if (kw.leaf_text == "new") {
            // qualified inner-class creation: outer.new Inner(args)
            std::vector<AstNode> ch;
            append(ch, std::move(e));
            append(ch, std::move(kw));
            append(ch, parse_type_ref());
            if (cur().is(TokKind::Punct, "(")) parse_args(ch);
            if (cur().is(TokKind::Punct, "{")) {
              std::vector<AstNode> bch;
              parse_type_members(bch, "", false);
              if (!bch.empty()) append(ch, make(NodeKind::AnonClassBody, std::move(bch)));
            }
            e = make(NodeKind::NewExpr, std::move(ch));
          } else {
            e = make(NodeKind::FieldAccessExpr, {std::move(e), std::move(kw)});
          }
        } else {
          parse_error(cur(), "expected member name after '.'");
        }
        continue;
      }
      if (cur().is(TokKind::Punct, "(")) {
        std::vector<AstNode> ch;
        append(ch, std::move(e));
        parse_args(ch);
        e = make(NodeKind::CallExpr, std::move(ch));
        continue;
      }
      if (cur().is(TokKind::Punct, "[")) {
        ++pos_;
        AstNode idx = parse_expression();
        expect_punct("]");
        e = make(NodeKind::ArrayAccessExpr, {std::move(e), std::move(idx)});
        continue;
      }
      if (cur().is(TokKind::Operator, "++") || cur().is(TokKind::Operator, "--")) {
        NodeKind kind = cur().text == "++" ? NodeKind::PostIncExpr : NodeKind::PostDecExpr;
        AstNode op = eat_leaf();
        e = make(kind, {std::move(e), std::move(op)});
        continue;
      }
      if (cur().is(TokKind::Punct, "::")) {
        ++pos_;
        if (cur().is(TokKind::Operator, "<")) skip_type_params();
        if (cur().kind != TokKind::Ident && !cur().is(TokKind::Keyword, "new"))
          parse_error(cur(), "expected method reference name");
        AstNode name = eat_leaf();
        e = make(NodeKind::MethodRefExpr, {std::move(e), std::move(name)});
        continue;
      }
      break;
    }
    return e;
  }

  void parse_args(std::vector<AstNode>& ch) {
    expect_punct("(");
    while (!cur().is(TokKind::Punct, ")")) {
      if (cur().is(TokKind::End)) parse_error(cur(), "unterminated argument list");
      append(ch, parse_expression());
      if (!accept_punct(",")) break;
    }
    expect_punct(")");
  }

  // Scans ahead from an opening '(' to decide whether it starts a lambda.
  bool paren_starts_lambda() const {
    int depth = 0;
    std::size_t i = pos_;
    while (toks_[i].kind != TokKind::End) {
      if (toks_[i].is(TokKind::Punct, "(")) ++depth;
      else if (toks_[i].is(TokKind::Punct, ")")) {
        --depth;
        if (depth == 0) return toks_[i + 1].is(TokKind::Punct, "->");
      }
      ++i;
    }
    return false;
  }

  AstNode parse_primary() {
    const Token& t = cur();
    switch (t.kind) {
      case TokKind::IntLit:
      case TokKind::LongLit:
      case TokKind::FloatLit:
      case TokKind::DoubleLit:
      case TokKind::CharLit:
      case TokKind::StrLit:
      case TokKind::BoolLit:
      case TokKind::NullLit:
        return eat_leaf();
      case TokKind::Ident:
        if (peek().is(TokKind::Punct, "->")) return parse_lambda_from_ident();
        return eat_leaf();
      case TokKind::Keyword:
        if (t.text == "this" || t.text == "super") return eat_leaf();
        if (t.text == "new") return parse_creation();
        if (is_primitive(t)) {
          // e.g. int.class, void.class
          return eat_leaf();
        }
        parse_error(t, "unexpected keyword in expression");
      case TokKind::Punct:
        if (t.text == "(") {
          if (paren_starts_lambda()) return parse_lambda_from_parens();
          ++pos_;
          AstNode e = parse_expression();
          expect_punct(")");
          return make(NodeKind::ParenExpr, {std::move(e)});
        }
        parse_error(t, "unexpected token in expression");
      default:
        parse_error(t, "unexpected token in expression");
    }
  }

  AstNode parse_lambda_from_ident() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // parameter
    expect_punct("->");
    append_lambda_body(ch);
    return make(NodeKind::LambdaExpr, std::move(ch));
  }

  AstNode parse_lambda_from_parens() {
    std::vector<AstNode> ch;
    expect_punct("(");
    while (!cur().is(TokKind::Punct, ")")) {
      skip_annotations();
      while (cur().is(TokKind::Keyword, "final")) append(ch, eat_leaf());
      // Typed or untyped parameter.
      if (looks_like_lambda_typed_param()) {
        std::vector<AstNode> pch;
        append(pch, parse_type_ref());
        append(pch, eat_leaf());  // name
        append(ch, make(NodeKind::Param, std::move(pch)));
      } else if (cur().kind == TokKind::Ident) {
        append(ch, eat_leaf());
      } else {
        parse_error(cur(), "expected lambda parameter");
      }
      if (!accept_punct(",")) break;
    }
    expect_punct(")");
    expect_punct("->");
    append_lambda_body(ch);
    return make(NodeKind::LambdaExpr, std::move(ch));
  }

  bool looks_like_lambda_typed_param() const {
    auto j = spec_type(pos_);
    return j && toks_[*j].kind == TokKind::Ident;
  }

  void append_lambda_body(std::vector<AstNode>& ch) {
    if (cur().is(TokKind::Punct, "{")) {
      if (auto b = parse_block()) append(ch, std::move(*b));
      else {
        // Empty lambda body: keep the lambda node non-empty via its params;
        // if there are none, synthesize an Op leaf for the braces.
        if (ch.empty())
          append(ch, AstNode{NodeKind::Op, Span{cur().begin, cur().begin}, "{}", {}});
      }
    } else {
      append(ch, parse_expression());
    }
  }

  AstNode parse_creation() {
    std::vector<AstNode> ch;
    append(ch, eat_leaf());  // new
    if (cur().is(TokKind::Operator, "<")) skip_type_params();  // rare explicit ctor type args
    AstNode ty = parse_creation_type();
    if (cur().is(TokKind::Punct, "[")) {
      append(ch, std::move(ty));
      bool any_dim_expr = false;
      while (cur().is(TokKind::Punct, "[")) {
        ++pos_;
        if (!cur().is(TokKind::Punct, "]")) {
          append(ch, parse_expression());
          any_dim_expr = true;
        }
        expect_punct("]");
      }
      (void)any_dim_expr;
      if (cur().is(TokKind::Punct, "{")) append(ch, parse_array_init());
      return make(NodeKind::ArrayNewExpr, std::move(ch));
    }
    append(ch, std::move(ty));
    if (cur().is(TokKind::Punct, "(")) parse_args(ch);
    if (cur().is(TokKind::Punct, "{")) {
      std::vector<AstNode> bch;
      parse_type_members(bch, "", false);
      if (!bch.empty()) append(ch, make(NodeKind::AnonClassBody, std::move(bch)));
    }
    return make(NodeKind::NewExpr, std::move(ch));
  }

  // Like parse_type_ref but stops before '[' so array creation dims are
  // handled by the caller.
  AstNode parse_creation_type() {
    std::vector<AstNode> ch;
    if (is_primitive(cur())) {
      append(ch, eat_leaf());
      return make(NodeKind::TypeRef, std::move(ch));
    }
    if (cur().kind != TokKind::Ident) parse_error(cur(), "expected type after 'new'");
    append(ch, eat_leaf());
    while (true) {
      if (cur().is(TokKind::Punct, ".") && peek().kind == TokKind::Ident) {
        ++pos_;
        append(ch, eat_leaf());
      } else if (cur().is(TokKind::Operator, "<")) {
        if (peek().is(TokKind::Operator, ">")) pos_ += 2;  // diamond
        else collect_type_args(ch);
      } else {
        break;
      }
    }
    return make(NodeKind::TypeRef, std::move(ch));
  }
};

}  // namespace

AstNode parse_method(std::string_view method_source, bool is_ctor) {
  return MethodParser(method_source, is_ctor).run();
}

bool declaration_is_ctor(std::string_view method_source) {
  std::vector<Token> toks = lex_java(method_source);
  std::size_t i = 0;
  while (is_modifier(toks[i])) ++i;
  if (toks[i].is(TokKind::Operator, "<")) {
    int depth = 0;
    while (toks[i].kind != TokKind::End) {
      if (toks[i].is(TokKind::Operator, "<")) ++depth;
      else if (toks[i].is(TokKind::Operator, ">")) depth -= 1;
      else if (toks[i].is(TokKind::Operator, ">>")) depth -= 2;
      else if (toks[i].is(TokKind::Operator, ">>>")) depth -= 3;
      ++i;
      if (depth <= 0) break;
    }
  }
  return toks[i].kind == TokKind::Ident && toks[i + 1].is(TokKind::Punct, "(");
}

// ---------------------------------------------------------------------------
// ast.hpp out-of-line definitions
// ---------------------------------------------------------------------------

const char* node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::MethodDecl: return "MethodDecl";
    case NodeKind::CtorDecl: return "CtorDecl";
    case NodeKind::Param: return "Param";
    case NodeKind::TypeRef: return "TypeRef";
    case NodeKind::AnonClassBody: return "AnonClassBody";
    case NodeKind::LocalTypeDecl: return "LocalTypeDecl";
    case NodeKind::Block: return "Block";
    case NodeKind::IfStmt: return "IfStmt";
    case NodeKind::WhileStmt: return "WhileStmt";
    case NodeKind::DoStmt: return "DoStmt";
    case NodeKind::ForStmt: return "ForStmt";
    case NodeKind::ForInit: return "ForInit";
    case NodeKind::ForCond: return "ForCond";
    case NodeKind::ForUpdate: return "ForUpdate";
    case NodeKind::ForEachStmt: return "ForEachStmt";
    case NodeKind::ReturnStmt: return "ReturnStmt";
    case NodeKind::ExprStmt: return "ExprStmt";
    case NodeKind::VarDeclStmt: return "VarDeclStmt";
    case NodeKind::VarDeclarator: return "VarDeclarator";
    case NodeKind::BreakStmt: return "BreakStmt";
    case NodeKind::ContinueStmt: return "ContinueStmt";
    case NodeKind::ThrowStmt: return "ThrowStmt";
    case NodeKind::TryStmt: return "TryStmt";
    case NodeKind::TryResource: return "TryResource";
    case NodeKind::CatchClause: return "CatchClause";
    case NodeKind::FinallyClause: return "FinallyClause";
    case NodeKind::SwitchStmt: return "SwitchStmt";
    case NodeKind::SwitchCase: return "SwitchCase";
    case NodeKind::SyncStmt: return "SyncStmt";
    case NodeKind::LabeledStmt: return "LabeledStmt";
    case NodeKind::AssertStmt: return "AssertStmt";
    case NodeKind::AssignExpr: return "AssignExpr";
    case NodeKind::TernaryExpr: return "TernaryExpr";
    case NodeKind::OrExpr: return "OrExpr";
    case NodeKind::AndExpr: return "AndExpr";
    case NodeKind::BitOrExpr: return "BitOrExpr";
    case NodeKind::BitXorExpr: return "BitXorExpr";
    case NodeKind::BitAndExpr: return "BitAndExpr";
    case NodeKind::EqExpr: return "EqExpr";
    case NodeKind::NeExpr: return "NeExpr";
    case NodeKind::LtExpr: return "LtExpr";
    case NodeKind::GtExpr: return "GtExpr";
    case NodeKind::LeExpr: return "LeExpr";
    case NodeKind::GeExpr: return "GeExpr";
    case NodeKind::InstanceOfExpr: return "InstanceOfExpr";
    case NodeKind::ShlExpr: return "ShlExpr";
    case NodeKind::ShrExpr: return "ShrExpr";
    case NodeKind::UshrExpr: return "UshrExpr";
    case NodeKind::AddExpr: return "AddExpr";
    case NodeKind::SubExpr: return "SubExpr";
    case NodeKind::MulExpr: return "MulExpr";
    case NodeKind::DivExpr: return "DivExpr";
    case NodeKind::ModExpr: return "ModExpr";
    case NodeKind::PreIncExpr: return "PreIncExpr";
    case NodeKind::PreDecExpr: return "PreDecExpr";
    case NodeKind::PlusExpr: return "PlusExpr";
    case NodeKind::NegExpr: return "NegExpr";
    case NodeKind::NotExpr: return "NotExpr";
    case NodeKind::BitNotExpr: return "BitNotExpr";
    case NodeKind::PostIncExpr: return "PostIncExpr";
    case NodeKind::PostDecExpr: return "PostDecExpr";
    case NodeKind::CastExpr: return "CastExpr";
    case NodeKind::NewExpr: return "NewExpr";
    case NodeKind::ArrayNewExpr: return "ArrayNewExpr";
    case NodeKind::ArrayInitExpr: return "ArrayInitExpr";
    case NodeKind::ArrayAccessExpr: return "ArrayAccessExpr";
    case NodeKind::FieldAccessExpr: return "FieldAccessExpr";
    case NodeKind::CallExpr: return "CallExpr";
    case NodeKind::MethodRefExpr: return "MethodRefExpr";
    case NodeKind::LambdaExpr: return "LambdaExpr";
    case NodeKind::ParenExpr: return "ParenExpr";
    case NodeKind::Ident: return "Ident";
    case NodeKind::IntLit: return "IntLit";
    case NodeKind::LongLit: return "LongLit";
    case NodeKind::FloatLit: return "FloatLit";
    case NodeKind::DoubleLit: return "DoubleLit";
    case NodeKind::CharLit: return "CharLit";
    case NodeKind::StrLit: return "StrLit";
    case NodeKind::BoolLit: return "BoolLit";
    case NodeKind::NullLit: return "NullLit";
    case NodeKind::Kw: return "Kw";
    case NodeKind::Op: return "Op";
  }
  return "Unknown";
}

bool node_kind_is_terminal(NodeKind k) {
  switch (k) {
    case NodeKind::Ident:
    case NodeKind::IntLit:
    case NodeKind::LongLit:
    case NodeKind::FloatLit:
    case NodeKind::DoubleLit:
    case NodeKind::CharLit:
    case NodeKind::StrLit:
    case NodeKind::BoolLit:
    case NodeKind::NullLit:
    case NodeKind::Kw:
    case NodeKind::Op:
      return true;
    default:
      return false;
  }
}

const AstNode* resolve_path(const AstNode& root, const NodePath& path) {
  const AstNode* n = &root;
  for (std::uint32_t idx : path) {
    if (idx >= n->children.size()) return nullptr;
    n = &n->children[idx];
  }
  return n;
}

std::vector<TerminalRef> collect_terminals(const AstNode& root) {
  std::vector<TerminalRef> out;
  NodePath path;
  auto walk = [&](auto&& self, const AstNode& n) -> void {
    if (n.is_terminal()) {
      out.push_back(TerminalRef{&n, path});
      return;
    }
    for (std::uint32_t i = 0; i < n.children.size(); ++i) {
      path.push_back(i);
      self(self, n.children[i]);
      path.pop_back();
    }
  };
  walk(walk, root);
  return out;
}

}  // namespace obo
