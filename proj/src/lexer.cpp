#include "obo/lexer.hpp"

#include <array>
#include <unordered_set>

#include "obo/error.hpp"

namespace obo {

namespace {

const std::unordered_set<std::string_view>& keyword_set() {
  static const std::unordered_set<std::string_view> kw = {
      "abstract",   "assert",    "boolean",  "break",     "byte",      "case",
      "catch",      "char",      "class",    "const",     "continue",  "default",
      "do",         "double",    "else",     "enum",      "extends",   "final",
      "finally",    "float",     "for",      "goto",      "if",        "implements",
      "import",     "instanceof", "int",     "interface", "long",      "native",
      "new",        "package",   "private",  "protected", "public",    "return",
      "short",      "static",    "strictfp", "super",     "switch",    "synchronized",
      "this",       "throw",     "throws",   "transient", "try",       "void",
      "volatile",   "while",
  };
  return kw;
}

// Multi-character operators, longest first for maximal munch. "...", "@",
// "::" and "->" are classified as punctuation below.
constexpr std::array<std::string_view, 26> kMultiOps = {
    ">>>=", ">>>", ">>=", "<<=", "<=", ">=", "==", "!=", "&&", "||", "++", "--",
    "+=",   "-=",  "*=",  "/=",  "%=", "&=", "|=", "^=", "<<", ">>", "->", "::",
    "...",  "@",
};

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_ident_part(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool is_hex_digit(char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

}  // namespace

bool is_java_keyword(std::string_view word) { return keyword_set().count(word) > 0; }

std::vector<Token> lex_java(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();

  auto push = [&](TokKind kind, std::size_t begin, std::size_t end) {
    out.push_back(Token{kind, std::string(src.substr(begin, end - begin)),
                        static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end)});
  };

  while (i < n) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f') {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      std::size_t start = i;
      i += 2;
      while (i + 1 < n && !(src[i] == '*' && src[i + 1] == '/')) ++i;
      if (i + 1 >= n) fail(Errc::ParseFailure, "unterminated block comment at byte " + std::to_string(start));
      i += 2;
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t start = i;
      while (i < n && is_ident_part(src[i])) ++i;
      std::string_view word = src.substr(start, i - start);
      if (word == "true" || word == "false") {
        push(TokKind::BoolLit, start, i);
      } else if (word == "null") {
        push(TokKind::NullLit, start, i);
      } else if (is_java_keyword(word)) {
        push(TokKind::Keyword, start, i);
      } else {
        push(TokKind::Ident, start, i);
      }
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(src[i + 1]))) {
      std::size_t start = i;
      bool is_float = false;
      if (c == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X')) {
        i += 2;
        while (i < n && (is_hex_digit(src[i]) || src[i] == '_')) ++i;
      } else if (c == '0' && i + 1 < n && (src[i + 1] == 'b' || src[i + 1] == 'B')) {
        i += 2;
        while (i < n && (src[i] == '0' || src[i] == '1' || src[i] == '_')) ++i;
      } else {
        while (i < n && (is_digit(src[i]) || src[i] == '_')) ++i;
        if (i < n && src[i] == '.' && i + 1 < n && is_digit(src[i + 1])) {
          is_float = true;
          ++i;
          while (i < n && (is_digit(src[i]) || src[i] == '_')) ++i;
        } else if (i < n && src[i] == '.' && !(i + 1 < n && is_ident_start(src[i + 1]))) {
          // "1." with no following identifier: a double literal.
          is_float = true;
          ++i;
        }
        if (i < n && (src[i] == 'e' || src[i] == 'E')) {
          is_float = true;
          ++i;
          if (i < n && (src[i] == '+' || src[i] == '-')) ++i;
          while (i < n && is_digit(src[i])) ++i;
        }
      }
      TokKind kind = is_float ? TokKind::DoubleLit : TokKind::IntLit;
      if (i < n) {
        char suf = src[i];
        if (suf == 'l' || suf == 'L') {
          kind = TokKind::LongLit;
          ++i;
        } else if (suf == 'f' || suf == 'F') {
          kind = TokKind::FloatLit;
          ++i;
        } else if (suf == 'd' || suf == 'D') {
          kind = TokKind::DoubleLit;
          ++i;
        }
      }
      push(kind, start, i);
      continue;
    }
    if (c == '"') {
      std::size_t start = i;
      ++i;
      while (i < n && src[i] != '"') {
        if (src[i] == '\\' && i + 1 < n) ++i;
        if (src[i] == '\n') fail(Errc::ParseFailure, "unterminated string literal at byte " + std::to_string(start));
        ++i;
      }
      if (i >= n) fail(Errc::ParseFailure, "unterminated string literal at byte " + std::to_string(start));
      ++i;
      push(TokKind::StrLit, start, i);
      continue;
    }
    if (c == '\'') {
      std::size_t start = i;
      ++i;
      while (i < n && src[i] != '\'') {
        if (src[i] == '\\' && i + 1 < n) ++i;
        ++i;
      }
      if (i >= n) fail(Errc::ParseFailure, "unterminated char literal at byte " + std::to_string(start));
      ++i;
      push(TokKind::CharLit, start, i);
      continue;
    }
    // Multi-character operators and punctuation.
    bool matched = false;
    for (std::string_view op : kMultiOps) {
      if (src.substr(i, op.size()) == op) {
        TokKind kind = (op == "..." || op == "@" || op == "::" || op == "->")
                           ? TokKind::Punct
                           : TokKind::Operator;
        push(kind, i, i + op.size());
        i += op.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    switch (c) {
      case '(': case ')': case '{': case '}': case '[': case ']':
      case ';': case ',': case '.': case '?': case ':':
        push(TokKind::Punct, i, i + 1);
        ++i;
        break;
      case '=': case '<': case '>': case '+': case '-': case '*': case '/':
      case '%': case '!': case '~': case '&': case '|': case '^':
        push(TokKind::Operator, i, i + 1);
        ++i;
        break;
      default:
        fail(Errc::ParseFailure,
             std::string("unexpected character '") + c + "' at byte " + std::to_string(i));
    }
  }
  out.push_back(Token{TokKind::End, "", static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n)});
  return out;
}

}  // namespace obo
