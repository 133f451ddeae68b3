#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace obo {

enum class TokKind : std::uint8_t {
  Ident,
  Keyword,
  IntLit,
  LongLit,
  FloatLit,
  DoubleLit,
  CharLit,
  StrLit,
  BoolLit,
  NullLit,
  Operator,
  Punct,
  End,
};

struct Token {
  TokKind kind;
  std::string text;
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  bool is(TokKind k) const { return kind == k; }
  bool is(TokKind k, std::string_view t) const { return kind == k && text == t; }
};

// Lexes Java source into tokens, dropping whitespace and comments. A trailing
// End token is always appended. Throws Error(ParseFailure) on unterminated
// literals or comments.
std::vector<Token> lex_java(std::string_view source);

bool is_java_keyword(std::string_view word);

}  // namespace obo
