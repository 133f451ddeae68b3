#pragma once

#include <string_view>
#include <vector>

#include "obo/ast.hpp"

namespace obo {

// One method or constructor declaration located in a compilation unit.
// Byte offsets address the file source; the span starts at the first
// declaration token after any annotations and ends after the closing brace.
struct MethodSpan {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  bool is_ctor = false;
};

// Structural scan of a whole Java file. Returns spans for every method and
// constructor body in source order, including methods of nested, local and
// anonymous classes. Bodyless declarations and initializer blocks yield no
// span. Throws Error(ParseFailure) on input the scanner cannot follow.
std::vector<MethodSpan> scan_method_spans(std::string_view file_source);

// Parses a single method/constructor declaration into the simplified AST.
// The root node (MethodDecl or CtorDecl) spans [0, method_source.size()).
AstNode parse_method(std::string_view method_source, bool is_ctor);

// True when the declaration's name directly follows its modifiers with no
// return type in between, i.e. the declaration is a constructor.
bool declaration_is_ctor(std::string_view method_source);

}  // namespace obo
