#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace obo {

// Closed node-kind set for the simplified Java grammar. Terminal kinds carry
// token text; interior kinds carry children. The set intentionally tracks
// standard Java grammar productions at method granularity and nothing finer:
// no symbol binding, no type resolution.
enum class NodeKind : std::uint8_t {
  // declarations
  MethodDecl,
  CtorDecl,
  Param,
  TypeRef,
  AnonClassBody,
  LocalTypeDecl,
  // statements
  Block,
  IfStmt,
  WhileStmt,
  DoStmt,
  ForStmt,
  ForInit,
  ForCond,
  ForUpdate,
  ForEachStmt,
  ReturnStmt,
  ExprStmt,
  VarDeclStmt,
  VarDeclarator,
  BreakStmt,
  ContinueStmt,
  ThrowStmt,
  TryStmt,
  TryResource,
  CatchClause,
  FinallyClause,
  SwitchStmt,
  SwitchCase,
  SyncStmt,
  LabeledStmt,
  AssertStmt,
  // expressions
  AssignExpr,
  TernaryExpr,
  OrExpr,
  AndExpr,
  BitOrExpr,
  BitXorExpr,
  BitAndExpr,
  EqExpr,
  NeExpr,
  LtExpr,
  GtExpr,
  LeExpr,
  GeExpr,
  InstanceOfExpr,
  ShlExpr,
  ShrExpr,
  UshrExpr,
  AddExpr,
  SubExpr,
  MulExpr,
  DivExpr,
  ModExpr,
  PreIncExpr,
  PreDecExpr,
  PlusExpr,
  NegExpr,
  NotExpr,
  BitNotExpr,
  PostIncExpr,
  PostDecExpr,
  CastExpr,
  NewExpr,
  ArrayNewExpr,
  ArrayInitExpr,
  ArrayAccessExpr,
  FieldAccessExpr,
  CallExpr,
  MethodRefExpr,
  LambdaExpr,
  ParenExpr,
  // terminals
  Ident,
  IntLit,
  LongLit,
  FloatLit,
  DoubleLit,
  CharLit,
  StrLit,
  BoolLit,
  NullLit,
  Kw,
  Op,
};

const char* node_kind_name(NodeKind k);
bool node_kind_is_terminal(NodeKind k);

// Half-open byte range into the method source.
struct Span {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::uint32_t size() const { return end - begin; }
};

struct AstNode {
  NodeKind kind;
  Span span;
  std::string leaf_text;           // terminals only
  std::vector<AstNode> children;   // interior nodes only

  bool is_terminal() const { return children.empty(); }
};

// Index path from a root to a descendant; empty path addresses the root.
using NodePath = std::vector<std::uint32_t>;

// Returns nullptr when the path walks off the tree.
const AstNode* resolve_path(const AstNode& root, const NodePath& path);

// Pre-order terminal list as (node pointer, path) pairs.
struct TerminalRef {
  const AstNode* node;
  NodePath path;
};
std::vector<TerminalRef> collect_terminals(const AstNode& root);

}  // namespace obo
