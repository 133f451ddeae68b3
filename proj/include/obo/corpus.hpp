#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "obo/ast.hpp"

namespace obo {

enum class Split : std::uint8_t { Train, Validation, Test, Unassigned };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

// One parsed Java method or constructor.
struct MethodUnit {
  std::string id;       // stable content hash of (project, file, source)
  std::string project;
  std::string file;     // path relative to the corpus root
  std::string source;   // declaration text, annotations excluded
  AstNode ast;          // root spans [0, source.size())
  Split split = Split::Unassigned;
};

std::string method_content_id(const std::string& project, const std::string& file,
                              const std::string& source);

// Comparison operators eligible for off-by-one mutation.
enum class CmpOp : std::uint8_t { LT, LE, GT, GE };
const char* cmp_op_name(CmpOp op);
CmpOp cmp_op_from_name(const std::string& name);
const char* cmp_op_token(CmpOp op);
CmpOp cmp_op_flip(CmpOp op);

// Conditional / loop constructs that can host a mutation.
enum class Construct : std::uint8_t { IF, FOR, WHILE, DO_WHILE, TERNARY };
const char* construct_name(Construct c);
Construct construct_from_name(const std::string& name);

struct MutationSite {
  NodePath node_path;   // root -> comparison node
  CmpOp op;             // operator of the addressed node
  Construct construct;  // nearest enclosing conditional/loop construct
};

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

struct CorpusIndex {
  std::vector<MethodUnit> methods;  // ordered by (project, file, position)
  std::map<std::string, Split> split_assignment;
  std::uint64_t seed = 0;
  std::vector<std::string> skipped_files;  // unparsable files, logged and skipped
};

// Parses one Java file into MethodUnits (methods and constructors, including
// those of nested, local and anonymous classes, in source order). Lambdas stay
// inside their enclosing unit. Throws Error(ParseFailure) naming the file.
std::vector<MethodUnit> extract_methods(const std::string& file_source,
                                        const std::string& project, const std::string& file);

// Every comparison (<, <=, >, >=) whose nearest expression-hosting construct
// is an if/for/while/do-while condition or a ternary condition, in pre-order.
std::vector<MutationSite> find_mutation_candidates(const MethodUnit& method);

// Walks `root`, where each first-level subdirectory is one project, extracts
// all methods, shuffles projects with the seeded RNG and partitions them by
// `fractions`. Unparsable files are recorded in skipped_files, never fatal.
CorpusIndex ingest_corpus(const std::filesystem::path& root, SplitFractions fractions,
                          std::uint64_t seed);

// corpus.jsonl: one object per method, keys id, project, file, split, source.
void write_corpus_jsonl(const CorpusIndex& index, const std::filesystem::path& out);
CorpusIndex read_corpus_jsonl(const std::filesystem::path& in);

}  // namespace obo
