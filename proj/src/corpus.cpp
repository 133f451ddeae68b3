#include "obo/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "obo/error.hpp"
#include "obo/parser.hpp"
#include "obo/rng.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace obo {

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
    case Split::Unassigned: return "unassigned";
  }
  return "unassigned";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "validation") return Split::Validation;
  if (name == "test") return Split::Test;
  if (name == "unassigned") return Split::Unassigned;
  fail(Errc::IoError, "unknown split '" + name + "'");
}

const char* cmp_op_name(CmpOp op) {
  switch (op) {
    case CmpOp::LT: return "LT";
    case CmpOp::LE: return "LE";
    case CmpOp::GT: return "GT";
    case CmpOp::GE: return "GE";
  }
  return "LT";
}

CmpOp cmp_op_from_name(const std::string& name) {
  if (name == "LT") return CmpOp::LT;
  if (name == "LE") return CmpOp::LE;
  if (name == "GT") return CmpOp::GT;
  if (name == "GE") return CmpOp::GE;
  fail(Errc::IoError, "unknown operator '" + name + "'");
}

const char* cmp_op_token(CmpOp op) {
  switch (op) {
    case CmpOp::LT: return "<";
    case CmpOp::LE: return "<=";
    case CmpOp::GT: return ">";
    case CmpOp::GE: return ">=";
  }
  return "<";
}

CmpOp cmp_op_flip(CmpOp op) {
  switch (op) {
    case CmpOp::LT: return CmpOp::LE;
    case CmpOp::LE: return CmpOp::LT;
    case CmpOp::GT: return CmpOp::GE;
    case CmpOp::GE: return CmpOp::GT;
  }
  return CmpOp::LT;
}

const char* construct_name(Construct c) {
  switch (c) {
    case Construct::IF: return "IF";
    case Construct::FOR: return "FOR";
    case Construct::WHILE: return "WHILE";
    case Construct::DO_WHILE: return "DO_WHILE";
    case Construct::TERNARY: return "TERNARY";
  }
  return "IF";
}

Construct construct_from_name(const std::string& name) {
  if (name == "IF") return Construct::IF;
  if (name == "FOR") return Construct::FOR;
  if (name == "WHILE") return Construct::WHILE;
  if (name == "DO_WHILE") return Construct::DO_WHILE;
  if (name == "TERNARY") return Construct::TERNARY;
  fail(Errc::IoError, "unknown construct '" + name + "'");
}

std::string method_content_id(const std::string& project, const std::string& file,
                              const std::string& source) {
  std::string payload;
  payload.reserve(project.size() + file.size() + source.size() + 2);
  payload += project;
  payload += '\x1f';
  payload += file;
  payload += '\x1f';
  payload += source;
  std::uint64_t h = fnv1a64(payload);
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

std::vector<MethodUnit> extract_methods(const std::string& file_source,
                                        const std::string& project, const std::string& file) {
  std::vector<MethodSpan> spans;
  try {
    spans = scan_method_spans(file_source);
  } catch (const Error& e) {
    fail(Errc::ParseFailure, file + ": " + e.what());
  }
  std::vector<MethodUnit> out;
  out.reserve(spans.size());
  for (const MethodSpan& s : spans) {
    std::string text = file_source.substr(s.begin, s.end - s.begin);
    MethodUnit u;
    try {
      u.ast = parse_method(text, s.is_ctor);
    } catch (const Error& e) {
      fail(Errc::ParseFailure,
           file + " (method at byte " + std::to_string(s.begin) + "): " + e.what());
    }
    u.project = project;
    u.file = file;
    u.source = std::move(text);
    u.id = method_content_id(project, file, u.source);
    out.push_back(std::move(u));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Mutation candidates
// ---------------------------------------------------------------------------

namespace {

bool is_comparison_kind(NodeKind k) {
  return k == NodeKind::LtExpr || k == NodeKind::LeExpr || k == NodeKind::GtExpr ||
         k == NodeKind::GeExpr;
}

CmpOp cmp_op_of_kind(NodeKind k) {
  switch (k) {
    case NodeKind::LtExpr: return CmpOp::LT;
    case NodeKind::LeExpr: return CmpOp::LE;
    case NodeKind::GtExpr: return CmpOp::GT;
    default: return CmpOp::GE;
  }
}

// Expression kinds through which a condition context is preserved: the
// comparison is still syntactically part of the hosting condition.
bool is_transparent_expr(NodeKind k) {
  switch (k) {
    case NodeKind::ParenExpr:
    case NodeKind::OrExpr:
    case NodeKind::AndExpr:
    case NodeKind::BitOrExpr:
    case NodeKind::BitXorExpr:
    case NodeKind::BitAndExpr:
    case NodeKind::EqExpr:
    case NodeKind::NeExpr:
    case NodeKind::LtExpr:
    case NodeKind::GtExpr:
    case NodeKind::LeExpr:
    case NodeKind::GeExpr:
    case NodeKind::InstanceOfExpr:
    case NodeKind::ShlExpr:
    case NodeKind::ShrExpr:
    case NodeKind::UshrExpr:
    case NodeKind::AddExpr:
    case NodeKind::SubExpr:
    case NodeKind::MulExpr:
    case NodeKind::DivExpr:
    case NodeKind::ModExpr:
    case NodeKind::PlusExpr:
    case NodeKind::NegExpr:
    case NodeKind::NotExpr:
    case NodeKind::BitNotExpr:
    case NodeKind::CastExpr:
    case NodeKind::ForCond:
      return true;
    default:
      return false;
  }
}

struct CandidateWalker {
  std::vector<MutationSite> out;
  NodePath path;

  void walk(const AstNode& n, const Construct* ctx) {
    if (n.kind == NodeKind::AnonClassBody || n.kind == NodeKind::LocalTypeDecl) {
      // Code owned by a separately extracted unit.
      return;
    }
    if (is_comparison_kind(n.kind) && ctx != nullptr) {
      out.push_back(MutationSite{path, cmp_op_of_kind(n.kind), *ctx});
    }
    for (std::uint32_t i = 0; i < n.children.size(); ++i) {
      path.push_back(i);
      walk_child(n, i, ctx);
      path.pop_back();
    }
  }

  void walk_child(const AstNode& n, std::uint32_t i, const Construct* ctx) {
    const AstNode& c = n.children[i];
    static constexpr Construct kIf = Construct::IF;
    static constexpr Construct kFor = Construct::FOR;
    static constexpr Construct kWhile = Construct::WHILE;
    static constexpr Construct kDoWhile = Construct::DO_WHILE;
    static constexpr Construct kTernary = Construct::TERNARY;
    switch (n.kind) {
      case NodeKind::IfStmt:
        walk(c, i == 1 ? &kIf : nullptr);
        return;
      case NodeKind::WhileStmt:
        walk(c, i == 1 ? &kWhile : nullptr);
        return;
      case NodeKind::DoStmt:
        walk(c, i + 1 == n.children.size() ? &kDoWhile : nullptr);
        return;
      case NodeKind::ForStmt:
        walk(c, c.kind == NodeKind::ForCond ? &kFor : nullptr);
        return;
      case NodeKind::TernaryExpr:
        walk(c, i == 0 ? &kTernary : nullptr);
        return;
      default:
        walk(c, is_transparent_expr(n.kind) ? ctx : nullptr);
        return;
    }
  }
};

}  // namespace

std::vector<MutationSite> find_mutation_candidates(const MethodUnit& method) {
  CandidateWalker w;
  w.walk(method.ast, nullptr);
  return w.out;
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

CorpusIndex ingest_corpus(const fs::path& root, SplitFractions fractions, std::uint64_t seed) {
  if (!fs::exists(root) || !fs::is_directory(root))
    fail(Errc::IoError, "corpus root does not exist: " + root.string());
  double sum = fractions.train + fractions.validation + fractions.test;
  if (std::abs(sum - 1.0) > 1e-9)
    fail(Errc::InvalidFractions, "split fractions sum to " + std::to_string(sum));

  CorpusIndex index;
  index.seed = seed;

  std::vector<std::string> projects;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) projects.push_back(entry.path().filename().string());
  std::sort(projects.begin(), projects.end());

  std::size_t parsable_files = 0;
  for (const std::string& project : projects) {
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root / project)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".java") continue;
      files.push_back(fs::relative(entry.path(), root).generic_string());
    }
    std::sort(files.begin(), files.end());
    for (const std::string& rel : files) {
      std::ifstream in(root / rel, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      try {
        std::vector<MethodUnit> units = extract_methods(buf.str(), project, rel);
        ++parsable_files;
        for (MethodUnit& u : units) index.methods.push_back(std::move(u));
      } catch (const Error& e) {
        index.skipped_files.push_back(rel + ": " + e.what());
      }
    }
  }
  if (parsable_files == 0) fail(Errc::EmptyCorpus, "no parsable Java file under " + root.string());

  // Project-level split: shuffle projects with the seeded RNG, then cut by
  // rounded fractions (each split within one project of its target).
  std::vector<std::string> shuffled = projects;
  Rng rng(seed);
  rng.shuffle(shuffled);
  std::size_t p = shuffled.size();
  std::size_t n_train = static_cast<std::size_t>(std::llround(fractions.train * double(p)));
  std::size_t n_val = static_cast<std::size_t>(std::llround(fractions.validation * double(p)));
  n_train = std::min(n_train, p);
  n_val = std::min(n_val, p - n_train);
  for (std::size_t i = 0; i < p; ++i) {
    Split s = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Validation : Split::Test);
    index.split_assignment[shuffled[i]] = s;
  }
  for (MethodUnit& m : index.methods) m.split = index.split_assignment.at(m.project);
  return index;
}

void write_corpus_jsonl(const CorpusIndex& index, const fs::path& out) {
  std::ofstream os(out, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + out.string() + " for writing");
  for (const MethodUnit& m : index.methods) {
    ordered_json j;
    j["id"] = m.id;
    j["project"] = m.project;
    j["file"] = m.file;
    j["split"] = split_name(m.split);
    j["source"] = m.source;
    os << j.dump() << '\n';
  }
}

CorpusIndex read_corpus_jsonl(const fs::path& in) {
  std::ifstream is(in, std::ios::binary);
  if (!is) fail(Errc::IoError, "cannot open " + in.string());
  CorpusIndex index;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line);
    MethodUnit m;
    m.id = j.at("id").get<std::string>();
    m.project = j.at("project").get<std::string>();
    m.file = j.at("file").get<std::string>();
    m.split = split_from_name(j.at("split").get<std::string>());
    m.source = j.at("source").get<std::string>();
    m.ast = parse_method(m.source, declaration_is_ctor(m.source));
    index.split_assignment[m.project] = m.split;
    index.methods.push_back(std::move(m));
  }
  return index;
}

}  // namespace obo
