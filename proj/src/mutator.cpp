#include "obo/mutator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "obo/error.hpp"
#include "obo/lexer.hpp"
#include "obo/parser.hpp"
#include "obo/rng.hpp"

using ordered_json = nlohmann::ordered_json;

namespace obo {

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

}  // namespace

LabeledExample mutate(const MethodUnit& method, const MutationSite& site) {
  const AstNode* node = resolve_path(method.ast, site.node_path);
  if (node == nullptr || !is_comparison_kind(node->kind) ||
      cmp_op_of_kind(node->kind) != site.op) {
    fail(Errc::SiteMismatch, "node at path does not match operator " +
                                 std::string(cmp_op_name(site.op)) + " in method " + method.id);
  }
  const AstNode& op_leaf = node->children.at(1);
  if (op_leaf.kind != NodeKind::Op || op_leaf.leaf_text != cmp_op_token(site.op))
    fail(Errc::SiteMismatch, "operator token mismatch in method " + method.id);

  std::string mutated = method.source;
  mutated.replace(op_leaf.span.begin, op_leaf.span.size(), cmp_op_token(cmp_op_flip(site.op)));

  MethodUnit unit;
  unit.project = method.project;
  unit.file = method.file;
  unit.source = std::move(mutated);
  unit.id = method_content_id(unit.project, unit.file, unit.source);
  unit.split = method.split;
  unit.ast = parse_method(unit.source, method.ast.kind == NodeKind::CtorDecl);

  LabeledExample ex;
  ex.method = std::move(unit);
  ex.label = Label::Defective;
  ex.origin_id = method.id;
  ex.mutated_site = site;
  return ex;
}

std::size_t mutant_sample_count(std::size_t candidates, std::uint32_t ratio) {
  if (ratio <= 1) return candidates;
  return static_cast<std::size_t>(std::llround(double(candidates) / double(ratio)));
}

std::size_t expected_dataset_size(std::size_t candidates, std::uint32_t ratio) {
  return candidates + mutant_sample_count(candidates, ratio);
}

std::vector<LabeledExample> build_dataset(const CorpusIndex& corpus, const DatasetSpec& spec) {
  struct Pick {
    const MethodUnit* method;
    MutationSite site;
  };
  Rng rng(spec.seed);
  std::vector<Pick> picks;
  for (const MethodUnit& m : corpus.methods) {
    std::vector<MutationSite> sites = find_mutation_candidates(m);
    if (sites.empty()) continue;
    std::size_t k = sites.size() == 1 ? 0 : static_cast<std::size_t>(rng.below(sites.size()));
    picks.push_back(Pick{&m, std::move(sites[k])});
  }
  if (picks.empty()) fail(Errc::NoCandidates, "no method has a mutation site");

  // Per-split subsampling of mutants; originals are always kept.
  std::map<Split, std::vector<std::size_t>> by_split;
  for (std::size_t i = 0; i < picks.size(); ++i)
    by_split[picks[i].method->split].push_back(i);
  std::vector<bool> keep_mutant(picks.size(), true);
  if (spec.ratio > 1) {
    std::fill(keep_mutant.begin(), keep_mutant.end(), false);
    for (auto& [split, indices] : by_split) {
      std::size_t k = mutant_sample_count(indices.size(), spec.ratio);
      Rng split_rng = rng.fork(static_cast<std::uint64_t>(split) + 1);
      for (std::size_t local : split_rng.sample_indices(indices.size(), k))
        keep_mutant[indices[local]] = true;
    }
  }

  std::vector<LabeledExample> out;
  out.reserve(picks.size() * 2);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    LabeledExample orig;
    orig.method = *picks[i].method;
    orig.label = Label::NonDefective;
    orig.origin_id = picks[i].method->id;
    out.push_back(std::move(orig));
    if (keep_mutant[i]) out.push_back(mutate(*picks[i].method, picks[i].site));
  }
  return out;
}

namespace {

// Levenshtein distance over the operator-token sequences of two sources.
std::size_t operator_token_distance(const std::string& a, const std::string& b) {
  auto ops = [](const std::string& src) {
    std::vector<std::string> out;
    for (const Token& t : lex_java(src))
      if (t.kind == TokKind::Operator) out.push_back(t.text);
    return out;
  };
  std::vector<std::string> x = ops(a), y = ops(b);
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

}  // namespace

ValidationReport verify_dataset(const std::vector<LabeledExample>& examples) {
  ValidationReport report;
  std::map<std::string, const LabeledExample*> by_id;
  for (const LabeledExample& ex : examples) by_id.emplace(ex.method.id, &ex);

  for (const LabeledExample& ex : examples) {
    SplitClassCounts& counts = report.per_split[ex.method.split];
    if (ex.label == Label::Defective) ++counts.defective;
    else ++counts.non_defective;

    if (ex.label != Label::Defective) continue;
    auto it = by_id.find(ex.origin_id);
    if (it == by_id.end()) {
      report.operator_delta_violations.push_back(ex.method.id + ": origin " + ex.origin_id +
                                                 " not present in dataset");
      continue;
    }
    const LabeledExample& origin = *it->second;
    std::size_t dist;
    try {
      dist = operator_token_distance(origin.method.source, ex.method.source);
    } catch (const Error&) {
      report.operator_delta_violations.push_back(ex.method.id + ": source not lexable");
      continue;
    }
    if (dist != 1) {
      report.operator_delta_violations.push_back(
          ex.method.id + ": operator-token distance to origin is " + std::to_string(dist));
    }
    if (origin.method.split != ex.method.split) {
      report.split_violations.push_back(ex.method.id + ": mutant in " +
                                        split_name(ex.method.split) + ", origin in " +
                                        split_name(origin.method.split));
    }
  }
  return report;
}

void write_dataset_jsonl(const std::vector<LabeledExample>& examples,
                         const std::filesystem::path& out) {
  std::ofstream os(out, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + out.string() + " for writing");
  for (const LabeledExample& ex : examples) {
    ordered_json j;
    j["id"] = ex.method.id;
    j["origin_id"] = ex.origin_id;
    j["project"] = ex.method.project;
    j["split"] = split_name(ex.method.split);
    j["label"] = ex.label == Label::Defective ? 1 : 0;
    j["source"] = ex.method.source;
    if (ex.mutated_site) {
      ordered_json site;
      site["node_path"] = ex.mutated_site->node_path;
      site["operator"] = cmp_op_name(ex.mutated_site->op);
      site["construct"] = construct_name(ex.mutated_site->construct);
      j["site"] = site;
    } else {
      j["site"] = nullptr;
    }
    os << j.dump() << '\n';
  }
}

std::vector<LabeledExample> read_dataset_jsonl(const std::filesystem::path& in) {
  std::ifstream is(in, std::ios::binary);
  if (!is) fail(Errc::IoError, "cannot open " + in.string());
  std::vector<LabeledExample> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ordered_json j = ordered_json::parse(line);
    LabeledExample ex;
    ex.method.id = j.at("id").get<std::string>();
    ex.origin_id = j.at("origin_id").get<std::string>();
    ex.method.project = j.at("project").get<std::string>();
    ex.method.split = split_from_name(j.at("split").get<std::string>());
    ex.label = j.at("label").get<int>() == 1 ? Label::Defective : Label::NonDefective;
    ex.method.source = j.at("source").get<std::string>();
    ex.method.ast = parse_method(ex.method.source, declaration_is_ctor(ex.method.source));
    if (!j.at("site").is_null()) {
      MutationSite site;
      site.node_path = j.at("site").at("node_path").get<NodePath>();
      site.op = cmp_op_from_name(j.at("site").at("operator").get<std::string>());
      site.construct = construct_from_name(j.at("site").at("construct").get<std::string>());
      ex.mutated_site = site;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace obo
