#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "obo/corpus.hpp"
#include "obo/error.hpp"
#include "obo/pathctx.hpp"

using namespace obo;
namespace fs = std::filesystem;

namespace {

fs::path fixture_root() { return fs::path(OBO_FIXTURE_DIR) / "corpus"; }

fs::path fresh_temp_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("obo_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

MethodUnit unit_from(const std::string& class_body) {
  auto units = extract_methods("class G { " + class_body + " }", "p", "G.java");
  REQUIRE(units.size() == 1);
  return units[0];
}

// Independent path oracle: walks parent pointers gathered by an explicit
// traversal instead of index-path prefixes.
struct ParentOracle {
  std::map<const AstNode*, const AstNode*> parent;
  std::map<const AstNode*, std::size_t> child_index;

  explicit ParentOracle(const AstNode& root) { walk(root); }
  void walk(const AstNode& n) {
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      parent[&n.children[i]] = &n;
      child_index[&n.children[i]] = i;
      walk(n.children[i]);
    }
  }

  std::vector<const AstNode*> chain_to_root(const AstNode* n) const {
    std::vector<const AstNode*> out{n};
    while (parent.count(out.back())) out.push_back(parent.at(out.back()));
    return out;
  }

  std::tuple<std::vector<NodeKind>, std::vector<bool>, std::uint32_t> path(
      const AstNode* s, const AstNode* t) const {
    auto cs = chain_to_root(s);  // s .. root
    auto ct = chain_to_root(t);
    std::set<const AstNode*> s_anc(cs.begin(), cs.end());
    const AstNode* lca = nullptr;
    std::size_t t_lca_pos = 0;
    for (std::size_t i = 0; i < ct.size(); ++i) {
      if (s_anc.count(ct[i])) {
        lca = ct[i];
        t_lca_pos = i;
        break;
      }
    }
    REQUIRE(lca != nullptr);
    std::vector<NodeKind> kinds;
    std::vector<bool> moves;
    std::size_t s_lca_pos = 0;
    while (cs[s_lca_pos] != lca) ++s_lca_pos;
    for (std::size_t i = 0; i <= s_lca_pos; ++i) {
      kinds.push_back(cs[i]->kind);
      if (i < s_lca_pos) moves.push_back(true);
    }
    moves.push_back(false);  // move down from the LCA
    for (std::size_t i = t_lca_pos; i-- > 0;) {
      kinds.push_back(ct[i]->kind);
      if (i > 0) moves.push_back(false);
    }
    const AstNode* sb = cs[s_lca_pos - 1];
    const AstNode* tb = ct[t_lca_pos - 1];
    std::uint32_t width = static_cast<std::uint32_t>(
        child_index.at(tb) > child_index.at(sb) ? child_index.at(tb) - child_index.at(sb)
                                                : child_index.at(sb) - child_index.at(tb));
    return {kinds, moves, width};
  }
};

}  // namespace

TEST_CASE("split_subtokens: camelCase split, lowercased") {
  CHECK(split_subtokens("stringBuilder") == std::vector<std::string>{"string", "builder"});
}

TEST_CASE("split_subtokens: single letter") {
  CHECK(split_subtokens("x") == std::vector<std::string>{"x"});
}

TEST_CASE("split_subtokens: acronyms, digits and underscores") {
  CHECK(split_subtokens("parseHTTPResponse2") ==
        std::vector<std::string>{"parse", "http", "response", "2"});
  CHECK(split_subtokens("MAX_VALUE") == std::vector<std::string>{"max", "value"});
  CHECK(split_subtokens("foo_bar_9") == std::vector<std::string>{"foo", "bar", "9"});
}

TEST_CASE("split_subtokens: operator glyphs stay whole") {
  CHECK(split_subtokens("<=") == std::vector<std::string>{"<="});
  CHECK(split_subtokens("+") == std::vector<std::string>{"+"});
}

TEST_CASE("extract_path_contexts: k terminals with generous limits give C(k,2) pairs") {
  // 'int f() { return a; }' -> terminals: int, f, return, a
  MethodUnit m = unit_from("int f() { return a; }");
  ExtractLimits lim;
  lim.max_length = 64;
  lim.max_width = 64;
  lim.c_max = 100;
  PathContextBag bag = extract_path_contexts(m, lim);
  CHECK(bag.real_count() == 6);
  CHECK(!bag.no_terminals);
}

TEST_CASE("extract_path_contexts: single-terminal method is all-padded and flagged") {
  // A constructor 'G() {}' has exactly one eligible terminal (the name).
  auto units = extract_methods("class G { G() {} }", "p", "G.java");
  REQUIRE(units.size() == 1);
  ExtractLimits lim;
  PathContextBag bag = extract_path_contexts(units[0], lim);
  CHECK(bag.no_terminals);
  CHECK(bag.real_count() == 0);
  CHECK(bag.capacity == lim.c_max);
}

TEST_CASE("extract_path_contexts: surviving pairs equal brute-force enumeration") {
  std::string src = slurp(fixture_root() / "projA/src/Search.java");
  auto units = extract_methods(src, "projA", "src/Search.java");
  ExtractLimits lim;
  lim.max_length = 8;
  lim.max_width = 2;
  lim.c_max = 200000;  // no subsampling: the full surviving set
  for (const auto& u : units) {
    PathContextBag bag = extract_path_contexts(u, lim);

    ParentOracle oracle(u.ast);
    std::vector<const AstNode*> terms;
    for (const TerminalRef& ref : collect_terminals(u.ast))
      if (is_context_terminal(*ref.node)) terms.push_back(ref.node);
    std::multiset<std::string> expected;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      for (std::size_t j = i + 1; j < terms.size(); ++j) {
        auto [kinds, moves, width] = oracle.path(terms[i], terms[j]);
        if (kinds.size() > lim.max_length || width > lim.max_width) continue;
        RawPath rp;
        rp.kinds = kinds;
        rp.move_up = moves;
        rp.width = width;
        expected.insert(terms[i]->leaf_text + "," + path_to_string(rp) + "," +
                        terms[j]->leaf_text);
      }
    }
    std::multiset<std::string> got;
    for (const PathContext& ctx : bag.contexts)
      got.insert(ctx.start_token + "," + path_to_string(ctx.path) + "," + ctx.end_token);
    CHECK(got == expected);
  }
}

TEST_CASE("extract_path_contexts: limits are enforced on every emitted path") {
  CorpusIndex idx = ingest_corpus(fixture_root(), SplitFractions{0.8, 0.1, 0.1}, 7);
  ExtractLimits lim;  // defaults: 8 / 2 / 200
  for (const MethodUnit& m : idx.methods) {
    PathContextBag bag = extract_path_contexts(m, lim);
    CHECK(bag.real_count() <= lim.c_max);
    for (const PathContext& ctx : bag.contexts) {
      CHECK(ctx.path.kinds.size() <= lim.max_length);
      CHECK(ctx.path.width <= lim.max_width);
      CHECK(ctx.path.move_up.size() + 1 == ctx.path.kinds.size());
    }
  }
}

TEST_CASE("extract_path_contexts: oversampling is seeded and deterministic") {
  std::string src = slurp(fixture_root() / "projB/src/Heap.java");
  auto units = extract_methods(src, "projB", "src/Heap.java");
  ExtractLimits lim;
  lim.c_max = 10;  // force subsampling
  lim.seed = 99;
  for (const auto& u : units) {
    PathContextBag a = extract_path_contexts(u, lim);
    PathContextBag b = extract_path_contexts(u, lim);
    REQUIRE(a.real_count() == b.real_count());
    for (std::size_t i = 0; i < a.contexts.size(); ++i)
      CHECK(path_to_string(a.contexts[i].path) == path_to_string(b.contexts[i].path));
  }
}

TEST_CASE("path symmetry: reversed pair gives the reversed path with flipped arrows") {
  MethodUnit m = unit_from("int f(int a, int b) { if (a < b) { return a; } return b; }");
  auto terminals = collect_terminals(m.ast);
  std::vector<TerminalRef> terms;
  for (TerminalRef& ref : terminals)
    if (is_context_terminal(*ref.node)) terms.push_back(std::move(ref));
  REQUIRE(terms.size() >= 2);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    for (std::size_t j = i + 1; j < terms.size(); ++j) {
      RawPath fwd = path_between(m.ast, terms[i], terms[j]);
      RawPath rev = path_between(m.ast, terms[j], terms[i]);
      REQUIRE(fwd.kinds.size() == rev.kinds.size());
      CHECK(fwd.width == rev.width);
      std::size_t n = fwd.kinds.size();
      for (std::size_t k = 0; k < n; ++k) CHECK(fwd.kinds[k] == rev.kinds[n - 1 - k]);
      for (std::size_t k = 0; k + 1 < n; ++k)
        CHECK(fwd.move_up[k] == !rev.move_up[n - 2 - k]);
    }
  }
}

TEST_CASE("path string round-trips") {
  MethodUnit m = unit_from("int f(int i, int n) { while (i <= n) { i++; } return i; }");
  ExtractLimits lim;
  lim.max_length = 16;
  lim.max_width = 16;
  PathContextBag bag = extract_path_contexts(m, lim);
  REQUIRE(bag.real_count() > 0);
  for (const PathContext& ctx : bag.contexts) {
    RawPath back = path_from_string(path_to_string(ctx.path));
    CHECK(back.kinds == ctx.path.kinds);
    CHECK(back.move_up == ctx.path.move_up);
  }
}

TEST_CASE("build_vocabularies: shared token ranks above singletons") {
  MethodUnit m1 = unit_from("int f(int i) { return i; }");
  MethodUnit m2 = unit_from("int g(int i) { return i; }");
  ExtractLimits lim;
  lim.max_length = 32;
  lim.max_width = 32;
  PathContextBag b1 = extract_path_contexts(m1, lim);
  PathContextBag b2 = extract_path_contexts(m2, lim);
  VocabCaps caps;
  Vocabularies v = build_vocabularies({b1, b2}, caps);
  auto rank = [&](const std::string& s) { return v.token.find(s); };
  CHECK(rank("i") < rank("f"));
  CHECK(rank("i") < rank("g"));
  CHECK(rank("i") >= 2);  // PAD and UNK stay pinned
}

TEST_CASE("build_vocabularies: cap 3 keeps 3 entries plus PAD/UNK") {
  MethodUnit m = unit_from("int f(int a, int b, int c) { return a; }");
  ExtractLimits lim;
  lim.max_length = 32;
  lim.max_width = 32;
  PathContextBag bag = extract_path_contexts(m, lim);
  VocabCaps caps;
  caps.token = 3;
  Vocabularies v = build_vocabularies({bag}, caps);
  CHECK(v.token.size() == 5);  // PAD, UNK, 3 kept
  CHECK(v.token.entries[0] == Vocab::kPadText);
  CHECK(v.token.entries[1] == Vocab::kUnkText);
}

TEST_CASE("build_vocabularies: empty training bags are rejected") {
  PathContextBag empty;
  empty.capacity = 8;
  empty.no_terminals = true;
  try {
    build_vocabularies({empty}, VocabCaps{});
    FAIL("expected EmptyTraining");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyTraining);
  }
}

TEST_CASE("build_vocabularies: vocab.json byte-identical across reruns") {
  CorpusIndex idx = ingest_corpus(fixture_root(), SplitFractions{0.8, 0.1, 0.1}, 7);
  ExtractLimits lim;
  std::vector<PathContextBag> bags;
  for (const MethodUnit& m : idx.methods)
    if (m.split == Split::Train) bags.push_back(extract_path_contexts(m, lim));
  fs::path dir = fresh_temp_dir("vocabjson");
  Vocabularies v1 = build_vocabularies(bags, VocabCaps{});
  write_vocab_json(v1, dir / "a.json");
  Vocabularies v2 = build_vocabularies(bags, VocabCaps{});
  write_vocab_json(v2, dir / "b.json");
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  Vocabularies back = read_vocab_json(dir / "a.json");
  CHECK(back.token.entries == v1.token.entries);
  CHECK(back.path.entries == v1.path.entries);
  CHECK(back.subtoken.entries == v1.subtoken.entries);
  CHECK(back.node_kind.entries == v1.node_kind.entries);
}

TEST_CASE("encode_example: out-of-vocabulary token maps to UNK and counts") {
  MethodUnit train_m = unit_from("int f(int i) { return i; }");
  MethodUnit test_m = unit_from("int zzUnseen(int qqNovel) { return qqNovel; }");
  ExtractLimits lim;
  lim.max_length = 32;
  lim.max_width = 32;
  PathContextBag train_bag = extract_path_contexts(train_m, lim);
  PathContextBag test_bag = extract_path_contexts(test_m, lim);
  Vocabularies v = build_vocabularies({train_bag}, VocabCaps{});
  v.unk_hits = 0;
  EncodedExample enc = encode_example(test_bag, v, EncodeMode::C2V, lim);
  CHECK(v.unk_hits > 0);
  bool saw_unk = false;
  for (const EncodedSlot& s : enc.slots)
    if (s.real && (s.token_s == Vocab::kUnk || s.token_t == Vocab::kUnk)) saw_unk = true;
  CHECK(saw_unk);

  // Exact accounting: recount out-of-vocabulary lookups independently.
  std::uint64_t expected = 0;
  for (const PathContext& ctx : test_bag.contexts) {
    if (v.token.index.find(ctx.start_token) == v.token.index.end()) ++expected;
    if (v.path.index.find(path_to_string(ctx.path)) == v.path.index.end()) ++expected;
    if (v.token.index.find(ctx.end_token) == v.token.index.end()) ++expected;
  }
  CHECK(v.unk_hits == expected);
}

TEST_CASE("encode_example: padded slots stay PAD with mask preserved") {
  MethodUnit m = unit_from("int f(int i) { return i; }");
  ExtractLimits lim;
  lim.max_length = 32;
  lim.max_width = 32;
  lim.c_max = 64;
  PathContextBag bag = extract_path_contexts(m, lim);
  REQUIRE(bag.real_count() < 64);
  Vocabularies v = build_vocabularies({bag}, VocabCaps{});
  for (EncodeMode mode : {EncodeMode::C2V, EncodeMode::C2S}) {
    EncodedExample enc = encode_example(bag, v, mode, lim);
    CHECK(enc.slots.size() == 64);
    std::size_t real = 0;
    for (const EncodedSlot& s : enc.slots) {
      if (s.real) {
        ++real;
        continue;
      }
      CHECK(s.token_s == Vocab::kPad);
      CHECK(s.path_id == Vocab::kPad);
      CHECK(s.token_t == Vocab::kPad);
      for (std::int32_t x : s.sub_s) CHECK(x == Vocab::kPad);
      for (std::int32_t x : s.path_steps) CHECK(x == Vocab::kPad);
    }
    CHECK(real == bag.real_count());  // mask conservation
  }
}

TEST_CASE("encode_example: in-vocab indices decode back to the original strings") {
  MethodUnit m = unit_from(
      "int countUp(int maxValue) { int i = 0; while (i < maxValue) { i++; } return i; }");
  ExtractLimits lim;
  lim.max_length = 32;
  lim.max_width = 32;
  PathContextBag bag = extract_path_contexts(m, lim);
  Vocabularies v = build_vocabularies({bag}, VocabCaps{});
  EncodedExample c2v = encode_example(bag, v, EncodeMode::C2V, lim);
  for (std::size_t i = 0; i < bag.contexts.size(); ++i) {
    CHECK(v.token.entries[c2v.slots[i].token_s] == bag.contexts[i].start_token);
    CHECK(v.token.entries[c2v.slots[i].token_t] == bag.contexts[i].end_token);
    CHECK(v.path.entries[c2v.slots[i].path_id] == path_to_string(bag.contexts[i].path));
  }
  EncodedExample c2s = encode_example(bag, v, EncodeMode::C2S, lim);
  for (std::size_t i = 0; i < bag.contexts.size(); ++i) {
    auto subs = split_subtokens(bag.contexts[i].start_token);
    for (std::size_t k = 0; k < subs.size() && k < lim.subtoken_cap; ++k)
      CHECK(v.subtoken.entries[c2s.slots[i].sub_s[k]] == subs[k]);
    for (std::size_t k = 0; k < bag.contexts[i].path.kinds.size(); ++k)
      CHECK(v.node_kind.entries[c2s.slots[i].path_steps[k]] ==
            step_string(bag.contexts[i].path, k));
  }
}

TEST_CASE("contexts.txt: write and read round-trip in both modes") {
  CorpusIndex idx = ingest_corpus(fixture_root(), SplitFractions{0.8, 0.1, 0.1}, 7);
  ExtractLimits lim;
  lim.c_max = 32;
  std::vector<PathContextBag> bags;
  int label = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    PathContextBag bag = extract_path_contexts(idx.methods[i], lim);
    bag.label = (label++) % 2;
    bags.push_back(std::move(bag));
  }
  fs::path dir = fresh_temp_dir("ctxtxt");

  write_contexts_txt(bags, EncodeMode::C2V, dir / "c2v.txt");
  auto back = read_contexts_txt(dir / "c2v.txt");
  REQUIRE(back.size() == bags.size());
  for (std::size_t i = 0; i < bags.size(); ++i) {
    CHECK(back[i].label == bags[i].label);
    CHECK(back[i].capacity == bags[i].capacity);
    REQUIRE(back[i].real_count() == bags[i].real_count());
    for (std::size_t k = 0; k < bags[i].contexts.size(); ++k) {
      CHECK(back[i].contexts[k].start_token == bags[i].contexts[k].start_token);
      CHECK(back[i].contexts[k].end_token == bags[i].contexts[k].end_token);
      CHECK(path_to_string(back[i].contexts[k].path) ==
            path_to_string(bags[i].contexts[k].path));
    }
  }

  // c2s mode: tokens become '+'-joined subtokens; re-splitting must agree.
  write_contexts_txt(bags, EncodeMode::C2S, dir / "c2s.txt");
  auto back_s = read_contexts_txt(dir / "c2s.txt");
  REQUIRE(back_s.size() == bags.size());
  for (std::size_t i = 0; i < bags.size(); ++i) {
    REQUIRE(back_s[i].real_count() == bags[i].real_count());
    for (std::size_t k = 0; k < bags[i].contexts.size(); ++k) {
      CHECK(split_subtokens(back_s[i].contexts[k].start_token) ==
            split_subtokens(bags[i].contexts[k].start_token));
      CHECK(split_subtokens(back_s[i].contexts[k].end_token) ==
            split_subtokens(bags[i].contexts[k].end_token));
    }
  }
}

TEST_CASE("string literal tokens are sanitized for the line format") {
  MethodUnit m = unit_from(R"(String f() { return "a, b|c d"; })");
  ExtractLimits lim;
  lim.max_length = 32;
  lim.max_width = 32;
  PathContextBag bag = extract_path_contexts(m, lim);
  bool found = false;
  for (const PathContext& ctx : bag.contexts) {
    for (const std::string* tok : {&ctx.start_token, &ctx.end_token}) {
      CHECK(tok->find(' ') == std::string::npos);
      CHECK(tok->find(',') == std::string::npos);
      CHECK(tok->find('|') == std::string::npos);
      if (tok->find("_b_c") != std::string::npos) found = true;
    }
  }
  CHECK(found);
}
