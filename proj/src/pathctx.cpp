#include "obo/pathctx.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "obo/error.hpp"
#include "obo/rng.hpp"

using ordered_json = nlohmann::ordered_json;

namespace obo {

std::vector<std::string> split_subtokens(const std::string& token) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  int prev = -1;  // previous alphanumeric char, original case
  for (std::size_t i = 0; i < token.size(); ++i) {
    unsigned char c = token[i];
    if (!std::isalnum(c)) {
      flush();
      prev = -1;
      continue;
    }
    if (prev >= 0 && !cur.empty()) {
      bool lower_to_upper = std::islower(prev) && std::isupper(c);
      bool alpha_digit_boundary = (std::isalpha(prev) && std::isdigit(c)) ||
                                  (std::isdigit(prev) && std::isalpha(c));
      // An uppercase run followed by a lowercase letter starts a new word:
      // "HTTPResponse" -> "http", "response".
      bool upper_run_end = std::isupper(prev) && std::isupper(c) && i + 1 < token.size() &&
                           std::islower(static_cast<unsigned char>(token[i + 1]));
      if (lower_to_upper || alpha_digit_boundary || upper_run_end) flush();
    }
    cur.push_back(static_cast<char>(std::tolower(c)));
    prev = c;
  }
  flush();
  if (out.empty()) out.push_back(token);  // operator glyphs stay whole
  return out;
}

bool is_context_terminal(const AstNode& leaf) {
  if (!leaf.is_terminal() || leaf.leaf_text.empty()) return false;
  if (leaf.kind == NodeKind::Op && leaf.leaf_text == "{}") return false;  // brace placeholder
  return node_kind_is_terminal(leaf.kind);
}

namespace {

std::string sanitize_token(const std::string& raw) {
  std::string out = raw;
  for (char& c : out) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u <= 0x20 || c == ',' || c == '|') c = '_';
  }
  return out;
}

}  // namespace

RawPath path_between(const AstNode& root, const TerminalRef& s, const TerminalRef& t) {
  std::size_t d = 0;
  while (d < s.path.size() && d < t.path.size() && s.path[d] == t.path[d]) ++d;
  RawPath p;
  p.width = t.path[d] > s.path[d] ? t.path[d] - s.path[d] : s.path[d] - t.path[d];

  std::vector<const AstNode*> chain_s{&root};
  const AstNode* n = &root;
  for (std::uint32_t idx : s.path) {
    n = &n->children[idx];
    chain_s.push_back(n);
  }
  std::vector<const AstNode*> chain_t{&root};
  n = &root;
  for (std::uint32_t idx : t.path) {
    n = &n->children[idx];
    chain_t.push_back(n);
  }
  // chain[k] is the node at depth k; the lowest common ancestor sits at depth d.
  for (std::size_t k = chain_s.size(); k-- > d;) p.kinds.push_back(chain_s[k]->kind);
  for (std::size_t k = d + 1; k < chain_t.size(); ++k) p.kinds.push_back(chain_t[k]->kind);
  std::size_t ups = chain_s.size() - 1 - d;
  std::size_t downs = chain_t.size() - 1 - d;
  for (std::size_t i = 0; i < ups; ++i) p.move_up.push_back(true);
  for (std::size_t i = 0; i < downs; ++i) p.move_up.push_back(false);
  return p;
}

std::string step_string(const RawPath& p, std::size_t i) {
  std::string s = node_kind_name(p.kinds[i]);
  if (i + 1 < p.kinds.size()) s += p.move_up[i] ? '^' : 'v';
  return s;
}

std::string path_to_string(const RawPath& p) {
  std::string out;
  for (std::size_t i = 0; i < p.kinds.size(); ++i) {
    if (i) out += '|';
    out += step_string(p, i);
  }
  return out;
}

RawPath path_from_string(const std::string& s) {
  RawPath p;
  std::stringstream ss(s);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '|')) parts.push_back(part);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    std::string name = parts[i];
    if (i + 1 < parts.size()) {
      char dir = name.back();
      name.pop_back();
      p.move_up.push_back(dir == '^');
    }
    p.kinds.push_back(node_kind_from_name(name));
  }
  return p;
}

PathContextBag extract_path_contexts(const MethodUnit& method, const ExtractLimits& limits) {
  PathContextBag bag;
  bag.method_id = method.id;
  bag.capacity = limits.c_max;

  std::vector<TerminalRef> all = collect_terminals(method.ast);
  std::vector<TerminalRef> terminals;
  for (TerminalRef& ref : all)
    if (is_context_terminal(*ref.node)) terminals.push_back(std::move(ref));

  if (terminals.size() < 2) {
    bag.no_terminals = true;
    return bag;
  }

  std::vector<PathContext> kept;
  for (std::size_t i = 0; i < terminals.size(); ++i) {
    for (std::size_t j = i + 1; j < terminals.size(); ++j) {
      RawPath p = path_between(method.ast, terminals[i], terminals[j]);
      if (p.kinds.size() > limits.max_length || p.width > limits.max_width) continue;
      PathContext ctx;
      ctx.start_token = sanitize_token(terminals[i].node->leaf_text);
      ctx.end_token = sanitize_token(terminals[j].node->leaf_text);
      ctx.path = std::move(p);
      kept.push_back(std::move(ctx));
    }
  }

  if (kept.size() > limits.c_max) {
    // Seed derived from the method text: the same source always yields the
    // same bag no matter which project or file it sits in.
    Rng rng(mix64(limits.seed, fnv1a64(method.source)));
    std::vector<std::size_t> pick = rng.sample_indices(kept.size(), limits.c_max);
    std::vector<PathContext> sampled;
    sampled.reserve(pick.size());
    for (std::size_t k : pick) sampled.push_back(std::move(kept[k]));
    kept = std::move(sampled);
  }
  if (kept.empty()) bag.no_terminals = true;  // nothing within limits: flagged
  bag.contexts = std::move(kept);
  return bag;
}

void Vocab::finish() {
  index.clear();
  index.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i)
    index.emplace(entries[i], static_cast<std::int32_t>(i));
}

std::int32_t Vocab::find(const std::string& s) const {
  auto it = index.find(s);
  return it == index.end() ? kUnk : it->second;
}

std::int32_t Vocabularies::lookup(const Vocab& v, const std::string& s) const {
  auto it = v.index.find(s);
  if (it == v.index.end()) {
    ++unk_hits;
    return Vocab::kUnk;
  }
  return it->second;
}

namespace {

void rank_into(Vocab& vocab, const std::map<std::string, std::uint64_t>& freq, std::size_t cap) {
  std::vector<std::pair<std::string, std::uint64_t>> items(freq.begin(), freq.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (items.size() > cap) items.resize(cap);
  for (auto& [text, count] : items) {
    vocab.entries.push_back(text);
    vocab.counts.push_back(count);
  }
  vocab.finish();
}

}  // namespace

Vocabularies build_vocabularies(const std::vector<PathContextBag>& train_bags,
                                const VocabCaps& caps) {
  std::map<std::string, std::uint64_t> tok, sub, path, step;
  std::size_t real = 0;
  for (const PathContextBag& bag : train_bags) {
    for (const PathContext& ctx : bag.contexts) {
      ++real;
      for (const std::string* t : {&ctx.start_token, &ctx.end_token}) {
        ++tok[*t];
        for (const std::string& st : split_subtokens(*t)) ++sub[st];
      }
      ++path[path_to_string(ctx.path)];
      for (std::size_t i = 0; i < ctx.path.kinds.size(); ++i) ++step[step_string(ctx.path, i)];
    }
  }
  if (real == 0) fail(Errc::EmptyTraining, "no real contexts in the training bags");
  Vocabularies v;
  rank_into(v.token, tok, caps.token);
  rank_into(v.subtoken, sub, caps.subtoken);
  rank_into(v.path, path, caps.path);
  rank_into(v.node_kind, step, caps.node_kind);
  return v;
}

namespace {

ordered_json vocab_to_json(const Vocab& v) {
  ordered_json j;
  j["entries"] = std::vector<std::string>(v.entries.begin() + 2, v.entries.end());
  j["counts"] = std::vector<std::uint64_t>(v.counts.begin() + 2, v.counts.end());
  return j;
}

Vocab vocab_from_json(const ordered_json& j) {
  Vocab v;
  for (const auto& e : j.at("entries")) v.entries.push_back(e.get<std::string>());
  for (const auto& c : j.at("counts")) v.counts.push_back(c.get<std::uint64_t>());
  if (v.entries.size() != v.counts.size()) fail(Errc::IoError, "vocab entries/counts mismatch");
  v.finish();
  return v;
}

}  // namespace

void write_vocab_json(const Vocabularies& v, const std::filesystem::path& out) {
  ordered_json j;
  j["format"] = "obo-vocab-1";
  j["token"] = vocab_to_json(v.token);
  j["subtoken"] = vocab_to_json(v.subtoken);
  j["path"] = vocab_to_json(v.path);
  j["node_kind"] = vocab_to_json(v.node_kind);
  std::ofstream os(out, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + out.string() + " for writing");
  os << j.dump(2) << '\n';
}

Vocabularies read_vocab_json(const std::filesystem::path& in) {
  std::ifstream is(in, std::ios::binary);
  if (!is) fail(Errc::IoError, "cannot open " + in.string());
  ordered_json j = ordered_json::parse(is);
  if (j.at("format").get<std::string>() != "obo-vocab-1")
    fail(Errc::IoError, "unsupported vocab format");
  Vocabularies v;
  v.token = vocab_from_json(j.at("token"));
  v.subtoken = vocab_from_json(j.at("subtoken"));
  v.path = vocab_from_json(j.at("path"));
  v.node_kind = vocab_from_json(j.at("node_kind"));
  return v;
}

EncodedExample encode_example(const PathContextBag& bag, const Vocabularies& vocab,
                              EncodeMode mode, const ExtractLimits& limits) {
  EncodedExample ex;
  ex.method_id = bag.method_id;
  ex.label = bag.label;
  ex.mode = mode;
  ex.real_count = bag.real_count();
  ex.slots.resize(bag.capacity);
  for (EncodedSlot& slot : ex.slots) {
    if (mode == EncodeMode::C2S) {
      slot.sub_s.assign(limits.subtoken_cap, Vocab::kPad);
      slot.sub_t.assign(limits.subtoken_cap, Vocab::kPad);
      slot.path_steps.assign(limits.max_length, Vocab::kPad);
    }
  }
  for (std::size_t i = 0; i < bag.contexts.size() && i < bag.capacity; ++i) {
    const PathContext& ctx = bag.contexts[i];
    EncodedSlot& slot = ex.slots[i];
    slot.real = true;
    if (mode == EncodeMode::C2V) {
      slot.token_s = vocab.lookup(vocab.token, ctx.start_token);
      slot.path_id = vocab.lookup(vocab.path, path_to_string(ctx.path));
      slot.token_t = vocab.lookup(vocab.token, ctx.end_token);
    } else {
      auto encode_subs = [&](const std::string& token, std::vector<std::int32_t>& dst) {
        std::vector<std::string> subs = split_subtokens(token);
        if (subs.size() > limits.subtoken_cap) subs.resize(limits.subtoken_cap);
        for (std::size_t k = 0; k < subs.size(); ++k)
          dst[k] = vocab.lookup(vocab.subtoken, subs[k]);
      };
      encode_subs(ctx.start_token, slot.sub_s);
      encode_subs(ctx.end_token, slot.sub_t);
      slot.path_len = static_cast<std::int32_t>(ctx.path.kinds.size());
      for (std::size_t k = 0; k < ctx.path.kinds.size() && k < limits.max_length; ++k)
        slot.path_steps[k] = vocab.lookup(vocab.node_kind, step_string(ctx.path, k));
    }
  }
  return ex;
}

void write_contexts_txt(const std::vector<PathContextBag>& bags, EncodeMode mode,
                        const std::filesystem::path& out) {
  std::ofstream os(out, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + out.string() + " for writing");
  for (const PathContextBag& bag : bags) {
    os << bag.label;
    for (std::size_t i = 0; i < bag.capacity; ++i) {
      os << ' ';
      if (i >= bag.contexts.size()) {
        os << ",,";
        continue;
      }
      const PathContext& ctx = bag.contexts[i];
      auto emit_token = [&](const std::string& token) {
        if (mode == EncodeMode::C2V) {
          os << token;
        } else {
          std::vector<std::string> subs = split_subtokens(token);
          for (std::size_t k = 0; k < subs.size(); ++k) {
            if (k) os << '+';
            os << subs[k];
          }
        }
      };
      emit_token(ctx.start_token);
      os << ',';
      os << path_to_string(ctx.path);
      os << ',';
      emit_token(ctx.end_token);
    }
    os << '\n';
  }
}

std::vector<PathContextBag> read_contexts_txt(const std::filesystem::path& in) {
  std::ifstream is(in, std::ios::binary);
  if (!is) fail(Errc::IoError, "cannot open " + in.string());
  std::vector<PathContextBag> bags;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    PathContextBag bag;
    ss >> bag.label;
    std::string ctx_str;
    while (ss >> ctx_str) {
      ++bag.capacity;
      if (ctx_str == ",,") continue;
      std::size_t c1 = ctx_str.find(',');
      std::size_t c2 = ctx_str.rfind(',');
      if (c1 == std::string::npos || c2 == c1)
        fail(Errc::IoError, "malformed context '" + ctx_str + "'");
      PathContext ctx;
      ctx.start_token = ctx_str.substr(0, c1);
      ctx.end_token = ctx_str.substr(c2 + 1);
      ctx.path = path_from_string(ctx_str.substr(c1 + 1, c2 - c1 - 1));
      bag.contexts.push_back(std::move(ctx));
    }
    if (bag.contexts.empty()) bag.no_terminals = true;
    bags.push_back(std::move(bag));
  }
  return bags;
}

NodeKind node_kind_from_name(const std::string& name) {
  static const std::unordered_map<std::string, NodeKind> table = [] {
    std::unordered_map<std::string, NodeKind> t;
    for (int k = 0; k <= static_cast<int>(NodeKind::Op); ++k) {
      NodeKind kind = static_cast<NodeKind>(k);
      t.emplace(node_kind_name(kind), kind);
    }
    return t;
  }();
  auto it = table.find(name);
  if (it == table.end()) fail(Errc::IoError, "unknown node kind '" + name + "'");
  return it->second;
}

}  // namespace obo
