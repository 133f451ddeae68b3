#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "obo/corpus.hpp"

namespace obo {

// camelCase / digit / underscore subtoken split, lowercased. Tokens without
// any alphanumeric run (operator glyphs) come back whole.
std::vector<std::string> split_subtokens(const std::string& token);

// Syntactic path between two terminals: node kinds from s to t through their
// lowest common ancestor, with per-step direction.
struct RawPath {
  std::vector<NodeKind> kinds;  // N0 .. Nk, including both terminal nodes
  std::vector<bool> move_up;    // k moves; true = toward the root
  std::uint32_t width = 0;      // child-index gap at the common ancestor
};

// Path between two distinct terminals of the same tree; `s` must precede `t`
// in pre-order for the canonical orientation.
RawPath path_between(const AstNode& root, const TerminalRef& s, const TerminalRef& t);

// "Kind^|Kindv|Kind": each element carries the direction of travel to the
// next node; the final element is bare.
std::string path_to_string(const RawPath& p);
RawPath path_from_string(const std::string& s);

// One direction-tagged step, the unit of the node-kind vocabulary.
std::string step_string(const RawPath& p, std::size_t i);

struct PathContext {
  std::string start_token;  // sanitized terminal text
  RawPath path;
  std::string end_token;
};

struct ExtractLimits {
  std::size_t max_length = 8;    // max nodes on a path
  std::size_t max_width = 2;     // max child-index gap at the common ancestor
  std::size_t c_max = 200;       // context slots per example
  std::size_t subtoken_cap = 5;  // subtokens kept per terminal (c2s)
  std::uint64_t seed = 0;        // base seed for pair subsampling
};

struct PathContextBag {
  std::string method_id;
  int label = 0;  // 1 = defective
  std::size_t capacity = 0;
  std::vector<PathContext> contexts;  // real slots; the rest are padding
  bool no_terminals = false;          // < 2 terminals: all-padded, flagged

  std::size_t real_count() const { return contexts.size(); }
};

// Enumerates all in-order terminal pairs, keeps those within limits, then
// subsamples to c_max with the seeded RNG (uniform, without replacement).
// The per-method RNG stream is derived from (limits.seed, method id).
PathContextBag extract_path_contexts(const MethodUnit& method, const ExtractLimits& limits);

// Terminals eligible for path contexts and leaf tokenization: identifiers,
// literals, keywords and operator tokens; punctuation is not represented.
bool is_context_terminal(const AstNode& leaf);

// Vocabulary with PAD pinned to index 0 and UNK to index 1.
struct Vocab {
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr const char* kPadText = "<PAD>";
  static constexpr const char* kUnkText = "<UNK>";

  std::vector<std::string> entries{kPadText, kUnkText};
  std::vector<std::uint64_t> counts{0, 0};
  std::unordered_map<std::string, std::int32_t> index;

  std::size_t size() const { return entries.size(); }
  void finish();  // rebuilds the reverse index
  std::int32_t find(const std::string& s) const;  // kUnk when absent, no counting
};

struct VocabCaps {
  std::size_t token = 20000;
  std::size_t subtoken = 10000;
  std::size_t path = 50000;
  std::size_t node_kind = 1000;
};

struct Vocabularies {
  Vocab token;      // whole terminals (c2v)
  Vocab subtoken;   // terminal subtokens (c2s)
  Vocab path;       // whole path strings (c2v)
  Vocab node_kind;  // direction-tagged steps (c2s)
  mutable std::uint64_t unk_hits = 0;  // exact count of out-of-vocabulary lookups

  std::int32_t lookup(const Vocab& v, const std::string& s) const;
};

// Builds all four vocabularies from training-split bags: entries ranked by
// frequency then lexicographic order, truncated at the caps.
Vocabularies build_vocabularies(const std::vector<PathContextBag>& train_bags,
                                const VocabCaps& caps);

void write_vocab_json(const Vocabularies& v, const std::filesystem::path& out);
Vocabularies read_vocab_json(const std::filesystem::path& in);

enum class EncodeMode : std::uint8_t { C2V, C2S };

struct EncodedSlot {
  bool real = false;
  // c2v
  std::int32_t token_s = Vocab::kPad;
  std::int32_t path_id = Vocab::kPad;
  std::int32_t token_t = Vocab::kPad;
  // c2s
  std::vector<std::int32_t> sub_s;      // subtoken_cap entries, PAD-filled
  std::vector<std::int32_t> sub_t;
  std::vector<std::int32_t> path_steps; // max_length entries, PAD-filled
  std::int32_t path_len = 0;
};

struct EncodedExample {
  std::string method_id;
  int label = 0;
  EncodeMode mode = EncodeMode::C2V;
  std::size_t real_count = 0;
  std::vector<EncodedSlot> slots;  // bag capacity, padded slots included
};

EncodedExample encode_example(const PathContextBag& bag, const Vocabularies& vocab,
                              EncodeMode mode, const ExtractLimits& limits);

// contexts.txt: '<label> <ctx_1> ... <ctx_Cmax>', ctx = 'start,path,end',
// padded slots ',,'; subtokens joined by '+' in c2s mode.
void write_contexts_txt(const std::vector<PathContextBag>& bags, EncodeMode mode,
                        const std::filesystem::path& out);
std::vector<PathContextBag> read_contexts_txt(const std::filesystem::path& in);

NodeKind node_kind_from_name(const std::string& name);

}  // namespace obo
