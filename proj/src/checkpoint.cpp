#include "obo/checkpoint.hpp"

#include <fstream>

#include "obo/error.hpp"

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace obo {

namespace {

constexpr char kMagic[4] = {'O', 'B', 'O', '1'};
constexpr std::uint32_t kVersion = 1;

ordered_json vocab_entries_json(const Vocab& v) {
  ordered_json j;
  j["entries"] = std::vector<std::string>(v.entries.begin() + 2, v.entries.end());
  j["counts"] = std::vector<std::uint64_t>(v.counts.begin() + 2, v.counts.end());
  return j;
}

Vocab vocab_entries_from_json(const ordered_json& j) {
  Vocab v;
  for (const auto& e : j.at("entries")) v.entries.push_back(e.get<std::string>());
  for (const auto& c : j.at("counts")) v.counts.push_back(c.get<std::uint64_t>());
  v.finish();
  return v;
}

template <typename T>
void write_raw(std::ofstream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

ordered_json limits_to_json(const ExtractLimits& limits) {
  ordered_json j;
  j["max_length"] = limits.max_length;
  j["max_width"] = limits.max_width;
  j["c_max"] = limits.c_max;
  j["subtoken_cap"] = limits.subtoken_cap;
  j["seed"] = limits.seed;
  return j;
}

ExtractLimits limits_from_json(const ordered_json& j) {
  ExtractLimits limits;
  limits.max_length = j.at("max_length").get<std::size_t>();
  limits.max_width = j.at("max_width").get<std::size_t>();
  limits.c_max = j.at("c_max").get<std::size_t>();
  limits.subtoken_cap = j.at("subtoken_cap").get<std::size_t>();
  limits.seed = j.at("seed").get<std::uint64_t>();
  return limits;
}

void write_checkpoint(const Checkpoint& ckpt, const fs::path& out) {
  ordered_json header;
  header["format_version"] = kVersion;
  header["model_kind"] = ckpt.model_kind;
  header["hparams"] = ckpt.hparams;
  header["meta"] = ckpt.meta;
  ordered_json vocab;
  vocab["token"] = vocab_entries_json(ckpt.vocab.token);
  vocab["subtoken"] = vocab_entries_json(ckpt.vocab.subtoken);
  vocab["path"] = vocab_entries_json(ckpt.vocab.path);
  vocab["node_kind"] = vocab_entries_json(ckpt.vocab.node_kind);
  header["vocab"] = std::move(vocab);

  ordered_json tensors = ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    ordered_json tj;
    tj["name"] = name;
    tj["dims"] = t.dims;
    tj["dtype"] = t.dtype;
    tj["offset"] = offset;
    tj["bytes"] = t.bytes.size();
    tensors.push_back(std::move(tj));
    offset += t.bytes.size();
  }
  header["tensors"] = std::move(tensors);

  std::string header_text = header.dump();
  std::ofstream os(out, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + out.string() + " for writing");
  os.write(kMagic, 4);
  write_raw<std::uint32_t>(os, kVersion);
  write_raw<std::uint64_t>(os, header_text.size());
  os.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  for (const auto& [name, t] : ckpt.tensors)
    os.write(reinterpret_cast<const char*>(t.bytes.data()),
             static_cast<std::streamsize>(t.bytes.size()));
  if (!os) fail(Errc::IoError, "short write to " + out.string());
}

Checkpoint read_checkpoint(const fs::path& in) {
  std::ifstream is(in, std::ios::binary);
  if (!is) fail(Errc::IoError, "cannot open " + in.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    fail(Errc::IoError, in.string() + " is not a model checkpoint");
  std::uint32_t version = read_raw<std::uint32_t>(is);
  if (version != kVersion)
    fail(Errc::IoError, "unsupported checkpoint version " + std::to_string(version));
  std::uint64_t header_len = read_raw<std::uint64_t>(is);
  std::string header_text(header_len, '\0');
  is.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!is) fail(Errc::IoError, "truncated checkpoint header");
  ordered_json header = ordered_json::parse(header_text);

  Checkpoint ckpt;
  ckpt.model_kind = header.at("model_kind").get<std::string>();
  ckpt.hparams = header.at("hparams");
  ckpt.meta = header.at("meta");
  ckpt.vocab.token = vocab_entries_from_json(header.at("vocab").at("token"));
  ckpt.vocab.subtoken = vocab_entries_from_json(header.at("vocab").at("subtoken"));
  ckpt.vocab.path = vocab_entries_from_json(header.at("vocab").at("path"));
  ckpt.vocab.node_kind = vocab_entries_from_json(header.at("vocab").at("node_kind"));

  for (const auto& tj : header.at("tensors")) {
    Checkpoint::Tensor t;
    t.dims = tj.at("dims").get<std::vector<std::int64_t>>();
    t.dtype = tj.at("dtype").get<std::string>();
    t.bytes.resize(tj.at("bytes").get<std::size_t>());
    is.read(reinterpret_cast<char*>(t.bytes.data()),
            static_cast<std::streamsize>(t.bytes.size()));
    if (!is) fail(Errc::IoError, "truncated tensor payload");
    ckpt.tensors.emplace(tj.at("name").get<std::string>(), std::move(t));
  }
  return ckpt;
}

Checkpoint make_baseline_checkpoint(const TfidfModel& tfidf, const Forest& forest,
                                    const ExtractLimits& limits) {
  Checkpoint ckpt;
  ckpt.model_kind = "baseline";
  ckpt.hparams = {{"n_trees", forest.cfg.n_trees},
                  {"max_depth", forest.cfg.max_depth},
                  {"min_leaf", forest.cfg.min_leaf},
                  {"seed", forest.cfg.seed}};
  ckpt.meta = {{"limits", limits_to_json(limits)},
               {"forest", ordered_json::parse(forest_to_json(forest))},
               {"tfidf", ordered_json::parse(tfidf_to_json(tfidf))}};
  return ckpt;
}

void baseline_from_checkpoint(const Checkpoint& ckpt, TfidfModel& tfidf, Forest& forest,
                              ExtractLimits& limits_out) {
  if (ckpt.model_kind != "baseline")
    fail(Errc::IoError, "checkpoint kind is " + ckpt.model_kind);
  limits_out = limits_from_json(ckpt.meta.at("limits"));
  forest = forest_from_json(ckpt.meta.at("forest").dump());
  tfidf = tfidf_from_json(ckpt.meta.at("tfidf").dump());
}

}  // namespace obo
