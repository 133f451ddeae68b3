#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "obo/checkpoint.hpp"
#include "obo/corpus.hpp"
#include "obo/experiment.hpp"
#include "obo/mutator.hpp"
#include "support/toygen.hpp"

using namespace obo;
namespace fs = std::filesystem;

namespace {

struct Prepared {
  Vocabularies vocab;
  std::vector<EncodedExample> examples;
  ExtractLimits limits;
};

Prepared prepare(const std::string& tag, EncodeMode mode) {
  fs::path root = fs::temp_directory_path() / ("obo_ckpt_" + tag);
  toygen::write_corpus(root, 10);
  CorpusIndex idx = ingest_corpus(root, SplitFractions{1.0, 0.0, 0.0}, 3);
  auto ds = build_dataset(idx, DatasetSpec{1, 3});
  Prepared p;
  p.limits.c_max = 32;
  std::vector<PathContextBag> bags;
  for (const LabeledExample& ex : ds) {
    PathContextBag bag = extract_path_contexts(ex.method, p.limits);
    bag.label = ex.label == Label::Defective ? 1 : 0;
    bags.push_back(std::move(bag));
  }
  p.vocab = build_vocabularies(bags, VocabCaps{});
  for (const PathContextBag& bag : bags)
    p.examples.push_back(encode_example(bag, p.vocab, mode, p.limits));
  return p;
}

}  // namespace

TEST_CASE("checkpoint: c2v round-trip preserves every score bit") {
  Prepared p = prepare("c2v", EncodeMode::C2V);
  C2VModel<float> model = C2VModel<float>::init(p.vocab.token.size(), p.vocab.path.size(),
                                                C2VConfig{}, 77);
  fs::path file = fs::temp_directory_path() / "obo_c2v.ckpt";
  write_checkpoint(make_c2v_checkpoint(model, p.vocab, p.limits), file);

  Checkpoint ckpt = read_checkpoint(file);
  CHECK(ckpt.model_kind == "c2v");
  ExtractLimits limits;
  C2VModel<float> back = c2v_from_checkpoint<float>(ckpt, limits);
  CHECK(limits.c_max == p.limits.c_max);
  CHECK(ckpt.vocab.token.entries == p.vocab.token.entries);
  for (const EncodedExample& ex : p.examples)
    CHECK(back.defect_score(ex) == model.defect_score(ex));
}

TEST_CASE("checkpoint: c2s round-trip preserves every score bit") {
  Prepared p = prepare("c2s", EncodeMode::C2S);
  C2SModel<float> model = C2SModel<float>::init(p.vocab.subtoken.size(),
                                                p.vocab.node_kind.size(), C2SConfig{}, 78);
  fs::path file = fs::temp_directory_path() / "obo_c2s.ckpt";
  write_checkpoint(make_c2s_checkpoint(model, p.vocab, p.limits), file);
  Checkpoint ckpt = read_checkpoint(file);
  ExtractLimits limits;
  C2SModel<float> back = c2s_from_checkpoint<float>(ckpt, limits);
  for (const EncodedExample& ex : p.examples)
    CHECK(back.defect_score(ex) == model.defect_score(ex));
}

TEST_CASE("checkpoint: baseline container carries forest and tfidf") {
  TfidfModel tfidf = tfidf_fit({{"a", "b"}, {"b", "c"}, {"a", "c"}});
  std::vector<SparseVec> x = {{{0, 0.9}}, {{0, 0.1}}, {{0, 0.8}}, {{0, 0.2}}};
  std::vector<int> y = {1, 0, 1, 0};
  ForestConfig cfg;
  cfg.n_trees = 5;
  cfg.min_leaf = 1;
  Forest forest = rf_train(x, y, 3, cfg);
  fs::path file = fs::temp_directory_path() / "obo_baseline.ckpt";
  write_checkpoint(make_baseline_checkpoint(tfidf, forest, ExtractLimits{}), file);

  TfidfModel tfidf2;
  Forest forest2;
  ExtractLimits limits;
  baseline_from_checkpoint(read_checkpoint(file), tfidf2, forest2, limits);
  CHECK(tfidf2.columns == tfidf.columns);
  CHECK(forest_to_json(forest2) == forest_to_json(forest));
  CHECK(rf_predict(forest2, x[0]) == rf_predict(forest, x[0]));
}

TEST_CASE("checkpoint: wrong magic is rejected") {
  fs::path file = fs::temp_directory_path() / "obo_bad.ckpt";
  std::ofstream os(file, std::ios::binary);
  os << "not a checkpoint";
  os.close();
  CHECK_THROWS_AS(read_checkpoint(file), Error);
}

TEST_CASE("checkpoint: f64 tensors round-trip with dtype f64") {
  Prepared p = prepare("c2v64", EncodeMode::C2V);
  C2VModel<double> model = C2VModel<double>::init(p.vocab.token.size(), p.vocab.path.size(),
                                                  C2VConfig{}, 79);
  fs::path file = fs::temp_directory_path() / "obo_c2v64.ckpt";
  write_checkpoint(make_c2v_checkpoint(model, p.vocab, p.limits), file);
  Checkpoint ckpt = read_checkpoint(file);
  CHECK(ckpt.tensors.at("w_dense").dtype == "f64");
  ExtractLimits limits;
  C2VModel<double> back = c2v_from_checkpoint<double>(ckpt, limits);
  for (const EncodedExample& ex : p.examples)
    CHECK(back.defect_score(ex) == model.defect_score(ex));
}
