#include <doctest.h>

#include <filesystem>

#include "obo/c2s.hpp"
#include "obo/c2v.hpp"
#include "obo/corpus.hpp"
#include "obo/error.hpp"
#include "obo/mutator.hpp"
#include "obo/train.hpp"
#include "support/toygen.hpp"

using namespace obo;
namespace fs = std::filesystem;

namespace {

struct ToyData {
  std::vector<EncodedExample> examples;
  Vocabularies vocab;
  ExtractLimits limits;
};

ToyData build_toy(int n_methods, const std::string& tag, std::size_t c_max = 32) {
  fs::path root = fs::temp_directory_path() / ("obo_toy_" + tag);
  toygen::write_corpus(root, n_methods);
  CorpusIndex idx = ingest_corpus(root, SplitFractions{1.0, 0.0, 0.0}, 3);
  auto ds = build_dataset(idx, DatasetSpec{1, 3});
  ToyData data;
  data.limits.c_max = c_max;
  std::vector<PathContextBag> bags;
  for (const LabeledExample& ex : ds) {
    PathContextBag bag = extract_path_contexts(ex.method, data.limits);
    bag.label = ex.label == Label::Defective ? 1 : 0;
    bags.push_back(std::move(bag));
  }
  data.vocab = build_vocabularies(bags, VocabCaps{});
  for (const PathContextBag& bag : bags)
    data.examples.push_back(encode_example(bag, data.vocab, EncodeMode::C2S, data.limits));
  return data;
}

}  // namespace

TEST_CASE("c2s terminal encoding: single subtoken returns its embedding row") {
  ToyData data = build_toy(4, "c2s_term");
  C2SModel<double> model =
      C2SModel<double>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(),
                             C2SConfig{}, 3);
  // Build a fake slot with one subtoken id.
  EncodedExample ex;
  ex.slots.resize(1);
  ex.slots[0].real = true;
  ex.slots[0].sub_s = {5, 0, 0, 0, 0};
  ex.slots[0].sub_t = {7, 0, 0, 0, 0};
  std::vector<std::size_t> real{0};
  nn::Mat<double> enc = model.sum_subtokens(ex, real, true);
  CHECK((enc.row(0) - model.store.at("emb_sub").value.row(5)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("c2s terminal encoding: sum of rows, PAD contributes zero, order-free") {
  ToyData data = build_toy(4, "c2s_sum");
  C2SModel<double> model =
      C2SModel<double>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(),
                             C2SConfig{}, 4);
  const nn::Mat<double>& emb = model.store.at("emb_sub").value;
  CHECK(emb.row(Vocab::kPad).cwiseAbs().maxCoeff() == 0.0);  // pinned
  EncodedExample ex;
  ex.slots.resize(2);
  ex.slots[0].real = true;
  ex.slots[0].sub_s = {3, 6, 0, 0, 0};  // "string" + "builder" shape
  ex.slots[1].real = true;
  ex.slots[1].sub_s = {6, 3, 0, 0, 0};  // permuted
  std::vector<std::size_t> real{0, 1};
  nn::Mat<double> enc = model.sum_subtokens(ex, real, true);
  nn::Mat<double> expected = emb.row(3) + emb.row(6);
  CHECK((enc.row(0) - expected).cwiseAbs().maxCoeff() == 0.0);
  CHECK((enc.row(0) - enc.row(1)).cwiseAbs().maxCoeff() == 0.0);  // commutative
}

TEST_CASE("c2s path encoding: length-1 path reads the same node in both directions") {
  // Both LSTMs see the single node; with identical fwd/bwd parameters the two
  // halves of the encoding must agree.
  ToyData data = build_toy(4, "c2s_len1");
  C2SModel<double> model =
      C2SModel<double>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(),
                             C2SConfig{}, 5);
  for (const char* part : {"_Wx", "_Wh", "_b"})
    model.store.at(std::string("lstm_bwd") + part).value =
        model.store.at(std::string("lstm_fwd") + part).value;
  EncodedExample ex;
  ex.slots.resize(1);
  auto& slot = ex.slots[0];
  slot.real = true;
  slot.sub_s.assign(5, Vocab::kPad);
  slot.sub_t.assign(5, Vocab::kPad);
  slot.sub_s[0] = 2;
  slot.sub_t[0] = 2;
  slot.path_steps.assign(8, Vocab::kPad);
  slot.path_steps[0] = 3;
  slot.path_len = 1;
  ex.real_count = 1;
  ex.label = 0;

  typename C2SModel<double>::Cache cc;
  Rng rng(0);
  model.forward(ex, false, rng, &cc);
  int h_p = model.cfg.h_p;
  CHECK((cc.path_enc.row(0).segment(0, h_p) - cc.path_enc.row(0).segment(h_p, h_p))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("c2s path encoding: reversing the node sequence swaps the halves") {
  ToyData data = build_toy(4, "c2s_rev");
  C2SModel<double> model =
      C2SModel<double>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(),
                             C2SConfig{}, 6);
  // Identical parameters in both directions so the swap is exact.
  for (const char* part : {"_Wx", "_Wh", "_b"})
    model.store.at(std::string("lstm_bwd") + part).value =
        model.store.at(std::string("lstm_fwd") + part).value;

  auto make_ex = [&](std::vector<std::int32_t> steps) {
    EncodedExample ex;
    ex.slots.resize(1);
    auto& slot = ex.slots[0];
    slot.real = true;
    slot.sub_s.assign(5, Vocab::kPad);
    slot.sub_t.assign(5, Vocab::kPad);
    slot.sub_s[0] = 2;
    slot.sub_t[0] = 3;
    slot.path_steps.assign(8, Vocab::kPad);
    for (std::size_t i = 0; i < steps.size(); ++i) slot.path_steps[i] = steps[i];
    slot.path_len = static_cast<std::int32_t>(steps.size());
    ex.real_count = 1;
    return ex;
  };
  EncodedExample fwd = make_ex({2, 3, 4, 5});
  EncodedExample rev = make_ex({5, 4, 3, 2});
  typename C2SModel<double>::Cache cf, cr;
  Rng rng(0);
  model.forward(fwd, false, rng, &cf);
  model.forward(rev, false, rng, &cr);
  int h_p = model.cfg.h_p;
  CHECK((cf.path_enc.row(0).segment(0, h_p) - cr.path_enc.row(0).segment(h_p, h_p))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((cf.path_enc.row(0).segment(h_p, h_p) - cr.path_enc.row(0).segment(0, h_p))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("c2s: empty path in a real slot is rejected") {
  ToyData data = build_toy(4, "c2s_empty");
  C2SModel<double> model =
      C2SModel<double>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(),
                             C2SConfig{}, 7);
  EncodedExample ex = data.examples[0];
  for (auto& slot : ex.slots)
    if (slot.real) {
      slot.path_len = 0;
      break;
    }
  Rng rng(0);
  CHECK_THROWS_AS(model.forward(ex, false, rng), Error);
}

TEST_CASE("c2s: symmetric zero output projection gives a 0.5 defect score") {
  ToyData data = build_toy(6, "c2s_sym");
  C2SModel<double> model =
      C2SModel<double>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(),
                             C2SConfig{}, 8);
  model.store.at("w_out").value.setZero();
  model.store.at("b_out").value.setZero();
  Rng rng(0);
  for (const EncodedExample& ex : data.examples) {
    auto out = model.forward(ex, false, rng);
    CHECK(out.step1_probs(C2SToken::kZero) == doctest::Approx(0.2));
    CHECK(out.step1_probs(C2SToken::kOne) == doctest::Approx(0.2));
    CHECK(out.defect_score == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("c2s: score plus renormalized P(0) is exactly one") {
  ToyData data = build_toy(6, "c2s_norm");
  C2SModel<double> model =
      C2SModel<double>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(),
                             C2SConfig{}, 9);
  Rng rng(0);
  for (const EncodedExample& ex : data.examples) {
    auto out = model.forward(ex, false, rng);
    double p0 = out.step1_probs(C2SToken::kZero);
    double p1 = out.step1_probs(C2SToken::kOne);
    CHECK(out.defect_score + p0 / (p0 + p1) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("c2s: context permutation leaves the score unchanged") {
  ToyData data = build_toy(8, "c2s_perm");
  C2SModel<double> model =
      C2SModel<double>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(),
                             C2SConfig{}, 10);
  Rng rng(0);
  for (const EncodedExample& ex : data.examples) {
    if (ex.real_count < 3) continue;
    auto base = model.forward(ex, false, rng);
    EncodedExample permuted = ex;
    std::vector<EncodedSlot> real;
    for (const auto& s : permuted.slots)
      if (s.real) real.push_back(s);
    std::rotate(real.begin(), real.begin() + 1, real.end());
    for (std::size_t i = 0; i < permuted.slots.size(); ++i)
      permuted.slots[i] = i < real.size() ? real[i] : EncodedSlot{};
    auto rotated = model.forward(permuted, false, rng);
    CHECK(std::abs(base.defect_score - rotated.defect_score) < 1e-9);
    break;
  }
}

TEST_CASE("c2s: full-model gradient check below 1e-4") {
  ToyData data = build_toy(4, "c2s_grad", 6);
  C2SConfig cfg;
  cfg.d_s = 5;
  cfg.d_n = 4;
  cfg.h_p = 4;
  cfg.h = 6;
  cfg.d_dec = 5;
  cfg.dropout = 0.0;
  C2SModel<double> model =
      C2SModel<double>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(), cfg, 11);
  std::vector<const EncodedExample*> batch;
  for (std::size_t i = 0; i < 2 && i < data.examples.size(); ++i)
    batch.push_back(&data.examples[i]);
  auto loss = [&]() -> double {
    Rng rng(0);
    auto [L, correct] = model.batch_loss_grad(batch, rng);
    return double(L) / double(batch.size());
  };
  auto report = nn::grad_check(loss, model.store, 1e-5, 300);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("c2s: parameter count is below c2v at matched dims on the fixture vocab") {
  fs::path root = fs::path(OBO_FIXTURE_DIR) / "corpus";
  CorpusIndex idx = ingest_corpus(root, SplitFractions{1.0, 0.0, 0.0}, 7);
  auto ds = build_dataset(idx, DatasetSpec{1, 3});
  ExtractLimits lim;
  std::vector<PathContextBag> bags;
  for (const LabeledExample& ex : ds) {
    PathContextBag bag = extract_path_contexts(ex.method, lim);
    bag.label = ex.label == Label::Defective ? 1 : 0;
    bags.push_back(std::move(bag));
  }
  Vocabularies vocab = build_vocabularies(bags, VocabCaps{});
  // The whole-path vocabulary dwarfs the step vocabulary.
  CHECK(vocab.path.size() > 10 * vocab.node_kind.size());
  C2VModel<float> c2v =
      C2VModel<float>::init(vocab.token.size(), vocab.path.size(), C2VConfig{}, 1);
  C2SModel<float> c2s =
      C2SModel<float>::init(vocab.subtoken.size(), vocab.node_kind.size(), C2SConfig{}, 1);
  CHECK(c2s.parameter_count() < c2v.parameter_count());
}

TEST_CASE("c2s: seeded training reproducible, overfits, step 2 emits <eos>") {
  ToyData data = build_toy(30, "c2s_train");
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.max_epochs = 150;
  cfg.patience = 1000;
  cfg.adam.lr = 3e-3;
  cfg.seed = 12;
  cfg.stop_at_train_accuracy = 0.95;

  C2SConfig mc;
  mc.dropout = 0.0;
  C2SModel<float> a =
      C2SModel<float>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(), mc, 13);
  TrainHistory ha = train_model(a, data.examples, data.examples, cfg);
  CHECK(ha.epochs.back().train_accuracy >= 0.95);

  C2SModel<float> b =
      C2SModel<float>::init(data.vocab.subtoken.size(), data.vocab.node_kind.size(), mc, 13);
  TrainHistory hb = train_model(b, data.examples, data.examples, cfg);
  REQUIRE(ha.epochs.size() == hb.epochs.size());
  for (std::size_t e = 0; e < ha.epochs.size(); ++e)
    CHECK(ha.epochs[e].train_loss == hb.epochs[e].train_loss);

  // Greedy decoding: step 2 should emit <eos> on nearly every example.
  Rng rng(0);
  std::size_t eos = 0;
  for (const EncodedExample& ex : data.examples) {
    auto out = a.forward(ex, false, rng);
    eos += out.greedy_token2 == C2SToken::kEos;
  }
  CHECK(double(eos) >= 0.99 * double(data.examples.size()));

  // Mutant scores above origin on the overfit family.
  std::size_t ordered = 0, pairs = 0;
  for (std::size_t i = 0; i + 1 < data.examples.size(); i += 2) {
    double orig = a.defect_score(data.examples[i]);
    double mut = a.defect_score(data.examples[i + 1]);
    ordered += mut > orig;
    ++pairs;
  }
  CHECK(double(ordered) >= 0.9 * double(pairs));
}
