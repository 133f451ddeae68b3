#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "obo/baseline.hpp"
#include "obo/c2s.hpp"
#include "obo/c2v.hpp"
#include "obo/metrics.hpp"
#include "obo/mutator.hpp"
#include "obo/train.hpp"

namespace obo {

// ---------------------------------------------------------------------------
// Prediction on raw methods
// ---------------------------------------------------------------------------

template <typename S>
double c2v_predict(const C2VModel<S>& model, const MethodUnit& method, const Vocabularies& vocab,
                   const ExtractLimits& limits) {
  PathContextBag bag = extract_path_contexts(method, limits);
  if (bag.real_count() == 0)
    fail(Errc::Unscorable, "method " + method.id + " yields no path contexts");
  EncodedExample ex = encode_example(bag, vocab, EncodeMode::C2V, limits);
  return model.defect_score(ex);
}

template <typename S>
double c2s_predict(const C2SModel<S>& model, const MethodUnit& method, const Vocabularies& vocab,
                   const ExtractLimits& limits) {
  PathContextBag bag = extract_path_contexts(method, limits);
  if (bag.real_count() == 0)
    fail(Errc::Unscorable, "method " + method.id + " yields no path contexts");
  EncodedExample ex = encode_example(bag, vocab, EncodeMode::C2S, limits);
  return model.defect_score(ex);
}

// Uniform scoring interface over the three model families.
struct MethodScorer {
  virtual ~MethodScorer() = default;
  virtual double score(const MethodUnit& method) const = 0;  // throws Unscorable
  virtual std::uint64_t unk_hits() const { return 0; }
};

template <typename S>
struct C2VMethodScorer : MethodScorer {
  C2VModel<S> model;
  Vocabularies vocab;
  ExtractLimits limits;
  double score(const MethodUnit& m) const override { return c2v_predict(model, m, vocab, limits); }
  std::uint64_t unk_hits() const override { return vocab.unk_hits; }
};

template <typename S>
struct C2SMethodScorer : MethodScorer {
  C2SModel<S> model;
  Vocabularies vocab;
  ExtractLimits limits;
  double score(const MethodUnit& m) const override { return c2s_predict(model, m, vocab, limits); }
  std::uint64_t unk_hits() const override { return vocab.unk_hits; }
};

struct BaselineMethodScorer : MethodScorer {
  TfidfModel tfidf;
  Forest forest;
  double score(const MethodUnit& m) const override {
    return rf_predict(forest, tfidf_transform(tfidf, tokenize_leaves(m)));
  }
};

// ---------------------------------------------------------------------------
// Experiment matrix
// ---------------------------------------------------------------------------

enum class Scheme : std::uint8_t { BB, BI, II };
const char* scheme_name(Scheme s);
Scheme scheme_from_name(const std::string& name);

enum class ModelKind : std::uint8_t { C2V, C2S, Baseline };
const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& name);

struct ExperimentConfig {
  Scheme scheme = Scheme::BB;
  ModelKind model = ModelKind::C2S;
  ExtractLimits limits;
  VocabCaps caps;
  TrainConfig train;
  C2VConfig c2v;
  C2SConfig c2s;
  ForestConfig forest;
  std::uint32_t imbalanced_ratio = 10;  // the I in BI / II
  std::uint64_t seed = 0;
  double eval_threshold = 0.5;
};

struct ExperimentReport {
  std::string scheme;
  std::string model;
  double precision = 0.0;
  double recall = 0.0;
  double auc_roc = 0.0;
  double auc_pr = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double prevalence = 0.0;
  std::uint64_t unk_hits = 0;  // out-of-vocabulary lookups while encoding the test split
  ConfusionMatrix cm;
  ClassRates rates;  // per-class TPR/FPR, for the prevalence relation
  Curve pr;
  Curve roc;
  TrainHistory history;
  std::vector<double> test_scores;
  std::vector<int> test_labels;
  std::size_t unscorable = 0;
};

struct Checkpoint;

// Trains per scheme (BB: balanced/balanced, BI: balanced/imbalanced, II:
// imbalanced/imbalanced) and evaluates on the test split at the configured
// threshold. When model_out is given, the trained model is packed into it.
ExperimentReport run_experiment(const CorpusIndex& corpus, const ExperimentConfig& config,
                                Checkpoint* model_out = nullptr);

// Wraps any checkpoint kind as a ready-to-use scorer (f32 models).
std::unique_ptr<MethodScorer> scorer_from_checkpoint(const Checkpoint& ckpt);

// {scheme, model, precision, recall, auc_roc, auc_pr, n_train, n_test,
//  prevalence, unk_hits}
void write_experiment_json(const ExperimentReport& report, const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Real-bug pairs
// ---------------------------------------------------------------------------

struct BugPair {
  std::string name;
  std::optional<MethodUnit> buggy;
  std::optional<MethodUnit> fixed;
  std::string parse_error;  // non-empty when either side failed to parse
};

// Reads <name>.buggy.java / <name>.fixed.java files; each file holds either a
// compilation unit or a bare method declaration.
std::vector<BugPair> load_bug_pairs(const std::filesystem::path& dir);

struct PairOutcome {
  std::string name;
  double score_buggy = 0.0;
  double score_fixed = 0.0;
};

struct PairReport {
  std::vector<PairOutcome> pairs;
  std::vector<std::string> unscorable;  // listed, not fatal
  ConfusionMatrix cm;                   // buggy = defective class, fixed = clean
  double pairwise_ordering_accuracy = 0.0;  // score_buggy > score_fixed
};

PairReport evaluate_bug_pairs(const MethodScorer& scorer, const std::vector<BugPair>& pairs,
                              double threshold);

// ---------------------------------------------------------------------------
// Hyperparameter search (seeded random search)
// ---------------------------------------------------------------------------

struct HparamRange {
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
  std::vector<double> choices;  // when non-empty, uniform over these
};
using HparamSpace = std::map<std::string, HparamRange>;
using HparamPoint = std::map<std::string, double>;

struct Trial {
  int index = 0;
  HparamPoint point;
  double objective = 0.0;
};

struct TuneResult {
  Trial best;  // ties broken by the earlier trial
  std::vector<Trial> log;
};

TuneResult tune(const HparamSpace& space, int budget,
                const std::function<double(const HparamPoint&)>& objective, std::uint64_t seed);

void write_trial_log(const TuneResult& result, const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Codebase scan
// ---------------------------------------------------------------------------

struct ScanEntry {
  std::string method_id;
  std::string project;
  std::string file;
  double score = 0.0;
};

struct ScanReport {
  std::vector<ScanEntry> flagged;  // score >= threshold, (score desc, id asc)
  std::size_t total_scanned = 0;
  std::size_t unscorable = 0;
  std::uint64_t unk_hits = 0;
};

ScanReport scan(const MethodScorer& scorer, const CorpusIndex& corpus, double threshold = 0.8);

void write_scan_report(const ScanReport& report, const std::filesystem::path& out);

// ---------------------------------------------------------------------------
// Synthetic per-class-rate harness (imbalance consistency checks)
// ---------------------------------------------------------------------------

// Balanced back-solve: precision = tpr / (tpr + fpr)  =>  fpr.
double back_solve_fpr(double precision, double recall);
// Precision at a non-defective:defective ratio r for fixed per-class rates.
double imbalanced_precision(double recall, double fpr, double ratio);

struct SyntheticRatesResult {
  ConfusionMatrix cm;
  double precision = 0.0;
  double recall = 0.0;
};

// Builds n examples with defective share 1/(1+ratio) and flags exactly
// round(tpr * defective) and round(fpr * non_defective) of each class.
SyntheticRatesResult synthetic_rates_experiment(double tpr, double fpr, std::size_t n,
                                                std::uint32_t ratio);

}  // namespace obo
