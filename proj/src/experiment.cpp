#include "obo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "obo/checkpoint.hpp"
#include "obo/error.hpp"
#include "obo/rng.hpp"

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace obo {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::BB: return "BB";
    case Scheme::BI: return "BI";
    case Scheme::II: return "II";
  }
  return "BB";
}

Scheme scheme_from_name(const std::string& name) {
  if (name == "BB") return Scheme::BB;
  if (name == "BI") return Scheme::BI;
  if (name == "II") return Scheme::II;
  fail(Errc::UsageError, "unknown scheme '" + name + "' (expected BB, BI or II)");
}

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::C2V: return "c2v";
    case ModelKind::C2S: return "c2s";
    case ModelKind::Baseline: return "baseline";
  }
  return "c2s";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "c2v") return ModelKind::C2V;
  if (name == "c2s") return ModelKind::C2S;
  if (name == "baseline") return ModelKind::Baseline;
  fail(Errc::UsageError, "unknown model '" + name + "' (expected c2v, c2s or baseline)");
}

namespace {

struct EncodedSplits {
  std::vector<EncodedExample> train, val, test;
  Vocabularies vocab;
  std::uint64_t test_unk_hits = 0;
};

int label_of(const LabeledExample& ex) { return ex.label == Label::Defective ? 1 : 0; }

// Bags for one dataset, aligned with it.
std::vector<PathContextBag> bags_for(const std::vector<LabeledExample>& dataset,
                                     const ExtractLimits& limits) {
  std::vector<PathContextBag> bags;
  bags.reserve(dataset.size());
  for (const LabeledExample& ex : dataset) {
    PathContextBag bag = extract_path_contexts(ex.method, limits);
    bag.label = label_of(ex);
    bags.push_back(std::move(bag));
  }
  return bags;
}

EncodedSplits encode_splits(const std::vector<LabeledExample>& train_ds,
                            const std::vector<LabeledExample>& eval_ds,
                            const ExtractLimits& limits, const VocabCaps& caps,
                            EncodeMode mode) {
  std::vector<PathContextBag> train_bags = bags_for(train_ds, limits);
  std::vector<PathContextBag> eval_bags = bags_for(eval_ds, limits);

  std::vector<PathContextBag> vocab_bags;
  for (std::size_t i = 0; i < train_ds.size(); ++i)
    if (train_ds[i].method.split == Split::Train) vocab_bags.push_back(train_bags[i]);
  EncodedSplits out;
  out.vocab = build_vocabularies(vocab_bags, caps);

  for (std::size_t i = 0; i < train_ds.size(); ++i) {
    EncodedExample enc = encode_example(train_bags[i], out.vocab, mode, limits);
    if (train_ds[i].method.split == Split::Train) out.train.push_back(std::move(enc));
    else if (train_ds[i].method.split == Split::Validation) out.val.push_back(std::move(enc));
  }
  // Exact out-of-vocabulary accounting over the test split alone.
  out.vocab.unk_hits = 0;
  for (std::size_t i = 0; i < eval_ds.size(); ++i)
    if (eval_ds[i].method.split == Split::Test)
      out.test.push_back(encode_example(eval_bags[i], out.vocab, mode, limits));
  out.test_unk_hits = out.vocab.unk_hits;
  return out;
}

void finish_report(ExperimentReport& report, const std::vector<double>& scores,
                   const std::vector<int>& labels, double threshold) {
  report.cm = confusion(scores, labels, threshold);
  PrecisionRecall pr = precision_recall(report.cm);
  report.precision = pr.precision;
  report.recall = pr.recall;
  report.rates = class_rates(report.cm);
  report.pr = pr_curve(scores, labels);
  report.roc = roc_curve(scores, labels);
  report.auc_pr = report.pr.area;
  report.auc_roc = report.roc.area;
  std::uint64_t pos = 0;
  for (int l : labels) pos += l == 1;
  report.prevalence = labels.empty() ? 0.0 : double(pos) / double(labels.size());
  report.n_test = labels.size();
  report.test_scores = scores;
  report.test_labels = labels;
}

}  // namespace

ExperimentReport run_experiment(const CorpusIndex& corpus, const ExperimentConfig& config,
                                Checkpoint* model_out) {
  ExperimentReport report;
  report.scheme = scheme_name(config.scheme);
  report.model = model_kind_name(config.model);

  std::uint32_t train_ratio = config.scheme == Scheme::II ? config.imbalanced_ratio : 1;
  std::uint32_t eval_ratio = config.scheme == Scheme::BB ? 1 : config.imbalanced_ratio;
  std::vector<LabeledExample> train_ds = build_dataset(corpus, DatasetSpec{train_ratio, config.seed});
  std::vector<LabeledExample> eval_ds =
      eval_ratio == train_ratio ? train_ds : build_dataset(corpus, DatasetSpec{eval_ratio, config.seed});

  std::vector<double> scores;
  std::vector<int> labels;

  if (config.model == ModelKind::Baseline) {
    std::vector<std::vector<std::string>> docs;
    std::vector<int> y;
    for (const LabeledExample& ex : train_ds) {
      if (ex.method.split != Split::Train) continue;
      docs.push_back(tokenize_leaves(ex.method));
      y.push_back(label_of(ex));
    }
    TfidfModel tfidf = tfidf_fit(docs);
    std::vector<SparseVec> x;
    x.reserve(docs.size());
    for (const auto& doc : docs) x.push_back(tfidf_transform(tfidf, doc));
    Forest forest = rf_train(x, y, tfidf.columns.size(), config.forest);
    report.n_train = x.size();
    for (const LabeledExample& ex : eval_ds) {
      if (ex.method.split != Split::Test) continue;
      scores.push_back(rf_predict(forest, tfidf_transform(tfidf, tokenize_leaves(ex.method))));
      labels.push_back(label_of(ex));
    }
    if (model_out) *model_out = make_baseline_checkpoint(tfidf, forest, config.limits);
  } else {
    EncodeMode mode = config.model == ModelKind::C2V ? EncodeMode::C2V : EncodeMode::C2S;
    EncodedSplits enc = encode_splits(train_ds, eval_ds, config.limits, config.caps, mode);
    report.n_train = enc.train.size();
    report.unk_hits = enc.test_unk_hits;
    const std::vector<EncodedExample>& val = enc.val.empty() ? enc.train : enc.val;
    if (config.model == ModelKind::C2V) {
      C2VModel<float> model = C2VModel<float>::init(enc.vocab.token.size(),
                                                    enc.vocab.path.size(), config.c2v,
                                                    mix64(config.seed, 0xc2f));
      report.history = train_model(model, enc.train, val, config.train);
      for (const EncodedExample& ex : enc.test) {
        if (ex.real_count == 0) {
          ++report.unscorable;
          continue;
        }
        scores.push_back(model.defect_score(ex));
        labels.push_back(ex.label);
      }
      if (model_out) *model_out = make_c2v_checkpoint(model, enc.vocab, config.limits);
    } else {
      C2SModel<float> model = C2SModel<float>::init(enc.vocab.subtoken.size(),
                                                    enc.vocab.node_kind.size(), config.c2s,
                                                    mix64(config.seed, 0xc25));
      report.history = train_model(model, enc.train, val, config.train);
      for (const EncodedExample& ex : enc.test) {
        if (ex.real_count == 0) {
          ++report.unscorable;
          continue;
        }
        scores.push_back(model.defect_score(ex));
        labels.push_back(ex.label);
      }
      if (model_out) *model_out = make_c2s_checkpoint(model, enc.vocab, config.limits);
    }
  }

  finish_report(report, scores, labels, config.eval_threshold);
  return report;
}

void write_experiment_json(const ExperimentReport& report, const fs::path& out) {
  ordered_json j;
  j["scheme"] = report.scheme;
  j["model"] = report.model;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["auc_roc"] = report.auc_roc;
  j["auc_pr"] = report.auc_pr;
  j["n_train"] = report.n_train;
  j["n_test"] = report.n_test;
  j["prevalence"] = report.prevalence;
  j["unk_hits"] = report.unk_hits;
  std::ofstream os(out, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + out.string() + " for writing");
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Bug pairs
// ---------------------------------------------------------------------------

namespace {

std::optional<MethodUnit> parse_snippet(const std::string& text, const std::string& label,
                                        std::string& error) {
  auto first_method = [&](const std::string& source) -> std::optional<MethodUnit> {
    std::vector<MethodUnit> units = extract_methods(source, "pairs", label);
    if (units.empty()) return std::nullopt;
    return units.front();
  };
  try {
    return first_method(text);
  } catch (const Error&) {
    // Bare method declaration: wrap in a class and retry.
  }
  try {
    return first_method("class Snippet {\n" + text + "\n}");
  } catch (const Error& e) {
    error = e.what();
    return std::nullopt;
  }
}

std::string slurp_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

std::vector<BugPair> load_bug_pairs(const fs::path& dir) {
  if (!fs::exists(dir)) fail(Errc::IoError, "pair directory does not exist: " + dir.string());
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string fn = entry.path().filename().string();
    const std::string suffix = ".buggy.java";
    if (fn.size() > suffix.size() && fn.substr(fn.size() - suffix.size()) == suffix)
      names.push_back(fn.substr(0, fn.size() - suffix.size()));
  }
  std::sort(names.begin(), names.end());
  std::vector<BugPair> pairs;
  for (const std::string& name : names) {
    BugPair pair;
    pair.name = name;
    pair.buggy =
        parse_snippet(slurp_file(dir / (name + ".buggy.java")), name + ".buggy", pair.parse_error);
    fs::path fixed_path = dir / (name + ".fixed.java");
    if (fs::exists(fixed_path))
      pair.fixed = parse_snippet(slurp_file(fixed_path), name + ".fixed", pair.parse_error);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

PairReport evaluate_bug_pairs(const MethodScorer& scorer, const std::vector<BugPair>& pairs,
                              double threshold) {
  PairReport report;
  std::vector<double> scores;
  std::vector<int> labels;
  std::size_t ordered = 0;
  for (const BugPair& pair : pairs) {
    if (!pair.buggy || !pair.fixed) {
      report.unscorable.push_back(pair.name + ": " + pair.parse_error);
      continue;
    }
    PairOutcome outcome;
    outcome.name = pair.name;
    try {
      outcome.score_buggy = scorer.score(*pair.buggy);
      outcome.score_fixed = scorer.score(*pair.fixed);
    } catch (const Error& e) {
      report.unscorable.push_back(pair.name + ": " + e.what());
      continue;
    }
    scores.push_back(outcome.score_buggy);
    labels.push_back(1);
    scores.push_back(outcome.score_fixed);
    labels.push_back(0);
    ordered += outcome.score_buggy > outcome.score_fixed;
    report.pairs.push_back(std::move(outcome));
  }
  report.cm = confusion(scores, labels, threshold);
  report.pairwise_ordering_accuracy =
      report.pairs.empty() ? 0.0 : double(ordered) / double(report.pairs.size());
  return report;
}

// ---------------------------------------------------------------------------
// Random search
// ---------------------------------------------------------------------------

TuneResult tune(const HparamSpace& space, int budget,
                const std::function<double(const HparamPoint&)>& objective, std::uint64_t seed) {
  if (budget < 1) fail(Errc::UsageError, "tune: budget must be at least 1");
  Rng rng(seed);
  TuneResult result;
  for (int t = 0; t < budget; ++t) {
    HparamPoint point;
    for (const auto& [name, range] : space) {
      double v;
      if (!range.choices.empty()) {
        v = range.choices[static_cast<std::size_t>(rng.below(range.choices.size()))];
      } else if (range.log_scale) {
        v = std::exp(rng.uniform(std::log(range.lo), std::log(range.hi)));
      } else {
        v = rng.uniform(range.lo, range.hi);
      }
      point[name] = v;
    }
    Trial trial;
    trial.index = t;
    trial.point = std::move(point);
    trial.objective = objective(trial.point);
    if (result.log.empty() || trial.objective > result.best.objective) result.best = trial;
    result.log.push_back(std::move(trial));
  }
  return result;
}

void write_trial_log(const TuneResult& result, const fs::path& out) {
  ordered_json j;
  j["best_index"] = result.best.index;
  j["best_objective"] = result.best.objective;
  j["best_point"] = result.best.point;
  ordered_json trials = ordered_json::array();
  for (const Trial& t : result.log)
    trials.push_back({{"index", t.index}, {"point", t.point}, {"objective", t.objective}});
  j["trials"] = std::move(trials);
  std::ofstream os(out, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + out.string() + " for writing");
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Scan
// ---------------------------------------------------------------------------

ScanReport scan(const MethodScorer& scorer, const CorpusIndex& corpus, double threshold) {
  ScanReport report;
  std::uint64_t unk_before = scorer.unk_hits();
  for (const MethodUnit& m : corpus.methods) {
    ++report.total_scanned;
    double s;
    try {
      s = scorer.score(m);
    } catch (const Error&) {
      ++report.unscorable;
      continue;
    }
    if (s >= threshold)
      report.flagged.push_back(ScanEntry{m.id, m.project, m.file, s});
  }
  std::sort(report.flagged.begin(), report.flagged.end(), [](const ScanEntry& a, const ScanEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.method_id < b.method_id;
  });
  report.unk_hits = scorer.unk_hits() - unk_before;
  return report;
}

void write_scan_report(const ScanReport& report, const fs::path& out) {
  ordered_json j;
  j["total_scanned"] = report.total_scanned;
  j["unscorable"] = report.unscorable;
  j["unk_hits"] = report.unk_hits;
  ordered_json flagged = ordered_json::array();
  for (const ScanEntry& e : report.flagged) {
    ordered_json entry;
    entry["method_id"] = e.method_id;
    entry["project"] = e.project;
    entry["file"] = e.file;
    entry["score"] = e.score;
    flagged.push_back(std::move(entry));
  }
  j["flagged"] = std::move(flagged);
  std::ofstream os(out, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + out.string() + " for writing");
  os << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic rates
// ---------------------------------------------------------------------------

double back_solve_fpr(double precision, double recall) {
  return recall * (1.0 - precision) / precision;
}

double imbalanced_precision(double recall, double fpr, double ratio) {
  return recall / (recall + ratio * fpr);
}

std::unique_ptr<MethodScorer> scorer_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.model_kind == "c2v") {
    auto scorer = std::make_unique<C2VMethodScorer<float>>();
    scorer->model = c2v_from_checkpoint<float>(ckpt, scorer->limits);
    scorer->vocab = ckpt.vocab;
    return scorer;
  }
  if (ckpt.model_kind == "c2s") {
    auto scorer = std::make_unique<C2SMethodScorer<float>>();
    scorer->model = c2s_from_checkpoint<float>(ckpt, scorer->limits);
    scorer->vocab = ckpt.vocab;
    return scorer;
  }
  if (ckpt.model_kind == "baseline") {
    auto scorer = std::make_unique<BaselineMethodScorer>();
    ExtractLimits limits;
    baseline_from_checkpoint(ckpt, scorer->tfidf, scorer->forest, limits);
    return scorer;
  }
  fail(Errc::IoError, "unknown checkpoint kind '" + ckpt.model_kind + "'");
}

SyntheticRatesResult synthetic_rates_experiment(double tpr, double fpr, std::size_t n,
                                                std::uint32_t ratio) {
  std::size_t defective = static_cast<std::size_t>(
      std::llround(double(n) / double(1 + ratio)));
  std::size_t clean = n - defective;
  SyntheticRatesResult result;
  result.cm.tp = static_cast<std::uint64_t>(std::llround(tpr * double(defective)));
  result.cm.fn = defective - result.cm.tp;
  result.cm.fp = static_cast<std::uint64_t>(std::llround(fpr * double(clean)));
  result.cm.tn = clean - result.cm.fp;
  PrecisionRecall pr = precision_recall(result.cm);
  result.precision = pr.precision;
  result.recall = pr.recall;
  return result;
}

}  // namespace obo
