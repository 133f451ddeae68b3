// obo: off-by-one defect-detection pipeline.
// Subcommands: ingest, mutate, extract, train, eval, pairs, tune, scan, predict.
// Exit codes: 0 success, 1 validation/usage error, 2 internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "obo/checkpoint.hpp"
#include "obo/corpus.hpp"
#include "obo/error.hpp"
#include "obo/experiment.hpp"
#include "obo/mutator.hpp"
#include "obo/pathctx.hpp"

using namespace obo;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::uint64_t env_seed_fallback() {
  const char* env = std::getenv("OBO_SEED");
  if (env == nullptr) return 0;
  return std::strtoull(env, nullptr, 10);
}

SplitFractions parse_fractions(const std::string& text) {
  SplitFractions f;
  if (std::sscanf(text.c_str(), "%lf,%lf,%lf", &f.train, &f.validation, &f.test) != 3)
    fail(Errc::UsageError, "--splits expects three comma-separated fractions");
  return f;
}

// Provenance record written next to every artifact.
void write_run_config(const fs::path& out_dir, const std::string& command,
                      const ordered_json& args) {
  ordered_json j;
  j["tool"] = "obo";
  j["command"] = command;
  j["args"] = args;
  std::ofstream os(out_dir / "run_config.json", std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot write run_config.json under " + out_dir.string());
  os << j.dump(2) << '\n';
}

fs::path prepare_out_dir(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  fs::create_directories(dir);
  return dir;
}

// Applies values from a JSON config file for options the user did not pass
// explicitly on the command line.
void apply_config_file(CLI::App* cmd, const std::string& config_path) {
  if (config_path.empty()) return;
  std::ifstream is(config_path, std::ios::binary);
  if (!is) fail(Errc::UsageError, "cannot open config file " + config_path);
  ordered_json j = ordered_json::parse(is, nullptr, true, true);
  for (const auto& [key, value] : j.items()) {
    CLI::Option* opt = cmd->get_option_no_throw("--" + key);
    if (opt == nullptr) fail(Errc::UsageError, "config key '" + key + "' is not an option");
    if (opt->count() > 0) continue;  // explicit flags win
    std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    opt->clear();
    opt->add_result(text);
    opt->run_callback();
  }
}

struct CommonModelFlags {
  std::string model = "c2s";
  std::string scheme = "BB";
  std::uint64_t seed = env_seed_fallback();
  std::uint32_t ratio = 10;
  double threshold = 0.5;
  // extraction
  std::size_t max_length = 8;
  std::size_t max_width = 2;
  std::size_t c_max = 200;
  std::size_t subtoken_cap = 5;
  // training
  int batch = 64;
  int epochs = 300;
  int patience = 3;
  double lr = 1e-3;
  double dropout = 0.25;
  int dim = 32;
  int hidden = 64;
  // baseline
  int trees = 100;
  int max_depth = 16;
  int min_leaf = 2;
};

void add_model_flags(CLI::App* cmd, CommonModelFlags& f) {
  cmd->add_option("--model", f.model, "c2v | c2s | baseline");
  cmd->add_option("--scheme", f.scheme, "BB | BI | II");
  cmd->add_option("--seed", f.seed, "global seed (default env OBO_SEED or 0)");
  cmd->add_option("--ratio", f.ratio, "non-defective:defective ratio for imbalanced sets");
  cmd->add_option("--threshold", f.threshold, "decision threshold");
  cmd->add_option("--max-length", f.max_length, "max nodes per path");
  cmd->add_option("--max-width", f.max_width, "max child-index gap at the common ancestor");
  cmd->add_option("--c-max", f.c_max, "context slots per example");
  cmd->add_option("--subtoken-cap", f.subtoken_cap, "subtokens kept per terminal");
  cmd->add_option("--batch", f.batch, "mini-batch size");
  cmd->add_option("--epochs", f.epochs, "max training epochs");
  cmd->add_option("--patience", f.patience, "early-stop patience (epochs)");
  cmd->add_option("--lr", f.lr, "Adam learning rate");
  cmd->add_option("--dropout", f.dropout, "dropout on combined context vectors");
  cmd->add_option("--dim", f.dim, "embedding size");
  cmd->add_option("--hidden", f.hidden, "combined context / code vector size");
  cmd->add_option("--trees", f.trees, "random-forest size");
  cmd->add_option("--max-depth", f.max_depth, "random-forest depth limit");
  cmd->add_option("--min-leaf", f.min_leaf, "random-forest leaf minimum");
}

ExperimentConfig experiment_config(const CommonModelFlags& f) {
  ExperimentConfig cfg;
  cfg.scheme = scheme_from_name(f.scheme);
  cfg.model = model_kind_from_name(f.model);
  cfg.limits.max_length = f.max_length;
  cfg.limits.max_width = f.max_width;
  cfg.limits.c_max = f.c_max;
  cfg.limits.subtoken_cap = f.subtoken_cap;
  cfg.limits.seed = f.seed;
  cfg.train.batch_size = f.batch;
  cfg.train.max_epochs = f.epochs;
  cfg.train.patience = f.patience;
  cfg.train.adam.lr = f.lr;
  cfg.train.seed = f.seed;
  cfg.train.threshold = 0.5;
  cfg.c2v.d_t = f.dim;
  cfg.c2v.d_p = f.dim;
  cfg.c2v.h = f.hidden;
  cfg.c2v.dropout = f.dropout;
  cfg.c2s.d_s = f.dim;
  cfg.c2s.d_n = f.dim;
  cfg.c2s.h_p = f.dim;
  cfg.c2s.h = f.hidden;
  cfg.c2s.d_dec = f.dim;
  cfg.c2s.dropout = f.dropout;
  cfg.forest.n_trees = f.trees;
  cfg.forest.max_depth = f.max_depth;
  cfg.forest.min_leaf = f.min_leaf;
  cfg.forest.seed = f.seed;
  cfg.imbalanced_ratio = f.ratio;
  cfg.seed = f.seed;
  cfg.eval_threshold = f.threshold;
  return cfg;
}

ordered_json flags_json(const CommonModelFlags& f) {
  ordered_json j;
  j["model"] = f.model;
  j["scheme"] = f.scheme;
  j["seed"] = f.seed;
  j["ratio"] = f.ratio;
  j["threshold"] = f.threshold;
  j["max_length"] = f.max_length;
  j["max_width"] = f.max_width;
  j["c_max"] = f.c_max;
  j["subtoken_cap"] = f.subtoken_cap;
  j["batch"] = f.batch;
  j["epochs"] = f.epochs;
  j["patience"] = f.patience;
  j["lr"] = f.lr;
  j["dropout"] = f.dropout;
  j["dim"] = f.dim;
  j["hidden"] = f.hidden;
  j["trees"] = f.trees;
  j["max_depth"] = f.max_depth;
  j["min_leaf"] = f.min_leaf;
  return j;
}

void write_history_csv(const TrainHistory& history, const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  os << "epoch,train_loss,train_accuracy,val_precision,val_recall\n";
  os.precision(17);
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    const EpochStats& s = history.epochs[e];
    os << (e + 1) << ',' << s.train_loss << ',' << s.train_accuracy << ','
       << s.val_precision << ',' << s.val_recall << '\n';
  }
}

// Scores every example of one split of a dataset with a checkpointed model.
void eval_checkpoint(const Checkpoint& ckpt, const std::vector<LabeledExample>& dataset,
                     Split split, double threshold, const fs::path& out_dir) {
  std::unique_ptr<MethodScorer> scorer = scorer_from_checkpoint(ckpt);
  std::vector<double> scores;
  std::vector<int> labels;
  std::size_t unscorable = 0;
  std::uint64_t unk_before = scorer->unk_hits();
  for (const LabeledExample& ex : dataset) {
    if (split != Split::Unassigned && ex.method.split != split) continue;
    try {
      scores.push_back(scorer->score(ex.method));
      labels.push_back(ex.label == Label::Defective ? 1 : 0);
    } catch (const Error&) {
      ++unscorable;
    }
  }
  ExperimentReport report;
  report.scheme = "-";
  report.model = ckpt.model_kind;
  report.cm = confusion(scores, labels, threshold);
  PrecisionRecall pr = precision_recall(report.cm);
  report.precision = pr.precision;
  report.recall = pr.recall;
  report.unk_hits = scorer->unk_hits() - unk_before;
  std::uint64_t pos = 0;
  for (int l : labels) pos += l == 1;
  report.prevalence = labels.empty() ? 0.0 : double(pos) / double(labels.size());
  report.n_test = labels.size();
  report.unscorable = unscorable;
  bool both = pos > 0 && pos < labels.size();
  if (both) {
    Curve prc = pr_curve(scores, labels);
    Curve roc = roc_curve(scores, labels);
    report.auc_pr = prc.area;
    report.auc_roc = roc.area;
    write_pr_csv(prc, (out_dir / "pr.csv").string());
    write_roc_csv(roc, (out_dir / "roc.csv").string());
  }
  write_experiment_json(report, out_dir / "metrics.json");
}

int dispatch(int argc, char** argv) {
  CLI::App app{"off-by-one bug-detection laboratory"};
  app.require_subcommand(1);

  // --- ingest ---------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "parse a project tree into corpus.jsonl");
  std::string ingest_root, ingest_splits = "0.8,0.1,0.1", ingest_out, ingest_config;
  std::uint64_t ingest_seed = env_seed_fallback();
  ingest->add_option("--root", ingest_root, "directory of project subdirectories")->required();
  ingest->add_option("--splits", ingest_splits, "train,validation,test fractions");
  ingest->add_option("--seed", ingest_seed, "shuffle seed");
  ingest->add_option("--out", ingest_out, "output directory");
  ingest->add_option("--config", ingest_config, "JSON file overriding unset flags");

  // --- mutate ---------------------------------------------------------------
  auto* mutate_cmd = app.add_subcommand("mutate", "build a labeled dataset.jsonl");
  std::string mutate_corpus, mutate_out, mutate_config;
  std::uint32_t mutate_ratio = 1;
  std::uint64_t mutate_seed = env_seed_fallback();
  bool mutate_verify = false;
  mutate_cmd->add_option("--corpus", mutate_corpus, "corpus.jsonl")->required();
  mutate_cmd->add_option("--ratio", mutate_ratio, "non-defective:defective ratio (1 = balanced)");
  mutate_cmd->add_option("--seed", mutate_seed, "site-selection seed");
  mutate_cmd->add_option("--out", mutate_out, "output directory");
  mutate_cmd->add_flag("--verify", mutate_verify, "also write validation.json");
  mutate_cmd->add_option("--config", mutate_config, "JSON file overriding unset flags");

  // --- extract ----------------------------------------------------------------
  auto* extract = app.add_subcommand("extract", "write contexts.txt and vocab.json");
  std::string extract_dataset, extract_mode = "c2v", extract_split = "all", extract_out,
              extract_config;
  CommonModelFlags extract_flags;
  extract->add_option("--dataset", extract_dataset, "dataset.jsonl")->required();
  extract->add_option("--mode", extract_mode, "c2v | c2s token serialization");
  extract->add_option("--split", extract_split, "train | validation | test | all");
  extract->add_option("--out", extract_out, "output directory");
  extract->add_option("--max-length", extract_flags.max_length, "max nodes per path");
  extract->add_option("--max-width", extract_flags.max_width, "max width at the ancestor");
  extract->add_option("--c-max", extract_flags.c_max, "context slots per example");
  extract->add_option("--subtoken-cap", extract_flags.subtoken_cap, "subtokens per terminal");
  extract->add_option("--seed", extract_flags.seed, "pair-subsampling seed");
  extract->add_option("--config", extract_config, "JSON file overriding unset flags");

  // --- train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "train per scheme and evaluate on the test split");
  std::string train_corpus, train_out, train_config;
  CommonModelFlags train_flags;
  train->add_option("--corpus", train_corpus, "corpus.jsonl")->required();
  train->add_option("--out", train_out, "output directory");
  add_model_flags(train, train_flags);
  train->add_option("--config", train_config, "JSON file overriding unset flags");

  // --- eval -------------------------------------------------------------------
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  std::string eval_model, eval_dataset, eval_split = "test", eval_out, eval_config;
  double eval_threshold = 0.5;
  eval->add_option("--model", eval_model, "model checkpoint")->required();
  eval->add_option("--dataset", eval_dataset, "dataset.jsonl")->required();
  eval->add_option("--split", eval_split, "train | validation | test | all");
  eval->add_option("--threshold", eval_threshold, "decision threshold");
  eval->add_option("--out", eval_out, "output directory");
  eval->add_option("--config", eval_config, "JSON file overriding unset flags");

  // --- pairs ------------------------------------------------------------------
  auto* pairs = app.add_subcommand("pairs", "score buggy/fixed method pairs");
  std::string pairs_model, pairs_dir, pairs_out, pairs_config;
  double pairs_threshold = 0.5;
  pairs->add_option("--model", pairs_model, "model checkpoint")->required();
  pairs->add_option("--dir", pairs_dir, "directory of <name>.buggy.java / <name>.fixed.java")
      ->required();
  pairs->add_option("--threshold", pairs_threshold, "decision threshold");
  pairs->add_option("--out", pairs_out, "output directory");
  pairs->add_option("--config", pairs_config, "JSON file overriding unset flags");

  // --- tune -------------------------------------------------------------------
  auto* tune_cmd = app.add_subcommand("tune", "random search over hyperparameters");
  std::string tune_corpus, tune_out, tune_config;
  CommonModelFlags tune_flags;
  int tune_budget = 10;
  tune_cmd->add_option("--corpus", tune_corpus, "corpus.jsonl")->required();
  tune_cmd->add_option("--budget", tune_budget, "number of trials");
  tune_cmd->add_option("--out", tune_out, "output directory");
  add_model_flags(tune_cmd, tune_flags);
  tune_cmd->add_option("--config", tune_config, "JSON file overriding unset flags");

  // --- scan -------------------------------------------------------------------
  auto* scan_cmd = app.add_subcommand("scan", "rank methods of a codebase by defect score");
  std::string scan_model, scan_root, scan_corpus, scan_out, scan_config;
  double scan_threshold = 0.8;
  std::uint64_t scan_seed = env_seed_fallback();
  scan_cmd->add_option("--model", scan_model, "model checkpoint")->required();
  scan_cmd->add_option("--root", scan_root, "directory of project subdirectories");
  scan_cmd->add_option("--corpus", scan_corpus, "corpus.jsonl (alternative to --root)");
  scan_cmd->add_option("--threshold", scan_threshold, "report scores >= threshold");
  scan_cmd->add_option("--seed", scan_seed, "ingest seed when --root is used");
  scan_cmd->add_option("--out", scan_out, "output directory");
  scan_cmd->add_option("--config", scan_config, "JSON file overriding unset flags");

  // --- predict ----------------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "emit method_id<TAB>score lines");
  std::string predict_model, predict_root, predict_corpus, predict_out, predict_config;
  std::uint64_t predict_seed = env_seed_fallback();
  predict->add_option("--model", predict_model, "model checkpoint")->required();
  predict->add_option("--root", predict_root, "directory of project subdirectories");
  predict->add_option("--corpus", predict_corpus, "corpus.jsonl (alternative to --root)");
  predict->add_option("--seed", predict_seed, "ingest seed when --root is used");
  predict->add_option("--out", predict_out, "optional output directory for scores.tsv");
  predict->add_option("--config", predict_config, "JSON file overriding unset flags");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (ingest->parsed()) {
    apply_config_file(ingest, ingest_config);
    fs::path out_dir = prepare_out_dir(ingest_out);
    CorpusIndex idx = ingest_corpus(ingest_root, parse_fractions(ingest_splits), ingest_seed);
    write_corpus_jsonl(idx, out_dir / "corpus.jsonl");
    for (const std::string& skipped : idx.skipped_files)
      std::cerr << "warning: skipped unparsable file " << skipped << '\n';
    write_run_config(out_dir, "ingest",
                     {{"root", ingest_root}, {"splits", ingest_splits}, {"seed", ingest_seed}});
    std::cout << "corpus.jsonl: " << idx.methods.size() << " methods from "
              << idx.split_assignment.size() << " projects\n";
    return 0;
  }

  if (mutate_cmd->parsed()) {
    apply_config_file(mutate_cmd, mutate_config);
    fs::path out_dir = prepare_out_dir(mutate_out);
    CorpusIndex idx = read_corpus_jsonl(mutate_corpus);
    auto dataset = build_dataset(idx, DatasetSpec{mutate_ratio, mutate_seed});
    write_dataset_jsonl(dataset, out_dir / "dataset.jsonl");
    if (mutate_verify) {
      ValidationReport report = verify_dataset(dataset);
      ordered_json j;
      j["valid"] = report.valid();
      j["operator_delta_violations"] = report.operator_delta_violations;
      j["split_violations"] = report.split_violations;
      ordered_json ratios = ordered_json::object();
      for (const auto& [split, counts] : report.per_split)
        ratios[split_name(split)] = {{"non_defective", counts.non_defective},
                                     {"defective", counts.defective},
                                     {"ratio", counts.ratio()}};
      j["per_split"] = std::move(ratios);
      std::ofstream os(out_dir / "validation.json", std::ios::binary);
      os << j.dump(2) << '\n';
    }
    write_run_config(out_dir, "mutate",
                     {{"corpus", mutate_corpus}, {"ratio", mutate_ratio}, {"seed", mutate_seed}});
    std::cout << "dataset.jsonl: " << dataset.size() << " examples\n";
    return 0;
  }

  if (extract->parsed()) {
    apply_config_file(extract, extract_config);
    fs::path out_dir = prepare_out_dir(extract_out);
    auto dataset = read_dataset_jsonl(extract_dataset);
    ExtractLimits limits;
    limits.max_length = extract_flags.max_length;
    limits.max_width = extract_flags.max_width;
    limits.c_max = extract_flags.c_max;
    limits.subtoken_cap = extract_flags.subtoken_cap;
    limits.seed = extract_flags.seed;
    EncodeMode mode = extract_mode == "c2s" ? EncodeMode::C2S : EncodeMode::C2V;

    std::vector<PathContextBag> selected, train_bags;
    for (const LabeledExample& ex : dataset) {
      PathContextBag bag = extract_path_contexts(ex.method, limits);
      bag.label = ex.label == Label::Defective ? 1 : 0;
      if (ex.method.split == Split::Train) train_bags.push_back(bag);
      bool wanted = extract_split == "all" ||
                    ex.method.split == split_from_name(extract_split);
      if (wanted) selected.push_back(std::move(bag));
    }
    write_contexts_txt(selected, mode, out_dir / "contexts.txt");
    Vocabularies vocab = build_vocabularies(train_bags, VocabCaps{});
    write_vocab_json(vocab, out_dir / "vocab.json");
    write_run_config(out_dir, "extract",
                     {{"dataset", extract_dataset},
                      {"mode", extract_mode},
                      {"split", extract_split},
                      {"max_length", limits.max_length},
                      {"max_width", limits.max_width},
                      {"c_max", limits.c_max},
                      {"subtoken_cap", limits.subtoken_cap},
                      {"seed", limits.seed}});
    std::cout << "contexts.txt: " << selected.size() << " examples\n";
    return 0;
  }

  if (train->parsed()) {
    apply_config_file(train, train_config);
    fs::path out_dir = prepare_out_dir(train_out);
    CorpusIndex idx = read_corpus_jsonl(train_corpus);
    ExperimentConfig cfg = experiment_config(train_flags);
    Checkpoint ckpt;
    ExperimentReport report = run_experiment(idx, cfg, &ckpt);
    write_experiment_json(report, out_dir / "metrics.json");
    if (!report.test_scores.empty() && report.prevalence > 0.0 && report.prevalence < 1.0) {
      write_pr_csv(report.pr, (out_dir / "pr.csv").string());
      write_roc_csv(report.roc, (out_dir / "roc.csv").string());
    }
    write_history_csv(report.history, out_dir / "history.csv");
    write_checkpoint(ckpt, out_dir / "model.ckpt");
    write_run_config(out_dir, "train", flags_json(train_flags));
    std::cout << "scheme " << report.scheme << " model " << report.model << ": precision "
              << report.precision << ", recall " << report.recall << " on " << report.n_test
              << " test examples\n";
    return 0;
  }

  if (eval->parsed()) {
    apply_config_file(eval, eval_config);
    fs::path out_dir = prepare_out_dir(eval_out);
    Checkpoint ckpt = read_checkpoint(eval_model);
    auto dataset = read_dataset_jsonl(eval_dataset);
    Split split = eval_split == "all" ? Split::Unassigned : split_from_name(eval_split);
    eval_checkpoint(ckpt, dataset, split, eval_threshold, out_dir);
    write_run_config(out_dir, "eval",
                     {{"model", eval_model},
                      {"dataset", eval_dataset},
                      {"split", eval_split},
                      {"threshold", eval_threshold}});
    std::cout << "metrics.json written\n";
    return 0;
  }

  if (pairs->parsed()) {
    apply_config_file(pairs, pairs_config);
    fs::path out_dir = prepare_out_dir(pairs_out);
    Checkpoint ckpt = read_checkpoint(pairs_model);
    std::unique_ptr<MethodScorer> scorer = scorer_from_checkpoint(ckpt);
    auto bug_pairs = load_bug_pairs(pairs_dir);
    PairReport report = evaluate_bug_pairs(*scorer, bug_pairs, pairs_threshold);
    PrecisionRecall pr = precision_recall(report.cm);
    ordered_json j;
    j["threshold"] = pairs_threshold;
    j["pairs_scored"] = report.pairs.size();
    j["precision"] = pr.precision;
    j["recall"] = pr.recall;
    j["tp"] = report.cm.tp;
    j["fp"] = report.cm.fp;
    j["fn"] = report.cm.fn;
    j["tn"] = report.cm.tn;
    j["pairwise_ordering_accuracy"] = report.pairwise_ordering_accuracy;
    j["unscorable"] = report.unscorable;
    ordered_json detail = ordered_json::array();
    for (const PairOutcome& o : report.pairs)
      detail.push_back({{"name", o.name},
                        {"score_buggy", o.score_buggy},
                        {"score_fixed", o.score_fixed}});
    j["pairs"] = std::move(detail);
    std::ofstream os(out_dir / "pairs.json", std::ios::binary);
    os << j.dump(2) << '\n';
    write_run_config(out_dir, "pairs",
                     {{"model", pairs_model}, {"dir", pairs_dir}, {"threshold", pairs_threshold}});
    std::cout << "pairs.json: " << report.pairs.size() << " pairs scored\n";
    return 0;
  }

  if (tune_cmd->parsed()) {
    apply_config_file(tune_cmd, tune_config);
    fs::path out_dir = prepare_out_dir(tune_out);
    CorpusIndex idx = read_corpus_jsonl(tune_corpus);
    HparamSpace space;
    space["lr"] = HparamRange{1e-4, 1e-2, true, {}};
    space["dropout"] = HparamRange{0.0, 0.5, false, {}};
    space["dim"] = HparamRange{0, 0, false, {16, 32, 64}};
    space["hidden"] = HparamRange{0, 0, false, {32, 64, 128}};
    ExperimentConfig base = experiment_config(tune_flags);
    auto objective = [&](const HparamPoint& point) {
      ExperimentConfig cfg = base;
      cfg.train.adam.lr = point.at("lr");
      cfg.c2v.dropout = cfg.c2s.dropout = point.at("dropout");
      int dim = int(point.at("dim"));
      int hidden = int(point.at("hidden"));
      cfg.c2v.d_t = cfg.c2v.d_p = dim;
      cfg.c2s.d_s = cfg.c2s.d_n = cfg.c2s.h_p = cfg.c2s.d_dec = dim;
      cfg.c2v.h = cfg.c2s.h = hidden;
      ExperimentReport report = run_experiment(idx, cfg);
      // Objective: best validation precision seen while training.
      double best = 0.0;
      for (const EpochStats& s : report.history.epochs)
        best = std::max(best, s.val_precision);
      return best;
    };
    TuneResult result = tune(space, tune_budget, objective, tune_flags.seed);
    write_trial_log(result, out_dir / "trials.json");
    write_run_config(out_dir, "tune", flags_json(tune_flags));
    std::cout << "best objective " << result.best.objective << " at trial "
              << result.best.index << "\n";
    return 0;
  }

  if (scan_cmd->parsed()) {
    apply_config_file(scan_cmd, scan_config);
    fs::path out_dir = prepare_out_dir(scan_out);
    if (scan_root.empty() == scan_corpus.empty())
      fail(Errc::UsageError, "scan needs exactly one of --root or --corpus");
    Checkpoint ckpt = read_checkpoint(scan_model);
    std::unique_ptr<MethodScorer> scorer = scorer_from_checkpoint(ckpt);
    CorpusIndex idx = scan_root.empty()
                          ? read_corpus_jsonl(scan_corpus)
                          : ingest_corpus(scan_root, SplitFractions{1.0, 0.0, 0.0}, scan_seed);
    ScanReport report = scan(*scorer, idx, scan_threshold);
    write_scan_report(report, out_dir / "scan.json");
    std::ofstream tsv(out_dir / "scores.tsv", std::ios::binary);
    tsv.precision(17);
    for (const ScanEntry& e : report.flagged) tsv << e.method_id << '\t' << e.score << '\n';
    write_run_config(out_dir, "scan",
                     {{"model", scan_model},
                      {"root", scan_root},
                      {"corpus", scan_corpus},
                      {"threshold", scan_threshold},
                      {"seed", scan_seed}});
    std::cout << "scan.json: " << report.flagged.size() << " of " << report.total_scanned
              << " methods at or above " << scan_threshold << "\n";
    return 0;
  }

  if (predict->parsed()) {
    apply_config_file(predict, predict_config);
    if (predict_root.empty() == predict_corpus.empty())
      fail(Errc::UsageError, "predict needs exactly one of --root or --corpus");
    Checkpoint ckpt = read_checkpoint(predict_model);
    std::unique_ptr<MethodScorer> scorer = scorer_from_checkpoint(ckpt);
    CorpusIndex idx = predict_root.empty()
                          ? read_corpus_jsonl(predict_corpus)
                          : ingest_corpus(predict_root, SplitFractions{1.0, 0.0, 0.0},
                                          predict_seed);
    std::ostringstream lines;
    lines.precision(17);
    for (const MethodUnit& m : idx.methods) {
      try {
        lines << m.id << '\t' << scorer->score(m) << '\n';
      } catch (const Error&) {
        lines << m.id << "\tunscorable\n";
      }
    }
    std::cout << lines.str();
    if (!predict_out.empty()) {
      fs::path out_dir = prepare_out_dir(predict_out);
      std::ofstream tsv(out_dir / "scores.tsv", std::ios::binary);
      tsv << lines.str();
      write_run_config(out_dir, "predict",
                       {{"model", predict_model},
                        {"root", predict_root},
                        {"corpus", predict_corpus},
                        {"seed", predict_seed}});
    }
    return 0;
  }

  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
}
