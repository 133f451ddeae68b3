#include "obo/baseline.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "obo/error.hpp"
#include "obo/pathctx.hpp"
#include "obo/rng.hpp"

using ordered_json = nlohmann::ordered_json;

namespace obo {

std::vector<std::string> tokenize_leaves(const MethodUnit& method) {
  std::vector<std::string> out;
  for (const TerminalRef& ref : collect_terminals(method.ast))
    if (is_context_terminal(*ref.node)) out.push_back(ref.node->leaf_text);
  return out;
}

TfidfModel tfidf_fit(const std::vector<std::vector<std::string>>& train_docs) {
  TfidfModel model;
  model.doc_count = train_docs.size();
  std::vector<std::uint64_t> df;
  for (const auto& doc : train_docs) {
    std::vector<std::int32_t> seen;
    for (const std::string& token : doc) {
      auto [it, inserted] =
          model.vocabulary.emplace(token, static_cast<std::int32_t>(model.columns.size()));
      if (inserted) {
        model.columns.push_back(token);
        df.push_back(0);
      }
      std::int32_t col = it->second;
      if (std::find(seen.begin(), seen.end(), col) == seen.end()) {
        seen.push_back(col);
        ++df[col];
      }
    }
  }
  model.idf.resize(df.size());
  for (std::size_t c = 0; c < df.size(); ++c)
    model.idf[c] = std::log((1.0 + double(model.doc_count)) / (1.0 + double(df[c])));
  model.fitted = true;
  return model;
}

SparseVec tfidf_transform(const TfidfModel& model, const std::vector<std::string>& doc) {
  if (!model.fitted) fail(Errc::NotFitted, "tfidf_transform before tfidf_fit");
  std::unordered_map<std::int32_t, double> counts;
  for (const std::string& token : doc) {
    auto it = model.vocabulary.find(token);
    if (it == model.vocabulary.end()) continue;  // unseen tokens are dropped
    counts[it->second] += 1.0;
  }
  SparseVec vec;
  vec.reserve(counts.size());
  for (const auto& [col, tf] : counts) {
    double w = tf * model.idf[static_cast<std::size_t>(col)];
    if (w != 0.0) vec.emplace_back(col, w);
  }
  std::sort(vec.begin(), vec.end());
  double norm = 0.0;
  for (const auto& [col, w] : vec) norm += w * w;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& [col, w] : vec) w /= norm;
  }
  return vec;
}

namespace {

double value_at(const SparseVec& x, std::int32_t feature) {
  auto it = std::lower_bound(x.begin(), x.end(), feature,
                             [](const auto& p, std::int32_t f) { return p.first < f; });
  return (it != x.end() && it->first == feature) ? it->second : 0.0;
}

double gini(std::uint64_t c0, std::uint64_t c1) {
  double n = double(c0 + c1);
  if (n == 0.0) return 0.0;
  double p0 = double(c0) / n, p1 = double(c1) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeBuilder {
  const std::vector<SparseVec>& x;
  const std::vector<int>& y;
  std::size_t n_features;
  const ForestConfig& cfg;
  Rng& rng;
  Tree tree;

  std::int32_t build(std::vector<std::size_t>& indices, int depth) {
    std::uint64_t c0 = 0, c1 = 0;
    for (std::size_t i : indices) (y[i] == 1 ? c1 : c0)++;
    std::int32_t node_id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});

    bool pure = c0 == 0 || c1 == 0;
    if (pure || depth >= cfg.max_depth ||
        indices.size() < 2 * static_cast<std::size_t>(cfg.min_leaf)) {
      make_leaf(node_id, c0, c1);
      return node_id;
    }

    // Random sqrt(F) feature subset, sampled without replacement.
    std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(std::sqrt(double(n_features)))));
    std::vector<std::size_t> features = rng.sample_indices(n_features, k);

    double parent_gini = gini(c0, c1);
    double best_decrease = 0.0;
    std::int32_t best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, int>> vals(indices.size());
    for (std::size_t f : features) {
      for (std::size_t i = 0; i < indices.size(); ++i)
        vals[i] = {value_at(x[indices[i]], static_cast<std::int32_t>(f)),
                   y[indices[i]]};
      std::sort(vals.begin(), vals.end());
      std::uint64_t l0 = 0, l1 = 0, r0 = c0, r1 = c1;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        (vals[i].second == 1 ? l1 : l0)++;
        (vals[i].second == 1 ? r1 : r0)--;
        if (vals[i].first == vals[i + 1].first) continue;
        std::uint64_t nl = l0 + l1, nr = r0 + r1;
        if (nl < static_cast<std::uint64_t>(cfg.min_leaf) ||
            nr < static_cast<std::uint64_t>(cfg.min_leaf))
          continue;
        double decrease = parent_gini - (double(nl) * gini(l0, l1) + double(nr) * gini(r0, r1)) /
                                            double(indices.size());
        if (decrease > best_decrease + 1e-15) {
          best_decrease = decrease;
          best_feature = static_cast<std::int32_t>(f);
          best_threshold = 0.5 * (vals[i].first + vals[i + 1].first);
        }
      }
    }
    if (best_feature < 0) {
      make_leaf(node_id, c0, c1);
      return node_id;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t i : indices)
      (value_at(x[i], best_feature) <= best_threshold ? left : right).push_back(i);
    tree.nodes[node_id].feature = best_feature;
    tree.nodes[node_id].threshold = best_threshold;
    std::int32_t l = build(left, depth + 1);
    std::int32_t r = build(right, depth + 1);
    tree.nodes[node_id].left = l;
    tree.nodes[node_id].right = r;
    return node_id;
  }

  void make_leaf(std::int32_t node_id, std::uint64_t c0, std::uint64_t c1) {
    tree.nodes[node_id].feature = -1;
    tree.nodes[node_id].count0 = c0;
    tree.nodes[node_id].count1 = c1;
  }
};

}  // namespace

Forest rf_train(const std::vector<SparseVec>& x, const std::vector<int>& y,
                std::size_t n_features, const ForestConfig& cfg) {
  if (x.size() != y.size()) fail(Errc::LengthMismatch, "rf_train: |x| != |y|");
  if (x.size() < 2) fail(Errc::LengthMismatch, "rf_train: need at least 2 samples");
  bool pos = false, neg = false;
  for (int label : y) (label == 1 ? pos : neg) = true;
  if (!pos || !neg) fail(Errc::SingleClass, "rf_train: a single class is present");

  Forest forest;
  forest.cfg = cfg;
  forest.n_features = n_features;
  forest.trees.reserve(cfg.n_trees);
  for (int t = 0; t < cfg.n_trees; ++t) {
    Rng rng(mix64(cfg.seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> bootstrap(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      bootstrap[i] = static_cast<std::size_t>(rng.below(x.size()));
    std::sort(bootstrap.begin(), bootstrap.end());
    TreeBuilder builder{x, y, n_features, cfg, rng, Tree{}};
    builder.build(bootstrap, 0);
    forest.trees.push_back(std::move(builder.tree));
  }
  forest.trained = true;
  return forest;
}

double tree_predict(const Tree& tree, const SparseVec& x) {
  std::int32_t node = 0;
  while (tree.nodes[node].feature >= 0) {
    const TreeNode& n = tree.nodes[node];
    node = value_at(x, n.feature) <= n.threshold ? n.left : n.right;
  }
  const TreeNode& leaf = tree.nodes[node];
  std::uint64_t total = leaf.count0 + leaf.count1;
  return total == 0 ? 0.0 : double(leaf.count1) / double(total);
}

double rf_predict(const Forest& forest, const SparseVec& x) {
  if (!forest.trained || forest.trees.empty()) fail(Errc::NotTrained, "rf_predict before rf_train");
  double sum = 0.0;
  for (const Tree& tree : forest.trees) sum += tree_predict(tree, x);
  return sum / double(forest.trees.size());
}

std::string forest_to_json(const Forest& forest) {
  ordered_json j;
  j["n_trees"] = forest.cfg.n_trees;
  j["max_depth"] = forest.cfg.max_depth;
  j["min_leaf"] = forest.cfg.min_leaf;
  j["seed"] = forest.cfg.seed;
  j["n_features"] = forest.n_features;
  ordered_json trees = ordered_json::array();
  for (const Tree& tree : forest.trees) {
    ordered_json nodes = ordered_json::array();
    for (const TreeNode& n : tree.nodes)
      nodes.push_back({n.feature, n.threshold, n.left, n.right, n.count0, n.count1});
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j.dump();
}

Forest forest_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  Forest forest;
  forest.cfg.n_trees = j.at("n_trees").get<int>();
  forest.cfg.max_depth = j.at("max_depth").get<int>();
  forest.cfg.min_leaf = j.at("min_leaf").get<int>();
  forest.cfg.seed = j.at("seed").get<std::uint64_t>();
  forest.n_features = j.at("n_features").get<std::size_t>();
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    for (const auto& nj : tj) {
      TreeNode n;
      n.feature = nj.at(0).get<std::int32_t>();
      n.threshold = nj.at(1).get<double>();
      n.left = nj.at(2).get<std::int32_t>();
      n.right = nj.at(3).get<std::int32_t>();
      n.count0 = nj.at(4).get<std::uint64_t>();
      n.count1 = nj.at(5).get<std::uint64_t>();
      tree.nodes.push_back(n);
    }
    forest.trees.push_back(std::move(tree));
  }
  forest.trained = !forest.trees.empty();
  return forest;
}

std::string tfidf_to_json(const TfidfModel& model) {
  ordered_json j;
  j["doc_count"] = model.doc_count;
  j["columns"] = model.columns;
  j["idf"] = model.idf;
  return j.dump();
}

TfidfModel tfidf_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  TfidfModel model;
  model.doc_count = j.at("doc_count").get<std::size_t>();
  for (const auto& c : j.at("columns")) model.columns.push_back(c.get<std::string>());
  for (const auto& v : j.at("idf")) model.idf.push_back(v.get<double>());
  for (std::size_t i = 0; i < model.columns.size(); ++i)
    model.vocabulary.emplace(model.columns[i], static_cast<std::int32_t>(i));
  model.fitted = true;
  return model;
}

}  // namespace obo
