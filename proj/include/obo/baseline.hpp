#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "obo/corpus.hpp"

namespace obo {

// Pre-order leaf token texts, punctuation excluded (same terminal rule as
// the path-context extractor).
std::vector<std::string> tokenize_leaves(const MethodUnit& method);

// Sparse feature vector: (column, weight) pairs sorted by column.
using SparseVec = std::vector<std::pair<std::int32_t, double>>;

struct TfidfModel {
  std::unordered_map<std::string, std::int32_t> vocabulary;  // token -> column
  std::vector<std::string> columns;                          // first-seen order
  std::vector<double> idf;                                   // ln((1+N)/(1+df))
  std::size_t doc_count = 0;
  bool fitted = false;
};

TfidfModel tfidf_fit(const std::vector<std::vector<std::string>>& train_docs);

// weight(t) = tf(t) * idf(t), L2-normalized; unseen tokens contribute nothing.
// Throws Error(NotFitted) before fit.
SparseVec tfidf_transform(const TfidfModel& model, const std::vector<std::string>& doc);

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::uint64_t count0 = 0;  // leaf class counts
  std::uint64_t count1 = 0;
};

struct Tree {
  std::vector<TreeNode> nodes;  // node 0 is the root
};

struct ForestConfig {
  int n_trees = 100;
  int max_depth = 16;
  int min_leaf = 2;
  std::uint64_t seed = 0;
};

struct Forest {
  ForestConfig cfg;
  std::size_t n_features = 0;
  std::vector<Tree> trees;
  bool trained = false;
};

// Seeded bootstrap per tree (tree i depends only on (seed, i)), Gini splits
// over a random sqrt(F) feature subset. Throws Error(SingleClass) when y
// holds one class only.
Forest rf_train(const std::vector<SparseVec>& x, const std::vector<int>& y,
                std::size_t n_features, const ForestConfig& cfg);

// Mean over trees of the leaf defective-class fraction.
double rf_predict(const Forest& forest, const SparseVec& x);
double tree_predict(const Tree& tree, const SparseVec& x);

std::string forest_to_json(const Forest& forest);
Forest forest_from_json(const std::string& text);
std::string tfidf_to_json(const TfidfModel& model);
TfidfModel tfidf_from_json(const std::string& text);

}  // namespace obo
