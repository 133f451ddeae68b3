#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obo/corpus.hpp"

namespace obo {

enum class Label : std::uint8_t { NonDefective = 0, Defective = 1 };

struct LabeledExample {
  MethodUnit method;
  Label label = Label::NonDefective;
  std::string origin_id;                     // own id for non-defective examples
  std::optional<MutationSite> mutated_site;  // present iff defective
};

struct DatasetSpec {
  std::uint32_t ratio = 1;  // non-defective : defective, r >= 1
  std::uint64_t seed = 0;
};

// Applies the off-by-one operator flip (< <-> <=, > <-> >=) at `site`. The
// returned example is defective, differs from `method` in exactly that one
// operator token and shares its split. Throws Error(SiteMismatch) when the
// node at site.node_path is not a comparison with site.op.
LabeledExample mutate(const MethodUnit& method, const MutationSite& site);

// Number of mutants kept for a split with `candidates` candidate methods at
// ratio r: all of them for r = 1, round(candidates / r) otherwise.
std::size_t mutant_sample_count(std::size_t candidates, std::uint32_t ratio);
std::size_t expected_dataset_size(std::size_t candidates, std::uint32_t ratio);

// For every method with at least one candidate site, picks one site uniformly
// at random (seeded) and emits the original plus, subject to per-split ratio
// sampling, the mutant. Origin and mutant always share a split. Methods
// without candidates are excluded. Throws Error(NoCandidates) when no method
// has a site.
std::vector<LabeledExample> build_dataset(const CorpusIndex& corpus, const DatasetSpec& spec);

struct SplitClassCounts {
  std::size_t non_defective = 0;
  std::size_t defective = 0;
  double ratio() const {
    return defective == 0 ? 0.0 : double(non_defective) / double(defective);
  }
};

struct ValidationReport {
  // (a) defective examples whose source differs from the origin by anything
  // other than exactly one operator token
  std::vector<std::string> operator_delta_violations;
  // (b) origin/mutant pairs straddling splits
  std::vector<std::string> split_violations;
  // (c) realized class ratio per split
  std::map<Split, SplitClassCounts> per_split;
  bool valid() const {
    return operator_delta_violations.empty() && split_violations.empty();
  }
};

ValidationReport verify_dataset(const std::vector<LabeledExample>& examples);

// dataset.jsonl: {id, origin_id, project, split, label, source, site|null}.
void write_dataset_jsonl(const std::vector<LabeledExample>& examples,
                         const std::filesystem::path& out);
std::vector<LabeledExample> read_dataset_jsonl(const std::filesystem::path& in);

}  // namespace obo
