#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ltrsel/rng.hpp"
#include "ltrsel/tensor.hpp"

namespace ltrsel {

constexpr int kMaxLabel = 4;

struct QueryGroup {
  std::int64_t query_id = 0;
  Tensor features;  // [n_docs x d]
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct Dataset {
  std::vector<QueryGroup> groups;
  std::size_t num_features = 0;
  std::string split;
  bool log1p_applied = false;

  std::size_t total_docs() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.size();
    return n;
  }
};

// SVMLight/LETOR lines: `<label> qid:<int> <idx>:<real> ... [# comment]`,
// 1-based feature indices, absent indices read as 0. Groups keep file order
// (by first appearance of each qid). Throws std::runtime_error with the line
// number on malformed input.
Dataset parse_svmlight(std::istream& in, std::optional<std::size_t> d_override = {});
Dataset load_svmlight(const std::string& path, std::optional<std::size_t> d_override = {});
void serialize_svmlight(const Dataset& data, std::ostream& out);

// v -> sign(v) * log(1 + |v|), elementwise.
void transform_log1p(Dataset& data);

// Per-feature zero-mean/unit-variance transform fitted on the train split.
struct Standardizer {
  std::vector<double> mean, scale;
  void fit(const Dataset& train);
  void apply(Dataset& data) const;
};

struct FeatureCostTable {
  std::vector<double> cost;
};

// Two-column CSV `feature_index,cost` (1-based); features missing from the
// file get cost 1.0 (counted in missing_defaulted).
FeatureCostTable load_cost_table(const std::string& path, std::size_t d,
                                 std::size_t* missing_defaulted = nullptr);

double cost_of_selection(const std::vector<std::uint8_t>& mask,
                         const FeatureCostTable& costs);

struct SyntheticSpec {
  std::size_t d = 50;
  std::size_t s = 5;
  std::size_t train_queries = 200;
  std::size_t valid_queries = 40;
  std::size_t test_queries = 40;
  std::size_t docs_per_query = 20;
  int label_levels = 5;
  double noise = 0.1;
  std::uint64_t seed = 1;
};

struct SyntheticData {
  Dataset train, valid, test;
  std::vector<std::size_t> informative;  // ground-truth feature set, ascending
};

// Features i.i.d. standard normal; a hidden score is a fixed random weighted
// sum of the s informative features plus one pairwise product and Gaussian
// noise; labels are per-query quantile bins of the hidden score.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace ltrsel
