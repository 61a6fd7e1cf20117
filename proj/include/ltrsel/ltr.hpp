#pragma once

#include <map>
#include <vector>

#include "ltrsel/data.hpp"

namespace ltrsel {

// Indices sorted by score descending; exact ties keep ascending index order.
std::vector<std::size_t> ranking_order(const std::vector<double>& scores);

// DCG with gains 2^y - 1 and discount 1/log2(rank + 1), rank 1-based.
double dcg_at_k(const std::vector<int>& labels_in_rank_order, int k);

// NDCG of the score-induced order; k > list length truncates naturally.
// Queries whose labels are all zero have no ideal order to miss: returns 1.
double ndcg_at_k(const std::vector<double>& scores, const std::vector<int>& labels,
                 int k);

inline bool has_relevant(const std::vector<int>& labels) {
  for (int y : labels)
    if (y > 0) return true;
  return false;
}

struct EvalReport {
  std::map<int, double> ndcg_mean;                  // cutoff -> mean
  std::map<int, std::vector<double>> per_query;     // only queries with a relevant doc
  std::size_t queries_evaluated = 0;
  std::size_t queries_skipped = 0;  // all-zero labels, excluded from means
};

}  // namespace ltrsel
