#include "ltrsel/ltr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ltrsel {

std::vector<std::size_t> ranking_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  return order;
}

double dcg_at_k(const std::vector<int>& labels_in_rank_order, int k) {
  double dcg = 0.0;
  const std::size_t top =
      std::min<std::size_t>(labels_in_rank_order.size(), static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < top; ++i) {
    const double gain = std::exp2(labels_in_rank_order[i]) - 1.0;
    dcg += gain / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg;
}

double ndcg_at_k(const std::vector<double>& scores, const std::vector<int>& labels,
                 int k) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("ndcg: scores/labels length mismatch");
  if (k < 1) throw std::invalid_argument("ndcg: cutoff must be >= 1");
  if (labels.empty()) throw std::invalid_argument("ndcg: empty query");

  std::vector<int> predicted(labels.size());
  const auto order = ranking_order(scores);
  for (std::size_t i = 0; i < order.size(); ++i) predicted[i] = labels[order[i]];

  std::vector<int> ideal = labels;
  std::sort(ideal.begin(), ideal.end(), std::greater<int>());

  const double idcg = dcg_at_k(ideal, k);
  if (idcg == 0.0) return 1.0;
  return dcg_at_k(predicted, k) / idcg;
}

}  // namespace ltrsel
