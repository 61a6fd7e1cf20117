#include "ltrsel/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ltrsel {

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("svmlight parse error, line " + std::to_string(line_no) +
                           ": " + what);
}

struct RawDoc {
  std::vector<std::pair<std::size_t, double>> feats;  // 0-based index
  int label;
};

}  // namespace

Dataset parse_svmlight(std::istream& in, std::optional<std::size_t> d_override) {
  std::vector<std::int64_t> qid_order;
  std::map<std::int64_t, std::vector<RawDoc>> by_qid;
  std::size_t max_index = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;  // blank line

    int label = 0;
    auto [p1, ec1] = std::from_chars(tok.data(), tok.data() + tok.size(), label);
    if (ec1 != std::errc() || p1 != tok.data() + tok.size())
      parse_fail(line_no, "bad label '" + tok + "'");
    if (label < 0 || label > kMaxLabel)
      parse_fail(line_no, "label " + std::to_string(label) + " outside {0..." +
                              std::to_string(kMaxLabel) + "}");

    if (!(ls >> tok) || tok.rfind("qid:", 0) != 0)
      parse_fail(line_no, "expected qid:<int> after label");
    std::int64_t qid = 0;
    {
      const char* b = tok.data() + 4;
      auto [p, ec] = std::from_chars(b, tok.data() + tok.size(), qid);
      if (ec != std::errc() || p != tok.data() + tok.size())
        parse_fail(line_no, "bad qid '" + tok + "'");
    }

    RawDoc doc;
    doc.label = label;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size())
        parse_fail(line_no, "bad feature pair '" + tok + "'");
      std::size_t idx = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc() || p != tok.data() + colon || idx == 0)
        parse_fail(line_no, "bad feature index in '" + tok + "' (indices are 1-based)");
      double val = 0.0;
      auto [pv, ecv] =
          std::from_chars(tok.data() + colon + 1, tok.data() + tok.size(), val);
      if (ecv != std::errc() || pv != tok.data() + tok.size())
        parse_fail(line_no, "bad feature value in '" + tok + "'");
      doc.feats.emplace_back(idx - 1, val);
      max_index = std::max(max_index, idx);
    }

    auto [it, inserted] = by_qid.try_emplace(qid);
    if (inserted) qid_order.push_back(qid);
    it->second.push_back(std::move(doc));
  }

  if (qid_order.empty()) throw std::runtime_error("svmlight parse error: no queries");

  std::size_t d = d_override.value_or(max_index);
  if (max_index > d)
    throw std::runtime_error("svmlight parse error: feature index " +
                             std::to_string(max_index) + " exceeds width " +
                             std::to_string(d));
  if (d == 0) throw std::runtime_error("svmlight parse error: no features");

  Dataset data;
  data.num_features = d;
  data.groups.reserve(qid_order.size());
  for (std::int64_t qid : qid_order) {
    const auto& docs = by_qid[qid];
    QueryGroup group;
    group.query_id = qid;
    group.features = Tensor({docs.size(), d});
    group.labels.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      group.labels.push_back(docs[i].label);
      for (const auto& [idx, val] : docs[i].feats) group.features.at(i, idx) = val;
    }
    data.groups.push_back(std::move(group));
  }
  return data;
}

Dataset load_svmlight(const std::string& path, std::optional<std::size_t> d_override) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  Dataset d = parse_svmlight(in, d_override);
  return d;
}

namespace {

std::string shortest_repr(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace

void serialize_svmlight(const Dataset& data, std::ostream& out) {
  for (const auto& g : data.groups) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      out << g.labels[i] << " qid:" << g.query_id;
      for (std::size_t j = 0; j < data.num_features; ++j) {
        const double v = g.features.at(i, j);
        if (v != 0.0) out << ' ' << (j + 1) << ':' << shortest_repr(v);
      }
      out << '\n';
    }
  }
}

void transform_log1p(Dataset& data) {
  for (auto& g : data.groups)
    for (double& v : g.features.values)
      v = v >= 0.0 ? std::log1p(v) : -std::log1p(-v);
  data.log1p_applied = true;
}

void Standardizer::fit(const Dataset& train) {
  const std::size_t d = train.num_features;
  mean.assign(d, 0.0);
  scale.assign(d, 1.0);
  const double n = static_cast<double>(train.total_docs());
  if (n == 0) return;
  for (const auto& g : train.groups)
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) mean[j] += g.features.at(i, j);
  for (double& m : mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (const auto& g : train.groups)
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) {
        const double dlt = g.features.at(i, j) - mean[j];
        var[j] += dlt * dlt;
      }
  for (std::size_t j = 0; j < d; ++j)
    scale[j] = var[j] > 0.0 ? 1.0 / std::sqrt(var[j] / n) : 1.0;
}

void Standardizer::apply(Dataset& data) const {
  if (mean.size() != data.num_features)
    throw std::invalid_argument("standardizer: width mismatch");
  for (auto& g : data.groups)
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < data.num_features; ++j)
        g.features.at(i, j) = (g.features.at(i, j) - mean[j]) * scale[j];
}

FeatureCostTable load_cost_table(const std::string& path, std::size_t d,
                                 std::size_t* missing_defaulted) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open cost table: " + path);
  FeatureCostTable table;
  table.cost.assign(d, -1.0);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.rfind("feature_index", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error("cost table line " + std::to_string(line_no) +
                               ": expected `feature_index,cost`");
    std::size_t idx = 0;
    auto [p, ec] = std::from_chars(line.data(), line.data() + comma, idx);
    if (ec != std::errc() || idx == 0 || idx > d)
      throw std::runtime_error("cost table line " + std::to_string(line_no) +
                               ": bad feature index");
    double c = 0.0;
    auto [pv, ecv] = std::from_chars(line.data() + comma + 1,
                                     line.data() + line.size(), c);
    if (ecv != std::errc() || c < 0.0)
      throw std::runtime_error("cost table line " + std::to_string(line_no) +
                               ": bad cost value");
    table.cost[idx - 1] = c;
  }
  std::size_t missing = 0;
  for (double& c : table.cost)
    if (c < 0.0) {
      c = 1.0;
      ++missing;
    }
  if (missing_defaulted) *missing_defaulted = missing;
  return table;
}

double cost_of_selection(const std::vector<std::uint8_t>& mask,
                         const FeatureCostTable& costs) {
  if (mask.size() != costs.cost.size())
    throw std::invalid_argument("cost_of_selection: mask length " +
                                std::to_string(mask.size()) + " vs cost table " +
                                std::to_string(costs.cost.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) total += costs.cost[i];
  return total;
}

namespace {

Dataset synth_split(const SyntheticSpec& spec, const std::vector<std::size_t>& informative,
                    const std::vector<double>& weights, std::size_t pair_a,
                    std::size_t pair_b, double pair_weight, std::size_t queries,
                    const std::string& split, std::int64_t qid_base, Rng& rng) {
  Dataset data;
  data.num_features = spec.d;
  data.split = split;
  for (std::size_t q = 0; q < queries; ++q) {
    QueryGroup g;
    g.query_id = qid_base + static_cast<std::int64_t>(q);
    const std::size_t n = spec.docs_per_query;
    g.features = Tensor({n, spec.d});
    for (double& v : g.features.values) v = rng.normal();
    std::vector<double> hidden(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double h = 0.0;
      for (std::size_t t = 0; t < informative.size(); ++t)
        h += weights[t] * g.features.at(i, informative[t]);
      h += pair_weight * g.features.at(i, pair_a) * g.features.at(i, pair_b);
      hidden[i] = h + spec.noise * rng.normal();
    }
    // Quantile binning: rank ascending, label = floor(rank * levels / n).
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (hidden[a] != hidden[b]) return hidden[a] < hidden[b];
      return a < b;
    });
    g.labels.assign(n, 0);
    for (std::size_t rank = 0; rank < n; ++rank) {
      int label = static_cast<int>((rank * static_cast<std::size_t>(spec.label_levels)) / n);
      g.labels[order[rank]] = std::min(label, kMaxLabel);
    }
    data.groups.push_back(std::move(g));
  }
  return data;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.s < 1 || spec.s > spec.d)
    throw std::invalid_argument("synthetic: need 1 <= s <= d");
  if (spec.label_levels < 1 || spec.label_levels > kMaxLabel + 1)
    throw std::invalid_argument("synthetic: label_levels must be in {1..5}");
  if (spec.docs_per_query < 1) throw std::invalid_argument("synthetic: empty queries");

  Rng master(spec.seed);
  Rng struct_rng = master.fork(1);

  std::vector<std::size_t> all(spec.d);
  std::iota(all.begin(), all.end(), 0);
  struct_rng.shuffle(all);
  std::vector<std::size_t> informative(all.begin(), all.begin() + spec.s);
  std::sort(informative.begin(), informative.end());

  std::vector<double> weights(spec.s);
  for (double& w : weights) {
    w = struct_rng.uniform(0.5, 1.5);
    if (struct_rng.uniform() < 0.5) w = -w;
  }
  const std::size_t pair_a = informative[0];
  const std::size_t pair_b = informative[spec.s > 1 ? 1 : 0];
  double pair_weight = struct_rng.uniform(0.5, 1.5);

  SyntheticData out;
  out.informative = informative;
  Rng train_rng = master.fork(2), valid_rng = master.fork(3), test_rng = master.fork(4);
  out.train = synth_split(spec, informative, weights, pair_a, pair_b, pair_weight,
                          spec.train_queries, "train", 1, train_rng);
  out.valid = synth_split(spec, informative, weights, pair_a, pair_b, pair_weight,
                          spec.valid_queries, "valid", 1000000, valid_rng);
  out.test = synth_split(spec, informative, weights, pair_a, pair_b, pair_weight,
                         spec.test_queries, "test", 2000000, test_rng);
  return out;
}

}  // namespace ltrsel
