#include "wavehdnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include "json.hpp"

#include "wavehdnn/errors.hpp"

namespace wavehdnn::metrics {
namespace {

std::vector<std::vector<Index>> merged(const std::vector<std::vector<Index>>& a,
                                       const std::vector<std::vector<Index>>& b) {
  std::vector<std::vector<Index>> out(a.size());
  for (std::size_t u = 0; u < a.size(); ++u) {
    std::merge(a[u].begin(), a[u].end(), b[u].begin(), b[u].end(), std::back_inserter(out[u]));
    out[u].erase(std::unique(out[u].begin(), out[u].end()), out[u].end());
  }
  return out;
}

void check_tables(const Matrix& users, const Matrix& items, std::size_t relevant, std::size_t mask) {
  WAVEHDNN_REQUIRE(users.cols() == items.cols(), "evaluate: embedding dimensions differ");
  WAVEHDNN_REQUIRE(relevant == static_cast<std::size_t>(users.rows()) &&
                       mask == static_cast<std::size_t>(users.rows()),
                   "evaluate: per-user lists do not match the user table");
}

MetricsReport average(std::vector<std::map<int, MetricValues>> per_user, Index excluded,
                      const std::vector<int>& ks) {
  MetricsReport r;
  r.num_evaluated_users = static_cast<Index>(per_user.size());
  r.num_excluded_users = excluded;
  if (per_user.empty()) return r;
  for (int k : ks) {
    MetricValues sum;
    for (const auto& m : per_user) {
      sum.recall += m.at(k).recall;
      sum.ndcg += m.at(k).ndcg;
    }
    sum.recall /= static_cast<double>(per_user.size());
    sum.ndcg /= static_cast<double>(per_user.size());
    r.at_k[k] = sum;
  }
  return r;
}

}  // namespace

std::string to_string(Split s) { return s == Split::val ? "val" : "test"; }

Split parse_split(const std::string& s) {
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw ConfigError("unknown split '" + s + "' (expected val | test)");
}

std::vector<Index> rank_items(const Vector& scores, const std::vector<Index>& mask, Index k) {
  const Index n = scores.size();
  std::vector<Index> candidates;
  candidates.reserve(static_cast<std::size_t>(n));
  auto m = mask.begin();
  for (Index i = 0; i < n; ++i) {
    while (m != mask.end() && *m < i) ++m;
    if (m != mask.end() && *m == i) continue;
    candidates.push_back(i);
  }
  WAVEHDNN_REQUIRE(k >= 0 && k <= static_cast<Index>(candidates.size()),
                   "rank_items: K=" + std::to_string(k) + " exceeds " +
                       std::to_string(candidates.size()) + " unmasked items");
  auto better = [&scores](Index a, Index b) {
    return scores(a) != scores(b) ? scores(a) > scores(b) : a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + k, candidates.end(), better);
  candidates.resize(static_cast<std::size_t>(k));
  return candidates;
}

double recall_at_k(const std::vector<Index>& topk, const std::vector<Index>& relevant) {
  WAVEHDNN_REQUIRE(!relevant.empty(), "recall_at_k: no relevant items");
  Index hits = 0;
  for (Index id : topk) hits += std::binary_search(relevant.begin(), relevant.end(), id) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double ndcg_at_k(const std::vector<Index>& topk, const std::vector<Index>& relevant, Index k) {
  WAVEHDNN_REQUIRE(!relevant.empty(), "ndcg_at_k: no relevant items");
  double dcg = 0.0;
  const Index depth = std::min<Index>(k, static_cast<Index>(topk.size()));
  for (Index r = 0; r < depth; ++r) {
    if (std::binary_search(relevant.begin(), relevant.end(), topk[r])) {
      dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
  }
  double idcg = 0.0;
  const Index ideal = std::min<Index>(k, static_cast<Index>(relevant.size()));
  for (Index r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / idcg;
}

MetricsReport evaluate_sets(const Matrix& user_table, const Matrix& item_table,
                            const std::vector<std::vector<Index>>& relevant,
                            const std::vector<std::vector<Index>>& mask,
                            const std::vector<int>& ks) {
  check_tables(user_table, item_table, relevant.size(), mask.size());
  const int max_k = ks.empty() ? 0 : *std::max_element(ks.begin(), ks.end());
  std::vector<std::map<int, MetricValues>> per_user;
  Index excluded = 0;
  for (Index u = 0; u < user_table.rows(); ++u) {
    const auto& rel = relevant[u];
    if (rel.empty()) {
      ++excluded;
      continue;
    }
    const Vector scores = item_table * user_table.row(u).transpose();
    const Index available = item_table.rows() - static_cast<Index>(mask[u].size());
    const auto top = rank_items(scores, mask[u], std::min<Index>(max_k, available));
    std::map<int, MetricValues> values;
    for (int k : ks) {
      const std::vector<Index> prefix(top.begin(), top.begin() + std::min<Index>(k, static_cast<Index>(top.size())));
      values[k] = {recall_at_k(prefix, rel), ndcg_at_k(prefix, rel, k)};
    }
    per_user.push_back(std::move(values));
  }
  return average(std::move(per_user), excluded, ks);
}

MetricsReport evaluate(const Matrix& user_table, const Matrix& item_table,
                       const data::InteractionDataset& ds, Split split, const std::vector<int>& ks) {
  WAVEHDNN_REQUIRE(user_table.rows() == ds.num_users && item_table.rows() == ds.num_items,
                   "evaluate: embedding tables do not match the dataset");
  const auto val = ds.items_of(ds.val);
  MetricsReport r;
  if (split == Split::val) {
    r = evaluate_sets(user_table, item_table, val, ds.train_items_of, ks);
  } else {
    r = evaluate_sets(user_table, item_table, ds.items_of(ds.test), merged(ds.train_items_of, val), ks);
  }
  r.split = to_string(split);
  return r;
}

MetricsReport oracle_evaluate_sets(const Matrix& user_table, const Matrix& item_table,
                                   const std::vector<std::vector<Index>>& relevant,
                                   const std::vector<std::vector<Index>>& mask,
                                   const std::vector<int>& ks) {
  check_tables(user_table, item_table, relevant.size(), mask.size());
  std::vector<std::map<int, MetricValues>> per_user;
  Index excluded = 0;
  for (Index u = 0; u < user_table.rows(); ++u) {
    if (relevant[u].empty()) {
      ++excluded;
      continue;
    }
    const std::set<Index> masked(mask[u].begin(), mask[u].end());
    const std::set<Index> rel(relevant[u].begin(), relevant[u].end());
    std::vector<std::pair<double, Index>> ranked;
    for (Index i = 0; i < item_table.rows(); ++i) {
      if (masked.count(i)) continue;
      ranked.emplace_back(-item_table.row(i).dot(user_table.row(u)), i);
    }
    std::sort(ranked.begin(), ranked.end());
    std::map<int, MetricValues> values;
    for (int k : ks) {
      double hits = 0.0, dcg = 0.0, idcg = 0.0;
      for (std::size_t pos = 0; pos < ranked.size() && pos < static_cast<std::size_t>(k); ++pos) {
        if (rel.count(ranked[pos].second)) {
          hits += 1.0;
          dcg += std::log(2.0) / std::log(static_cast<double>(pos) + 2.0);
        }
      }
      for (std::size_t pos = 0; pos < rel.size() && pos < static_cast<std::size_t>(k); ++pos) {
        idcg += std::log(2.0) / std::log(static_cast<double>(pos) + 2.0);
      }
      values[k] = {hits / static_cast<double>(rel.size()), dcg / idcg};
    }
    per_user.push_back(std::move(values));
  }
  return average(std::move(per_user), excluded, ks);
}

MetricsReport oracle_evaluate(const Matrix& user_table, const Matrix& item_table,
                              const data::InteractionDataset& ds, Split split,
                              const std::vector<int>& ks) {
  std::vector<std::vector<Index>> relevant(static_cast<std::size_t>(ds.num_users));
  std::vector<std::vector<Index>> mask(static_cast<std::size_t>(ds.num_users));
  for (const auto& [u, i] : split == Split::val ? ds.val : ds.test) relevant[u].push_back(i);
  for (const auto& [u, i] : ds.train) mask[u].push_back(i);
  if (split == Split::test) {
    for (const auto& [u, i] : ds.val) mask[u].push_back(i);
  }
  for (auto& v : relevant) std::sort(v.begin(), v.end());
  for (auto& v : mask) std::sort(v.begin(), v.end());
  MetricsReport r = oracle_evaluate_sets(user_table, item_table, relevant, mask, ks);
  r.split = to_string(split);
  return r;
}

std::string to_json(const MetricsReport& report, int indent) {
  nlohmann::ordered_json j;
  j["split"] = report.split;
  j["seed"] = report.seed;
  j["users"] = report.num_evaluated_users;
  j["excluded_users"] = report.num_excluded_users;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.at_k) {
    m["recall@" + std::to_string(k)] = v.recall;
    m["ndcg@" + std::to_string(k)] = v.ndcg;
  }
  j["metrics"] = m;
  return j.dump(indent);
}

MetricsReport from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  MetricsReport r;
  r.split = j.at("split").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.num_evaluated_users = j.at("users").get<Index>();
  r.num_excluded_users = j.value("excluded_users", Index{0});
  for (const auto& [key, value] : j.at("metrics").items()) {
    const auto at = key.find('@');
    if (at == std::string::npos) continue;
    const int k = std::stoi(key.substr(at + 1));
    if (key.compare(0, at, "recall") == 0) r.at_k[k].recall = value.get<double>();
    if (key.compare(0, at, "ndcg") == 0) r.at_k[k].ndcg = value.get<double>();
  }
  return r;
}

}  // namespace wavehdnn::metrics
