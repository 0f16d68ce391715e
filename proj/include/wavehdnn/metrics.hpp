#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wavehdnn/data.hpp"
#include "wavehdnn/types.hpp"

namespace wavehdnn::metrics {

enum class Split { val, test };

std::string to_string(Split s);
Split parse_split(const std::string& s);

struct MetricValues {
  double recall = 0.0;
  double ndcg = 0.0;
  bool operator==(const MetricValues&) const = default;
};

struct MetricsReport {
  std::map<int, MetricValues> at_k;  // empty when no user was evaluated
  Index num_evaluated_users = 0;
  Index num_excluded_users = 0;
  std::string split = "test";
  std::uint64_t seed = 0;
  bool operator==(const MetricsReport&) const = default;
};

inline const std::vector<int> kDefaultKs = {10, 20, 40};

/// Top-k item ids by descending score, excluding `mask` (sorted ids); ties go to
/// the lower id. Throws ContractViolation if k exceeds the unmasked count.
std::vector<Index> rank_items(const Vector& scores, const std::vector<Index>& mask, Index k);

/// |topk & relevant| / |relevant|. `relevant` sorted, non-empty.
double recall_at_k(const std::vector<Index>& topk, const std::vector<Index>& relevant);
/// Binary-relevance NDCG with gain 1/log2(rank+1).
double ndcg_at_k(const std::vector<Index>& topk, const std::vector<Index>& relevant, Index k);

/// Core evaluation over explicit per-user relevant and masked item lists (both
/// sorted). Users with no relevant items are excluded. When fewer than K items
/// are unmasked, the list is truncated to what is available.
MetricsReport evaluate_sets(const Matrix& user_table, const Matrix& item_table,
                            const std::vector<std::vector<Index>>& relevant,
                            const std::vector<std::vector<Index>>& mask,
                            const std::vector<int>& ks = kDefaultKs);

/// Val masks train items; test masks train and val items.
MetricsReport evaluate(const Matrix& user_table, const Matrix& item_table,
                       const data::InteractionDataset& ds, Split split,
                       const std::vector<int>& ks = kDefaultKs);

/// Reference path: full materialization and full sort per user with separately
/// written metric formulas. Exists to cross-check evaluate().
MetricsReport oracle_evaluate_sets(const Matrix& user_table, const Matrix& item_table,
                                   const std::vector<std::vector<Index>>& relevant,
                                   const std::vector<std::vector<Index>>& mask,
                                   const std::vector<int>& ks = kDefaultKs);
MetricsReport oracle_evaluate(const Matrix& user_table, const Matrix& item_table,
                              const data::InteractionDataset& ds, Split split,
                              const std::vector<int>& ks = kDefaultKs);

/// {"split":..., "seed":..., "users":..., "metrics":{"recall@10":..., "ndcg@10":..., ...}}
std::string to_json(const MetricsReport& report, int indent = 2);
MetricsReport from_json(const std::string& text);

}  // namespace wavehdnn::metrics
