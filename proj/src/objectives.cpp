#include "wavehdnn/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "wavehdnn/errors.hpp"

namespace wavehdnn::objectives {

std::string to_string(Negatives n) { return n == Negatives::batch ? "batch" : "full"; }

Negatives parse_negatives(const std::string& s) {
  if (s == "batch") return Negatives::batch;
  if (s == "full") return Negatives::full;
  throw ConfigError("unknown contrastive_negatives '" + s + "' (expected batch | full)");
}

ad::Var bpr_loss(const ad::Var& pos_scores, const ad::Var& neg_scores) {
  WAVEHDNN_REQUIRE(pos_scores.rows() >= 1 && pos_scores.cols() == 1,
                   "bpr_loss: scores must be a non-empty column");
  WAVEHDNN_REQUIRE(pos_scores.rows() == neg_scores.rows() && neg_scores.cols() == 1,
                   "bpr_loss: positive and negative batches differ in length");
  return ad::mean_all(ad::softplus(ad::subtract(neg_scores, pos_scores)));
}

ad::Var infonce_cross_view(const std::vector<ad::Var>& z_layers,
                           const std::vector<ad::Var>& gamma_layers,
                           const std::vector<Index>& batch_ids, double tau, Negatives negatives) {
  if (!(tau > 0.0)) throw ConfigError("contrastive temperature tau must be > 0");
  WAVEHDNN_REQUIRE(!batch_ids.empty(), "infonce_cross_view: empty batch");
  WAVEHDNN_REQUIRE(!z_layers.empty() && z_layers.size() == gamma_layers.size(),
                   "infonce_cross_view: channels must provide the same number of layers");
  std::vector<Index> sorted = batch_ids;
  std::sort(sorted.begin(), sorted.end());
  WAVEHDNN_REQUIRE(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
                   "infonce_cross_view: duplicate ids in batch");

  std::vector<ad::Var> per_layer;
  for (std::size_t l = 0; l < z_layers.size(); ++l) {
    const ad::Var z = ad::row_l2_normalize(ad::gather_rows(z_layers[l], batch_ids));
    const ad::Var g_all = ad::row_l2_normalize(gamma_layers[l]);
    const ad::Var g_batch = ad::gather_rows(g_all, batch_ids);
    const ad::Var candidates = negatives == Negatives::batch ? g_batch : g_all;
    const ad::Var logits = ad::scale(ad::matmul(z, ad::transpose(candidates)), 1.0 / tau);
    const ad::Var positive = ad::scale(ad::row_sum(ad::multiply(z, g_batch)), 1.0 / tau);
    per_layer.push_back(ad::mean_all(ad::subtract(ad::logsumexp_rows(logits), positive)));
  }
  ad::Var acc = per_layer.front();
  for (std::size_t l = 1; l < per_layer.size(); ++l) acc = ad::add(acc, per_layer[l]);
  return ad::scale(acc, 1.0 / static_cast<double>(per_layer.size()));
}

ad::Var embedding_l2(const ad::Var& user_embed, const ad::Var& item_embed) {
  return ad::add(ad::sum_all(ad::multiply(user_embed, user_embed)),
                 ad::sum_all(ad::multiply(item_embed, item_embed)));
}

TotalLoss total_loss(const ad::Var& bpr, const std::optional<ad::Var>& cl_user,
                     const std::optional<ad::Var>& cl_item, const ad::Var& reg,
                     const LossWeights& weights) {
  if (weights.lambda_cl < 0.0 || weights.lambda_reg < 0.0) {
    throw ConfigError("loss weights must be >= 0");
  }
  TotalLoss out;
  auto& b = out.breakdown;
  b.weights = weights;
  b.bpr = bpr.value()(0, 0);
  b.contrastive_user = cl_user ? cl_user->value()(0, 0) : 0.0;
  b.contrastive_item = cl_item ? cl_item->value()(0, 0) : 0.0;
  b.reg = reg.value()(0, 0);
  const std::pair<const char*, double> parts[] = {
      {"bpr", b.bpr}, {"contrastive_user", b.contrastive_user},
      {"contrastive_item", b.contrastive_item}, {"reg", b.reg}};
  for (const auto& [name, v] : parts) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss component: ") + name);
  }
  ad::Var total = bpr;
  if (cl_user && weights.lambda_cl != 0.0) total = ad::add(total, ad::scale(*cl_user, weights.lambda_cl));
  if (cl_item && weights.lambda_cl != 0.0) total = ad::add(total, ad::scale(*cl_item, weights.lambda_cl));
  if (weights.lambda_reg != 0.0) total = ad::add(total, ad::scale(reg, weights.lambda_reg));
  out.total = total;
  b.total = total.value()(0, 0);
  return out;
}

}  // namespace wavehdnn::objectives
