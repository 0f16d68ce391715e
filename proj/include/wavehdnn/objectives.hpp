#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wavehdnn/diffcore.hpp"
#include "wavehdnn/types.hpp"

namespace wavehdnn::objectives {

enum class Negatives { batch, full };

std::string to_string(Negatives n);
Negatives parse_negatives(const std::string& s);

struct LossWeights {
  double lambda_cl = 0.1;
  double lambda_reg = 1e-4;
  double tau = 0.2;
};

struct LossBreakdown {
  double bpr = 0.0;
  double contrastive_user = 0.0;
  double contrastive_item = 0.0;
  double reg = 0.0;
  double total = 0.0;
  LossWeights weights;
};

/// mean_k -log sigmoid(pos_k - neg_k), computed as softplus(neg - pos).
ad::Var bpr_loss(const ad::Var& pos_scores, const ad::Var& neg_scores);

/// Layer-wise cross-view InfoNCE with cosine similarity. For every layer l and
/// id i in `batch_ids`, the positive is (z_l[i], gamma_l[i]); the candidates are
/// gamma_l rows of `batch_ids` (Negatives::batch) or of every entity
/// (Negatives::full). Returns the mean over (i, l) of -log softmax.
ad::Var infonce_cross_view(const std::vector<ad::Var>& z_layers,
                           const std::vector<ad::Var>& gamma_layers,
                           const std::vector<Index>& batch_ids, double tau,
                           Negatives negatives = Negatives::batch);

/// Sum of squared entries of the two embedding tables.
ad::Var embedding_l2(const ad::Var& user_embed, const ad::Var& item_embed);

struct TotalLoss {
  ad::Var total;
  LossBreakdown breakdown;
};

/// total = bpr + lambda_cl (cl_user + cl_item) + lambda_reg reg. Absent
/// contrastive terms count as zero. Throws NumericError naming the first
/// non-finite component.
TotalLoss total_loss(const ad::Var& bpr, const std::optional<ad::Var>& cl_user,
                     const std::optional<ad::Var>& cl_item, const ad::Var& reg,
                     const LossWeights& weights);

}  // namespace wavehdnn::objectives
