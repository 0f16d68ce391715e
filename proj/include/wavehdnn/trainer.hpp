#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "wavehdnn/checkpoint.hpp"
#include "wavehdnn/data.hpp"
#include "wavehdnn/diffcore.hpp"
#include "wavehdnn/metrics.hpp"
#include "wavehdnn/model.hpp"
#include "wavehdnn/objectives.hpp"
#include "wavehdnn/rng.hpp"

namespace wavehdnn::trainer {

struct TrainConfig {
  model::ModelKind model = model::ModelKind::wavehdnn;
  double lr = 1e-3;
  Index batch_size = 1024;
  Index max_epochs = 300;
  Index patience = 10;
  Index eval_every = 1;
  double lambda_cl = 0.1;
  double lambda_reg = 1e-4;
  double tau = 0.2;
  Index layers = 3;
  Index dim = 64;
  double wavelet_scale = 1.0;
  std::string wavelet_mode = "auto";
  int chebyshev_order = 10;
  Index dense_limit = 4096;
  objectives::Negatives contrastive_negatives = objectives::Negatives::batch;
  std::uint64_t seed = 0;
  model::Ablation ablation = model::Ablation::full;

  /// Throws ConfigError on any out-of-range field.
  void validate() const;
  model::ModelConfig model_config() const;
  objectives::LossWeights loss_weights() const;
};

struct Triple {
  Index user;
  Index pos;
  Index neg;
  bool operator==(const Triple&) const = default;
};

/// One (user, pos, neg) triple per train interaction with neg drawn uniformly
/// from the user's non-interacted items (rejection sampling, 100 tries, then a
/// scan of the complement), shuffled. Users owning every item are skipped.
std::vector<Triple> sample_epoch(const data::InteractionDataset& ds, Rng& rng);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

/// Bias-corrected Adam over the trainable entries of `params`. Throws
/// NumericError naming the tensor if any gradient is non-finite; parameters are
/// left untouched in that case.
void adam_step(const std::vector<ad::Parameter*>& params, AdamState& state, double lr);

/// Forward pass and total loss of one mini-batch. Contrastive terms run only
/// when both channels are active; their id batches are the unique users and
/// the unique positive items of the batch.
objectives::TotalLoss batch_loss(ad::Tape& tape, model::Recommender& model,
                                 const std::vector<Triple>& batch, const TrainConfig& config);

struct EpochLog {
  Index epoch = 0;
  objectives::LossBreakdown loss;
  std::optional<double> val_recall20;
  /// Mean per-batch gradient L2 norm of every trainable parameter.
  std::map<std::string, double> grad_norms;
};

struct FitResult {
  Checkpoint best;
  std::vector<EpochLog> log;
  Index best_epoch = 0;  // 0 = initialization
  std::optional<double> best_val_recall20;
  bool aborted = false;
  std::string abort_reason;
};

/// Mini-batch training with early stopping on validation Recall@20. When the
/// dataset has no validation users, the final epoch's state is returned.
FitResult fit(const data::InteractionDataset& ds, const TrainConfig& config,
              const std::function<void(const EpochLog&)>& on_epoch = {});

/// One JSON object per line: epoch, bpr, cl_u, cl_i, reg, total, val_recall@20, grad_norms.
std::string log_line(const EpochLog& entry);

}  // namespace wavehdnn::trainer
