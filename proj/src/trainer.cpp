#include "wavehdnn/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "wavehdnn/errors.hpp"
#include "wavehdnn/log.hpp"

namespace wavehdnn::trainer {
namespace {

std::vector<Index> unique_sorted(std::vector<Index> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid config: " + what); };
  if (!(lr > 0.0)) fail("lr must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_epochs < 0) fail("max_epochs must be >= 0");
  if (patience < 1) fail("patience must be >= 1");
  if (eval_every < 1) fail("eval_every must be >= 1");
  if (lambda_cl < 0.0) fail("lambda_cl must be >= 0");
  if (lambda_reg < 0.0) fail("lambda_reg must be >= 0");
  if (!(tau > 0.0)) fail("tau must be > 0");
  if (layers < 0) fail("layers must be >= 0");
  if (dim < 1) fail("dim must be >= 1");
  if (wavelet_scale < 0.0) fail("wavelet_scale must be >= 0");
  if (chebyshev_order < 1) fail("chebyshev_order must be >= 1");
  if (dense_limit < 1) fail("dense_limit must be >= 1");
  if (wavelet_mode != "auto" && wavelet_mode != "exact" && wavelet_mode != "chebyshev") {
    fail("wavelet_mode must be auto | exact | chebyshev");
  }
}

model::ModelConfig TrainConfig::model_config() const {
  model::ModelConfig m;
  m.kind = model;
  m.dim = dim;
  m.layers = layers;
  m.ablation = ablation;
  m.wavelet.scale = wavelet_scale;
  m.wavelet.mode = wavelet_mode;
  m.wavelet.chebyshev_order = chebyshev_order;
  m.wavelet.dense_limit = dense_limit;
  m.seed = seed;
  return m;
}

objectives::LossWeights TrainConfig::loss_weights() const { return {lambda_cl, lambda_reg, tau}; }

std::vector<Triple> sample_epoch(const data::InteractionDataset& ds, Rng& rng) {
  WAVEHDNN_REQUIRE(!ds.train.empty(), "sample_epoch: empty train split");
  std::vector<Triple> triples;
  triples.reserve(ds.train.size());
  Index skipped = 0;
  for (const auto& [u, pos] : ds.train) {
    const auto& owned = ds.train_items_of[u];
    const Index free = ds.num_items - static_cast<Index>(owned.size());
    if (free <= 0) {
      ++skipped;
      continue;
    }
    Index neg = -1;
    for (int attempt = 0; attempt < 100 && neg < 0; ++attempt) {
      const auto candidate = static_cast<Index>(rng.below(static_cast<std::uint64_t>(ds.num_items)));
      if (!std::binary_search(owned.begin(), owned.end(), candidate)) neg = candidate;
    }
    if (neg < 0) {
      Index target = static_cast<Index>(rng.below(static_cast<std::uint64_t>(free)));
      auto it = owned.begin();
      for (Index i = 0; i < ds.num_items; ++i) {
        while (it != owned.end() && *it < i) ++it;
        if (it != owned.end() && *it == i) continue;
        if (target-- == 0) {
          neg = i;
          break;
        }
      }
    }
    triples.push_back({u, pos, neg});
  }
  if (skipped > 0) {
    log::warn("sample_epoch: skipped " + std::to_string(skipped) +
              " triples of users who interacted with every item");
  }
  rng.shuffle(triples);
  return triples;
}

void adam_step(const std::vector<ad::Parameter*>& params, AdamState& state, double lr) {
  for (const ad::Parameter* p : params) {
    if (p->requires_grad && !p->grad.allFinite()) {
      throw NumericError("non-finite gradient in " + p->name);
    }
  }
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const ad::Parameter* p : params) {
      state.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    ad::Parameter& p = *params[k];
    if (!p.requires_grad) continue;
    Matrix& m = state.m[k];
    Matrix& v = state.v[k];
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + state.eps);
  }
}

objectives::TotalLoss batch_loss(ad::Tape& tape, model::Recommender& model,
                                 const std::vector<Triple>& batch, const TrainConfig& config) {
  WAVEHDNN_REQUIRE(!batch.empty(), "batch_loss: empty batch");
  const auto weights = config.loss_weights();
  std::vector<Index> users, pos, neg;
  for (const Triple& t : batch) {
    users.push_back(t.user);
    pos.push_back(t.pos);
    neg.push_back(t.neg);
  }
  const model::ForwardOutput out = model.forward(tape);
  const ad::Var eu = ad::gather_rows(out.fused_users, users);
  const ad::Var pos_scores = ad::row_sum(ad::multiply(eu, ad::gather_rows(out.fused_items, pos)));
  const ad::Var neg_scores = ad::row_sum(ad::multiply(eu, ad::gather_rows(out.fused_items, neg)));
  const ad::Var bpr = objectives::bpr_loss(pos_scores, neg_scores);
  std::optional<ad::Var> cl_user, cl_item;
  if (out.het && out.wave && weights.lambda_cl > 0.0) {
    cl_user = objectives::infonce_cross_view(out.het->user_layers, out.wave->user_layers,
                                             unique_sorted(users), weights.tau,
                                             config.contrastive_negatives);
    cl_item = objectives::infonce_cross_view(out.het->item_layers, out.wave->item_layers,
                                             unique_sorted(pos), weights.tau,
                                             config.contrastive_negatives);
  }
  const ad::Var reg = objectives::embedding_l2(out.user_embed, out.item_embed);
  return objectives::total_loss(bpr, cl_user, cl_item, reg, weights);
}

FitResult fit(const data::InteractionDataset& ds, const TrainConfig& config,
              const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  auto model = model::make_model(ds, config.model_config());
  const auto params = model->parameters();
  std::vector<ad::Parameter*> trainable;
  for (ad::Parameter* p : params) {
    if (p->requires_grad) trainable.push_back(p);
  }
  const auto weights = config.loss_weights();
  const bool has_val = !ds.val.empty();

  FitResult result;
  {
    const auto [eu, ei] = model->infer();
    result.best = model->checkpoint(eu, ei);
  }
  AdamState adam;
  Index stale = 0;

  for (Index epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
    const auto triples = sample_epoch(ds, rng);
    EpochLog entry;
    entry.epoch = epoch;
    entry.loss.weights = weights;
    Index batches = 0;
    try {
      for (std::size_t start = 0; start < triples.size(); start += static_cast<std::size_t>(config.batch_size)) {
        const std::size_t end = std::min(triples.size(), start + static_cast<std::size_t>(config.batch_size));
        const std::vector<Triple> batch(triples.begin() + static_cast<std::ptrdiff_t>(start),
                                        triples.begin() + static_cast<std::ptrdiff_t>(end));
        for (ad::Parameter* p : params) p->zero_grad();
        ad::Tape tape;
        const auto loss = batch_loss(tape, *model, batch, config);
        tape.backward(loss.total);
        adam_step(trainable, adam, config.lr);

        entry.loss.bpr += loss.breakdown.bpr;
        entry.loss.contrastive_user += loss.breakdown.contrastive_user;
        entry.loss.contrastive_item += loss.breakdown.contrastive_item;
        entry.loss.reg += loss.breakdown.reg;
        entry.loss.total += loss.breakdown.total;
        for (const ad::Parameter* p : trainable) entry.grad_norms[p->name] += p->grad.norm();
        ++batches;
      }
    } catch (const NumericError& e) {
      result.aborted = true;
      result.abort_reason = "epoch " + std::to_string(epoch) + ": " + e.what();
      log::error("training aborted: " + result.abort_reason);
      break;
    }
    if (batches > 0) {
      const double n = static_cast<double>(batches);
      entry.loss.bpr /= n;
      entry.loss.contrastive_user /= n;
      entry.loss.contrastive_item /= n;
      entry.loss.reg /= n;
      entry.loss.total /= n;
      for (auto& [name, norm] : entry.grad_norms) norm /= n;
    }

    bool stop = false;
    if (has_val && epoch % config.eval_every == 0) {
      const auto [eu, ei] = model->infer();
      const auto report = metrics::evaluate(eu, ei, ds, metrics::Split::val, {20});
      const double recall = report.at_k.count(20) ? report.at_k.at(20).recall : 0.0;
      entry.val_recall20 = recall;
      if (!result.best_val_recall20 || recall > *result.best_val_recall20) {
        result.best_val_recall20 = recall;
        result.best_epoch = epoch;
        result.best = model->checkpoint(eu, ei);
        stale = 0;
      } else if (++stale >= config.patience) {
        stop = true;
      }
    } else if (!has_val) {
      const auto [eu, ei] = model->infer();
      result.best = model->checkpoint(eu, ei);
      result.best_epoch = epoch;
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (stop) break;
  }
  return result;
}

std::string log_line(const EpochLog& entry) {
  nlohmann::ordered_json j;
  j["epoch"] = entry.epoch;
  j["bpr"] = entry.loss.bpr;
  j["cl_u"] = entry.loss.contrastive_user;
  j["cl_i"] = entry.loss.contrastive_item;
  j["reg"] = entry.loss.reg;
  j["total"] = entry.loss.total;
  if (entry.val_recall20) j["val_recall@20"] = *entry.val_recall20;
  nlohmann::ordered_json norms = nlohmann::ordered_json::object();
  for (const auto& [name, v] : entry.grad_norms) norms[name] = v;
  j["grad_norms"] = norms;
  return j.dump();
}

}  // namespace wavehdnn::trainer
