#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wavehdnn/checkpoint.hpp"
#include "wavehdnn/data.hpp"
#include "wavehdnn/diffcore.hpp"
#include "wavehdnn/hypergraph.hpp"
#include "wavehdnn/spectral.hpp"
#include "wavehdnn/types.hpp"

namespace wavehdnn::model {

enum class Ablation { full, no_het, no_wave };
enum class Channel { heterophily, wavelet };
enum class ModelKind { wavehdnn, lightgcn };

std::string to_string(Ablation a);
std::string to_string(ModelKind k);
Ablation parse_ablation(const std::string& s);
ModelKind parse_model_kind(const std::string& s);

/// Two-layer perceptron: relu hidden layer, linear output.
struct Mlp {
  ad::Parameter w1, b1, w2, b2;
  std::vector<ad::Parameter*> parameters();
};

struct WaveHDNNParams {
  Index num_users = 0;
  Index num_items = 0;
  Index dim = 0;
  Index layers = 0;
  ad::Parameter user_embed;  // |U| x d
  ad::Parameter item_embed;  // |I| x d
  Mlp mlp1;                  // d -> d -> d, shared across layers
  Mlp mlp2;                  // d -> d -> d
  Mlp mlp_final;             // 2d -> d -> d
  std::vector<ad::Parameter> wave_filters_user;  // per layer, |U| x 1
  std::vector<ad::Parameter> wave_filters_item;  // per layer, |I| x 1
  std::vector<ad::Parameter> wave_transforms;    // per layer, d x d

  /// Checkpoint order (see checkpoint.hpp).
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::vector<ad::Parameter*> heterophily_parameters();
  std::vector<ad::Parameter*> wavelet_parameters();
};

/// Embeddings ~ U(-0.1/sqrt(d), 0.1/sqrt(d)); MLP weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// with zero biases; filters = 1; transforms = I + U(-0.01, 0.01).
WaveHDNNParams init_params(Index num_users, Index num_items, Index dim, Index layers,
                           std::uint64_t seed);

/// Per-layer snapshots of one encoder channel. Layer 0 is the input tables.
struct ChannelOutputs {
  Channel channel = Channel::heterophily;
  std::vector<ad::Var> user_layers;
  std::vector<ad::Var> item_layers;
  ad::Var user_final;  // mean over user_layers
  ad::Var item_final;  // mean over item_layers
};

/// Mean-aggregation operators of the user-side view, lifted to full id space:
/// to_items = D_e^{-1} H^T (|I| x |U|), to_users = D_v^{-1} H (|U| x |I|).
struct HetGraph {
  SparseMatrix to_items;
  SparseMatrix to_users;
};
HetGraph make_het_graph(const hypergraph::HypergraphView& user_view);

struct WaveletConfig {
  double scale = 1.0;
  /// "auto" picks exact when the side fits the dense limit.
  std::string mode = "auto";
  int chebyshev_order = spectral::kDefaultChebyshevOrder;
  Index dense_limit = spectral::kDefaultDenseLimit;
};

/// Wavelet pair of one side, embedded in the full id space. Nodes dropped from
/// the view have a zero Laplacian row, so both operators act as identity there.
struct WaveSide {
  spectral::WaveletOperator op;
  std::vector<Index> active;
  Index total = 0;
  /// Materialized Theta / Theta' for small sides (empty otherwise); one
  /// product per application instead of two.
  Matrix theta;
  Matrix theta_inv;

  Matrix apply(spectral::Direction dir, const Matrix& x) const;
};
/// Sides with at most this many active nodes get materialized operators.
inline constexpr Index kMaterializeLimit = 2048;
WaveSide make_wave_side(const hypergraph::HypergraphView& view, const WaveletConfig& config);

/// Heterophily-aware encoder on the user-side view (users = nodes, items = hyperedges):
///   X_i^l = LN(D_e^{-1} H^T MLP1(X_u^{l-1})) + X_i^{l-1}
///   X_u^l = LN(D_v^{-1} H MLP2(X_i^l)) + X_u^{l-1}
/// after which layer L becomes X^L + mlp_final([X^L, X^0]) on each side.
ChannelOutputs het_encoder_forward(ad::Tape& tape, WaveHDNNParams& params, const HetGraph& graph,
                                   const ad::Var& x_users, const ad::Var& x_items);

/// Wavelet encoder, per side: X^{l+1} = Theta diag(Lambda^l) Theta' X^l W^l + X^l.
ChannelOutputs wave_encoder_forward(ad::Tape& tape, WaveHDNNParams& params, const WaveSide& users,
                                    const WaveSide& items, const ad::Var& x_users,
                                    const ad::Var& x_items);

/// Elementwise sum of the two channels' final tables.
std::pair<ad::Var, ad::Var> fuse(const ChannelOutputs& het, const ChannelOutputs& wave);

/// E_u[user] . E_i^T
Vector score_all(const Matrix& user_table, const Matrix& item_table, Index user);

/// Symmetrically normalized user-item adjacency block D_u^{-1/2} R D_i^{-1/2}
/// (|U| x |I|) of the bipartite train graph.
SparseMatrix normalized_bipartite_block(const data::InteractionDataset& ds);

/// LightGCN propagation over the bipartite graph given by its normalized block:
/// E^{l+1} = A_hat E^l, output = mean over layers 0..L.
std::pair<ad::Var, ad::Var> lightgcn_forward(ad::Tape& tape, const SparseMatrix& block,
                                             const SparseMatrix& block_t, const ad::Var& users,
                                             const ad::Var& items, Index layers);

struct ModelConfig {
  ModelKind kind = ModelKind::wavehdnn;
  Index dim = 64;
  Index layers = 3;
  Ablation ablation = Ablation::full;
  WaveletConfig wavelet;
  std::uint64_t seed = 0;
};

/// One forward pass. `het` / `wave` are present when that channel ran.
struct ForwardOutput {
  ad::Var user_embed;
  ad::Var item_embed;
  ad::Var fused_users;
  ad::Var fused_items;
  std::optional<ChannelOutputs> het;
  std::optional<ChannelOutputs> wave;
};

class Recommender {
 public:
  virtual ~Recommender() = default;
  virtual ModelKind kind() const = 0;
  virtual ForwardOutput forward(ad::Tape& tape) = 0;
  /// All parameters in checkpoint order, including frozen ones.
  virtual std::vector<ad::Parameter*> parameters() = 0;
  virtual Checkpoint checkpoint(const Matrix& fused_users, const Matrix& fused_items) const = 0;
  /// Restores parameter values from a checkpoint of the same shape.
  virtual void restore(const Checkpoint& ckpt) = 0;

  /// Gradient-free forward; returns (E_u, E_i).
  std::pair<Matrix, Matrix> infer();
};

class WaveHDNN final : public Recommender {
 public:
  WaveHDNN(const data::InteractionDataset& ds, const ModelConfig& config);

  ModelKind kind() const override { return ModelKind::wavehdnn; }
  ForwardOutput forward(ad::Tape& tape) override;
  std::vector<ad::Parameter*> parameters() override { return params_.parameters(); }
  Checkpoint checkpoint(const Matrix& fused_users, const Matrix& fused_items) const override;
  void restore(const Checkpoint& ckpt) override;

  WaveHDNNParams& params() { return params_; }
  const HetGraph& het_graph() const { return het_graph_; }
  const WaveSide& user_wavelet() const { return wave_users_; }
  const WaveSide& item_wavelet() const { return wave_items_; }

 private:
  ModelConfig config_;
  WaveHDNNParams params_;
  HetGraph het_graph_;
  WaveSide wave_users_;
  WaveSide wave_items_;
};

class LightGCN final : public Recommender {
 public:
  LightGCN(const data::InteractionDataset& ds, const ModelConfig& config);

  ModelKind kind() const override { return ModelKind::lightgcn; }
  ForwardOutput forward(ad::Tape& tape) override;
  std::vector<ad::Parameter*> parameters() override { return {&user_embed_, &item_embed_}; }
  Checkpoint checkpoint(const Matrix& fused_users, const Matrix& fused_items) const override;
  void restore(const Checkpoint& ckpt) override;

 private:
  ModelConfig config_;
  Index num_users_;
  Index num_items_;
  ad::Parameter user_embed_;
  ad::Parameter item_embed_;
  SparseMatrix block_;
  SparseMatrix block_t_;
};

std::unique_ptr<Recommender> make_model(const data::InteractionDataset& ds, const ModelConfig& config);

}  // namespace wavehdnn::model
