#include "wavehdnn/model.hpp"

#include <cmath>
#include <string>

#include "wavehdnn/errors.hpp"
#include "wavehdnn/rng.hpp"

namespace wavehdnn::model {
namespace {

Matrix uniform_matrix(Rng& rng, Index rows, Index cols, double half_width) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-half_width, half_width);
  }
  return m;
}

Mlp make_mlp(Rng& rng, const std::string& name, Index in, Index hidden, Index out) {
  Mlp m;
  m.w1 = ad::Parameter(name + ".w1", uniform_matrix(rng, in, hidden, 1.0 / std::sqrt(double(in))));
  m.b1 = ad::Parameter(name + ".b1", Matrix::Zero(1, hidden));
  m.w2 = ad::Parameter(name + ".w2", uniform_matrix(rng, hidden, out, 1.0 / std::sqrt(double(hidden))));
  m.b2 = ad::Parameter(name + ".b2", Matrix::Zero(1, out));
  return m;
}

struct BoundMlp {
  ad::Var w1, b1, w2, b2;
  BoundMlp(ad::Tape& tape, Mlp& m)
      : w1(tape.parameter(m.w1)), b1(tape.parameter(m.b1)), w2(tape.parameter(m.w2)),
        b2(tape.parameter(m.b2)) {}
  ad::Var operator()(const ad::Var& x) const {
    const ad::Var hidden = ad::relu(ad::add_row_broadcast(ad::matmul(x, w1), b1));
    return ad::add_row_broadcast(ad::matmul(hidden, w2), b2);
  }
};

ad::Var layer_mean(const std::vector<ad::Var>& layers) {
  ad::Var acc = layers.front();
  for (std::size_t l = 1; l < layers.size(); ++l) acc = ad::add(acc, layers[l]);
  return layers.size() == 1 ? acc : ad::scale(acc, 1.0 / static_cast<double>(layers.size()));
}

void finalize(ChannelOutputs& out) {
  out.user_final = layer_mean(out.user_layers);
  out.item_final = layer_mean(out.item_layers);
}

void copy_into(ad::Parameter& p, const Matrix& m) {
  if (p.value.rows() != m.rows() || p.value.cols() != m.cols()) {
    throw CompatibilityError("checkpoint tensor " + p.name + " has shape " +
                             std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                             ", model expects " + std::to_string(p.value.rows()) + "x" +
                             std::to_string(p.value.cols()));
  }
  p.value = m;
}

}  // namespace

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::no_het: return "no_het";
    case Ablation::no_wave: return "no_wave";
  }
  return "full";
}

std::string to_string(ModelKind k) { return k == ModelKind::wavehdnn ? "wavehdnn" : "lightgcn"; }

Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::full;
  if (s == "no_het") return Ablation::no_het;
  if (s == "no_wave") return Ablation::no_wave;
  throw ConfigError("unknown ablation '" + s + "' (expected full | no_het | no_wave)");
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "wavehdnn") return ModelKind::wavehdnn;
  if (s == "lightgcn") return ModelKind::lightgcn;
  throw ConfigError("unknown model '" + s + "' (expected wavehdnn | lightgcn)");
}

std::vector<ad::Parameter*> Mlp::parameters() { return {&w1, &b1, &w2, &b2}; }

std::vector<ad::Parameter*> WaveHDNNParams::parameters() {
  std::vector<ad::Parameter*> out{&user_embed, &item_embed};
  for (Mlp* m : {&mlp1, &mlp2, &mlp_final}) {
    for (ad::Parameter* p : m->parameters()) out.push_back(p);
  }
  for (std::size_t l = 0; l < wave_transforms.size(); ++l) {
    out.push_back(&wave_filters_user[l]);
    out.push_back(&wave_filters_item[l]);
    out.push_back(&wave_transforms[l]);
  }
  return out;
}

std::vector<const ad::Parameter*> WaveHDNNParams::parameters() const {
  auto all = const_cast<WaveHDNNParams*>(this)->parameters();
  return {all.begin(), all.end()};
}

std::vector<ad::Parameter*> WaveHDNNParams::heterophily_parameters() {
  std::vector<ad::Parameter*> out;
  for (Mlp* m : {&mlp1, &mlp2, &mlp_final}) {
    for (ad::Parameter* p : m->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<ad::Parameter*> WaveHDNNParams::wavelet_parameters() {
  std::vector<ad::Parameter*> out;
  for (std::size_t l = 0; l < wave_transforms.size(); ++l) {
    out.push_back(&wave_filters_user[l]);
    out.push_back(&wave_filters_item[l]);
    out.push_back(&wave_transforms[l]);
  }
  return out;
}

WaveHDNNParams init_params(Index num_users, Index num_items, Index dim, Index layers,
                           std::uint64_t seed) {
  WAVEHDNN_REQUIRE(num_users > 0 && num_items > 0 && dim > 0 && layers >= 0,
                   "init_params: invalid shape");
  Rng rng(seed);
  WaveHDNNParams p;
  p.num_users = num_users;
  p.num_items = num_items;
  p.dim = dim;
  p.layers = layers;
  const double emb = 0.1 / std::sqrt(static_cast<double>(dim));
  p.user_embed = ad::Parameter("user_embed", uniform_matrix(rng, num_users, dim, emb));
  p.item_embed = ad::Parameter("item_embed", uniform_matrix(rng, num_items, dim, emb));
  p.mlp1 = make_mlp(rng, "mlp1", dim, dim, dim);
  p.mlp2 = make_mlp(rng, "mlp2", dim, dim, dim);
  p.mlp_final = make_mlp(rng, "mlp_final", 2 * dim, dim, dim);
  for (Index l = 0; l < layers; ++l) {
    const std::string tag = "." + std::to_string(l);
    p.wave_filters_user.emplace_back("wave_filter_user" + tag, Matrix::Ones(num_users, 1));
    p.wave_filters_item.emplace_back("wave_filter_item" + tag, Matrix::Ones(num_items, 1));
    Matrix w = Matrix::Identity(dim, dim) + uniform_matrix(rng, dim, dim, 0.01);
    p.wave_transforms.emplace_back("wave_transform" + tag, std::move(w));
  }
  return p;
}

HetGraph make_het_graph(const hypergraph::HypergraphView& user_view) {
  WAVEHDNN_REQUIRE(user_view.side == hypergraph::Side::user_side,
                   "make_het_graph: expects the user-side view");
  HetGraph g;
  g.to_items = hypergraph::lift(hypergraph::edge_mean_operator(user_view), user_view.edge_ids,
                                user_view.total_edges, user_view.node_ids, user_view.total_nodes);
  g.to_users = hypergraph::lift(hypergraph::node_mean_operator(user_view), user_view.node_ids,
                                user_view.total_nodes, user_view.edge_ids, user_view.total_edges);
  return g;
}

Matrix WaveSide::apply(spectral::Direction dir, const Matrix& x) const {
  WAVEHDNN_REQUIRE(x.rows() == total, "WaveSide::apply: row count mismatch");
  const Matrix& cached = dir == spectral::Direction::forward ? theta : theta_inv;
  auto map = [&](const Matrix& m) -> Matrix {
    if (cached.size() > 0) return cached * m;
    return op.apply(dir, m);
  };
  if (static_cast<Index>(active.size()) == total) return map(x);
  Matrix sub(static_cast<Index>(active.size()), x.cols());
  for (std::size_t k = 0; k < active.size(); ++k) sub.row(static_cast<Index>(k)) = x.row(active[k]);
  const Matrix mapped = map(sub);
  Matrix out = x;
  for (std::size_t k = 0; k < active.size(); ++k) out.row(active[k]) = mapped.row(static_cast<Index>(k));
  return out;
}

WaveSide make_wave_side(const hypergraph::HypergraphView& view, const WaveletConfig& config) {
  const SparseMatrix lap = hypergraph::normalized_laplacian(view);
  std::string mode = config.mode;
  if (mode == "auto") mode = lap.rows() <= config.dense_limit ? "exact" : "chebyshev";
  WaveSide side;
  if (mode == "exact") {
    side.op = spectral::exact_wavelet(lap, config.scale, config.dense_limit);
  } else if (mode == "chebyshev") {
    side.op = spectral::chebyshev_wavelet(lap, config.scale, config.chebyshev_order);
  } else {
    throw ConfigError("unknown wavelet mode '" + config.mode + "' (expected auto | exact | chebyshev)");
  }
  side.active = view.node_ids;
  side.total = view.total_nodes;
  if (static_cast<Index>(side.active.size()) <= kMaterializeLimit) {
    side.theta = side.op.dense(spectral::Direction::forward);
    side.theta_inv = side.op.dense(spectral::Direction::inverse);
  }
  return side;
}

ChannelOutputs het_encoder_forward(ad::Tape& tape, WaveHDNNParams& params, const HetGraph& graph,
                                   const ad::Var& x_users, const ad::Var& x_items) {
  ChannelOutputs out;
  out.channel = Channel::heterophily;
  out.user_layers.push_back(x_users);
  out.item_layers.push_back(x_items);
  if (params.layers > 0) {
    const BoundMlp mlp1(tape, params.mlp1);
    const BoundMlp mlp2(tape, params.mlp2);
    const BoundMlp mlp_final(tape, params.mlp_final);
    ad::Var xu = x_users;
    ad::Var xi = x_items;
    for (Index l = 1; l <= params.layers; ++l) {
      xi = ad::add(ad::row_layer_norm(ad::sparse_dense_matmul(graph.to_items, mlp1(xu))), xi);
      xu = ad::add(ad::row_layer_norm(ad::sparse_dense_matmul(graph.to_users, mlp2(xi))), xu);
      if (l == params.layers) {
        xu = ad::add(xu, mlp_final(ad::concat_columns({xu, x_users})));
        xi = ad::add(xi, mlp_final(ad::concat_columns({xi, x_items})));
      }
      out.user_layers.push_back(xu);
      out.item_layers.push_back(xi);
    }
  }
  finalize(out);
  return out;
}

ChannelOutputs wave_encoder_forward(ad::Tape& tape, WaveHDNNParams& params, const WaveSide& users,
                                    const WaveSide& items, const ad::Var& x_users,
                                    const ad::Var& x_items) {
  using spectral::Direction;
  ChannelOutputs out;
  out.channel = Channel::wavelet;
  out.user_layers.push_back(x_users);
  out.item_layers.push_back(x_items);
  auto layer = [](const WaveSide& side, const ad::Var& x, const ad::Var& filter, const ad::Var& w) {
    // Theta and Theta' are symmetric, so each is its own adjoint.
    const WaveSide* s = &side;
    auto fwd = [s](const Matrix& m) { return s->apply(Direction::forward, m); };
    auto inv = [s](const Matrix& m) { return s->apply(Direction::inverse, m); };
    ad::Var h = ad::linear_map(ad::matmul(x, w), inv, inv);
    h = ad::linear_map(ad::scale_rows(h, filter), fwd, fwd);
    return ad::add(h, x);
  };
  ad::Var xu = x_users;
  ad::Var xi = x_items;
  for (Index l = 0; l < params.layers; ++l) {
    const ad::Var w = tape.parameter(params.wave_transforms[l]);
    xu = layer(users, xu, tape.parameter(params.wave_filters_user[l]), w);
    xi = layer(items, xi, tape.parameter(params.wave_filters_item[l]), w);
    out.user_layers.push_back(xu);
    out.item_layers.push_back(xi);
  }
  finalize(out);
  return out;
}

std::pair<ad::Var, ad::Var> fuse(const ChannelOutputs& het, const ChannelOutputs& wave) {
  return {ad::add(het.user_final, wave.user_final), ad::add(het.item_final, wave.item_final)};
}

Vector score_all(const Matrix& user_table, const Matrix& item_table, Index user) {
  WAVEHDNN_REQUIRE(user >= 0 && user < user_table.rows(),
                   "score_all: user " + std::to_string(user) + " out of range");
  WAVEHDNN_REQUIRE(user_table.cols() == item_table.cols(), "score_all: dimension mismatch");
  return item_table * user_table.row(user).transpose();
}

SparseMatrix normalized_bipartite_block(const data::InteractionDataset& ds) {
  std::vector<double> du(static_cast<std::size_t>(ds.num_users), 0.0);
  std::vector<double> di(static_cast<std::size_t>(ds.num_items), 0.0);
  for (const auto& [u, i] : ds.train) {
    du[u] += 1.0;
    di[i] += 1.0;
  }
  std::vector<SparseMatrix::Triplet> t;
  t.reserve(ds.train.size());
  for (const auto& [u, i] : ds.train) t.push_back({u, i, 1.0 / std::sqrt(du[u] * di[i])});
  return SparseMatrix::from_triplets(ds.num_users, ds.num_items, std::move(t));
}

std::pair<ad::Var, ad::Var> lightgcn_forward(ad::Tape&, const SparseMatrix& block,
                                             const SparseMatrix& block_t, const ad::Var& users,
                                             const ad::Var& items, Index layers) {
  WAVEHDNN_REQUIRE(block.rows() == users.rows() && block.cols() == items.rows(),
                   "lightgcn_forward: adjacency does not match embedding tables");
  std::vector<ad::Var> ul{users}, il{items};
  for (Index l = 0; l < layers; ++l) {
    ad::Var nu = ad::sparse_dense_matmul(block, il.back());
    ad::Var ni = ad::sparse_dense_matmul(block_t, ul.back());
    ul.push_back(nu);
    il.push_back(ni);
  }
  return {layer_mean(ul), layer_mean(il)};
}

std::pair<Matrix, Matrix> Recommender::infer() {
  ad::Tape tape(false);
  ForwardOutput out = forward(tape);
  return {out.fused_users.value(), out.fused_items.value()};
}

WaveHDNN::WaveHDNN(const data::InteractionDataset& ds, const ModelConfig& config)
    : config_(config),
      params_(init_params(ds.num_users, ds.num_items, config.dim, config.layers, config.seed)) {
  const auto [user_view, item_view] = hypergraph::build_views(ds);
  if (config.ablation != Ablation::no_het) het_graph_ = make_het_graph(user_view);
  if (config.ablation != Ablation::no_wave && config.layers > 0) {
    wave_users_ = make_wave_side(user_view, config.wavelet);
    wave_items_ = make_wave_side(item_view, config.wavelet);
  }
  if (config.ablation == Ablation::no_het) {
    for (ad::Parameter* p : params_.heterophily_parameters()) p->requires_grad = false;
  }
  if (config.ablation == Ablation::no_wave) {
    for (ad::Parameter* p : params_.wavelet_parameters()) p->requires_grad = false;
  }
}

ForwardOutput WaveHDNN::forward(ad::Tape& tape) {
  ForwardOutput out;
  out.user_embed = tape.parameter(params_.user_embed);
  out.item_embed = tape.parameter(params_.item_embed);
  if (config_.ablation != Ablation::no_het) {
    out.het = het_encoder_forward(tape, params_, het_graph_, out.user_embed, out.item_embed);
  }
  if (config_.ablation != Ablation::no_wave) {
    out.wave = wave_encoder_forward(tape, params_, wave_users_, wave_items_, out.user_embed,
                                    out.item_embed);
  }
  if (out.het && out.wave) {
    std::tie(out.fused_users, out.fused_items) = fuse(*out.het, *out.wave);
  } else {
    const ChannelOutputs& only = out.het ? *out.het : *out.wave;
    out.fused_users = only.user_final;
    out.fused_items = only.item_final;
  }
  return out;
}

Checkpoint WaveHDNN::checkpoint(const Matrix& fused_users, const Matrix& fused_items) const {
  Checkpoint c;
  c.num_users = static_cast<std::uint64_t>(params_.num_users);
  c.num_items = static_cast<std::uint64_t>(params_.num_items);
  c.dim = static_cast<std::uint64_t>(params_.dim);
  c.layers = static_cast<std::uint64_t>(params_.layers);
  for (const ad::Parameter* p : params_.parameters()) c.tensors.push_back(p->value);
  c.tensors.push_back(fused_users);
  c.tensors.push_back(fused_items);
  return c;
}

void WaveHDNN::restore(const Checkpoint& ckpt) {
  auto params = params_.parameters();
  if (ckpt.tensors.size() != params.size() + 2) {
    throw CompatibilityError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                             " tensors, wavehdnn expects " + std::to_string(params.size() + 2));
  }
  for (std::size_t k = 0; k < params.size(); ++k) copy_into(*params[k], ckpt.tensors[k]);
}

LightGCN::LightGCN(const data::InteractionDataset& ds, const ModelConfig& config)
    : config_(config), num_users_(ds.num_users), num_items_(ds.num_items) {
  Rng rng(config.seed);
  const double emb = 0.1 / std::sqrt(static_cast<double>(config.dim));
  user_embed_ = ad::Parameter("user_embed", uniform_matrix(rng, num_users_, config.dim, emb));
  item_embed_ = ad::Parameter("item_embed", uniform_matrix(rng, num_items_, config.dim, emb));
  block_ = normalized_bipartite_block(ds);
  block_t_ = block_.transpose();
}

ForwardOutput LightGCN::forward(ad::Tape& tape) {
  ForwardOutput out;
  out.user_embed = tape.parameter(user_embed_);
  out.item_embed = tape.parameter(item_embed_);
  std::tie(out.fused_users, out.fused_items) =
      lightgcn_forward(tape, block_, block_t_, out.user_embed, out.item_embed, config_.layers);
  return out;
}

Checkpoint LightGCN::checkpoint(const Matrix& fused_users, const Matrix& fused_items) const {
  Checkpoint c;
  c.num_users = static_cast<std::uint64_t>(num_users_);
  c.num_items = static_cast<std::uint64_t>(num_items_);
  c.dim = static_cast<std::uint64_t>(config_.dim);
  c.layers = static_cast<std::uint64_t>(config_.layers);
  c.tensors = {user_embed_.value, item_embed_.value, fused_users, fused_items};
  return c;
}

void LightGCN::restore(const Checkpoint& ckpt) {
  if (ckpt.tensors.size() != 4) {
    throw CompatibilityError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                             " tensors, lightgcn expects 4");
  }
  copy_into(user_embed_, ckpt.tensors[0]);
  copy_into(item_embed_, ckpt.tensors[1]);
}

std::unique_ptr<Recommender> make_model(const data::InteractionDataset& ds, const ModelConfig& config) {
  if (config.kind == ModelKind::lightgcn) return std::make_unique<LightGCN>(ds, config);
  return std::make_unique<WaveHDNN>(ds, config);
}

}  // namespace wavehdnn::model
