#pragma once

#include <utility>
#include <vector>

#include "wavehdnn/data.hpp"
#include "wavehdnn/sparse.hpp"
#include "wavehdnn/types.hpp"

namespace wavehdnn::hypergraph {

enum class Side { user_side, item_side };

/// Incidence structure of one hypergraph side with isolated nodes and
/// hyperedges removed. `node_ids` / `edge_ids` map compact indices back to the
/// ids of the uncompacted incidence (user / item ids).
struct HypergraphView {
  SparseMatrix H;  // nodes x hyperedges, binary
  std::vector<double> node_degrees;
  std::vector<double> edge_degrees;
  Side side = Side::user_side;
  std::vector<Index> node_ids;
  std::vector<Index> edge_ids;
  Index total_nodes = 0;
  Index total_edges = 0;

  Index num_nodes() const { return H.rows(); }
  Index num_edges() const { return H.cols(); }
  Index dropped_nodes() const { return total_nodes - num_nodes(); }
  Index dropped_edges() const { return total_edges - num_edges(); }
};

/// Builds a view from a binary incidence, dropping empty rows and columns.
/// Dropping an empty column can empty a row and vice versa; this repeats until stable.
HypergraphView make_view(const SparseMatrix& incidence, Side side);

/// User side: nodes = users, hyperedges = items. Item side: the transpose.
/// Only train interactions are used.
std::pair<HypergraphView, HypergraphView> build_views(const data::InteractionDataset& ds);

/// D_e^{-1} H^T X: mean of member-node features per hyperedge.
Matrix node_to_edge(const HypergraphView& view, const Matrix& x);
/// D_v^{-1} H Xe: mean of incident hyperedge features per node.
Matrix edge_to_node(const HypergraphView& view, const Matrix& xe);

/// Sparse form of node_to_edge (hyperedges x nodes).
SparseMatrix edge_mean_operator(const HypergraphView& view);
/// Sparse form of edge_to_node (nodes x hyperedges).
SparseMatrix node_mean_operator(const HypergraphView& view);

/// I - D_v^{-1/2} H D_e^{-1} H^T D_v^{-1/2}, unit hyperedge weights.
SparseMatrix normalized_laplacian(const HypergraphView& view);

/// Re-indexes a compact operator into a (total_rows x total_cols) matrix whose
/// rows/columns outside the id maps are empty.
SparseMatrix lift(const SparseMatrix& compact, const std::vector<Index>& row_ids, Index total_rows,
                  const std::vector<Index>& col_ids, Index total_cols);

}  // namespace wavehdnn::hypergraph
