#include "wavehdnn/hypergraph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavehdnn/errors.hpp"
#include "wavehdnn/log.hpp"

namespace wavehdnn::hypergraph {
namespace {

const char* side_name(Side s) { return s == Side::user_side ? "user_side" : "item_side"; }

}  // namespace

HypergraphView make_view(const SparseMatrix& incidence, Side side) {
  const Index n = incidence.rows();
  const Index m = incidence.cols();
  std::vector<char> keep_node(static_cast<std::size_t>(n), 1);
  std::vector<char> keep_edge(static_cast<std::size_t>(m), 1);
  const auto& off = incidence.row_offsets();
  const auto& cols = incidence.col_indices();
  for (double v : incidence.values()) {
    WAVEHDNN_REQUIRE(v == 1.0, "make_view: incidence must be binary");
  }

  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<Index> node_deg(static_cast<std::size_t>(n), 0);
    std::vector<Index> edge_deg(static_cast<std::size_t>(m), 0);
    for (Index r = 0; r < n; ++r) {
      if (!keep_node[r]) continue;
      for (Index k = off[r]; k < off[r + 1]; ++k) {
        if (!keep_edge[cols[k]]) continue;
        ++node_deg[r];
        ++edge_deg[cols[k]];
      }
    }
    for (Index r = 0; r < n; ++r) {
      if (keep_node[r] && node_deg[r] == 0) keep_node[r] = 0, changed = true;
    }
    for (Index c = 0; c < m; ++c) {
      if (keep_edge[c] && edge_deg[c] == 0) keep_edge[c] = 0, changed = true;
    }
  }

  HypergraphView view;
  view.side = side;
  view.total_nodes = n;
  view.total_edges = m;
  std::vector<Index> node_pos(static_cast<std::size_t>(n), -1);
  std::vector<Index> edge_pos(static_cast<std::size_t>(m), -1);
  for (Index r = 0; r < n; ++r) {
    if (keep_node[r]) {
      node_pos[r] = static_cast<Index>(view.node_ids.size());
      view.node_ids.push_back(r);
    }
  }
  for (Index c = 0; c < m; ++c) {
    if (keep_edge[c]) {
      edge_pos[c] = static_cast<Index>(view.edge_ids.size());
      view.edge_ids.push_back(c);
    }
  }
  std::vector<SparseMatrix::Triplet> t;
  t.reserve(incidence.values().size());
  for (Index r = 0; r < n; ++r) {
    if (!keep_node[r]) continue;
    for (Index k = off[r]; k < off[r + 1]; ++k) {
      if (keep_edge[cols[k]]) t.push_back({node_pos[r], edge_pos[cols[k]], 1.0});
    }
  }
  view.H = SparseMatrix::from_triplets(static_cast<Index>(view.node_ids.size()),
                                       static_cast<Index>(view.edge_ids.size()), std::move(t));
  view.node_degrees.assign(static_cast<std::size_t>(view.H.rows()), 0.0);
  view.edge_degrees.assign(static_cast<std::size_t>(view.H.cols()), 0.0);
  for (Index r = 0; r < view.H.rows(); ++r) {
    for (Index k = view.H.row_offsets()[r]; k < view.H.row_offsets()[r + 1]; ++k) {
      view.node_degrees[r] += 1.0;
      view.edge_degrees[view.H.col_indices()[k]] += 1.0;
    }
  }
  if (view.dropped_nodes() > 0 || view.dropped_edges() > 0) {
    log::warn(std::string("hypergraph ") + side_name(side) + ": dropped " +
              std::to_string(view.dropped_nodes()) + " isolated nodes and " +
              std::to_string(view.dropped_edges()) + " empty hyperedges");
  }
  return view;
}

std::pair<HypergraphView, HypergraphView> build_views(const data::InteractionDataset& ds) {
  WAVEHDNN_REQUIRE(!ds.train.empty(), "build_views: empty train split");
  std::vector<SparseMatrix::Triplet> t;
  t.reserve(ds.train.size());
  for (const auto& [u, i] : ds.train) t.push_back({u, i, 1.0});
  // Duplicate pairs would sum to 2; the split never produces them, but guard anyway.
  auto incidence = SparseMatrix::from_triplets(ds.num_users, ds.num_items, std::move(t));
  for (double v : incidence.values()) {
    WAVEHDNN_REQUIRE(v == 1.0, "build_views: duplicate train interaction");
  }
  return {make_view(incidence, Side::user_side), make_view(incidence.transpose(), Side::item_side)};
}

SparseMatrix edge_mean_operator(const HypergraphView& view) {
  std::vector<double> inv(view.edge_degrees.size());
  for (std::size_t e = 0; e < inv.size(); ++e) inv[e] = 1.0 / view.edge_degrees[e];
  return view.H.transpose().scaled(inv, {});
}

SparseMatrix node_mean_operator(const HypergraphView& view) {
  std::vector<double> inv(view.node_degrees.size());
  for (std::size_t v = 0; v < inv.size(); ++v) inv[v] = 1.0 / view.node_degrees[v];
  return view.H.scaled(inv, {});
}

Matrix node_to_edge(const HypergraphView& view, const Matrix& x) {
  WAVEHDNN_REQUIRE(x.rows() == view.num_nodes(),
                   "node_to_edge: X has " + std::to_string(x.rows()) + " rows, view has " +
                       std::to_string(view.num_nodes()) + " nodes");
  Matrix out = view.H.multiply_transposed(x);
  for (Index e = 0; e < out.rows(); ++e) out.row(e) /= view.edge_degrees[e];
  return out;
}

Matrix edge_to_node(const HypergraphView& view, const Matrix& xe) {
  WAVEHDNN_REQUIRE(xe.rows() == view.num_edges(),
                   "edge_to_node: Xe has " + std::to_string(xe.rows()) + " rows, view has " +
                       std::to_string(view.num_edges()) + " hyperedges");
  Matrix out = view.H.multiply(xe);
  for (Index v = 0; v < out.rows(); ++v) out.row(v) /= view.node_degrees[v];
  return out;
}

SparseMatrix normalized_laplacian(const HypergraphView& view) {
  const Index n = view.num_nodes();
  std::vector<double> inv_sqrt_dv(static_cast<std::size_t>(n));
  for (Index v = 0; v < n; ++v) {
    const double d = view.node_degrees[v];
    if (!(d >= 1.0)) throw NumericError("normalized_laplacian: node " + std::to_string(v) + " has zero degree");
    inv_sqrt_dv[v] = 1.0 / std::sqrt(d);
  }
  for (double d : view.edge_degrees) {
    if (!(d >= 1.0)) throw NumericError("normalized_laplacian: empty hyperedge");
  }
  const SparseMatrix ht = view.H.transpose();
  const auto& hoff = view.H.row_offsets();
  const auto& hcol = view.H.col_indices();
  const auto& toff = ht.row_offsets();
  const auto& tcol = ht.col_indices();

  // Row v of A = D_v^{-1/2} H D_e^{-1} H^T D_v^{-1/2}, accumulated densely then compacted.
  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  std::vector<char> touched(static_cast<std::size_t>(n), 0);
  std::vector<Index> pattern;
  std::vector<Index> offsets{0};
  std::vector<Index> col_idx;
  std::vector<double> vals;
  for (Index v = 0; v < n; ++v) {
    pattern.clear();
    for (Index k = hoff[v]; k < hoff[v + 1]; ++k) {
      const Index e = hcol[k];
      const double w = 1.0 / view.edge_degrees[e];
      for (Index j = toff[e]; j < toff[e + 1]; ++j) {
        const Index u = tcol[j];
        if (!touched[u]) touched[u] = 1, pattern.push_back(u);
        acc[u] += w;
      }
    }
    if (!touched[v]) touched[v] = 1, pattern.push_back(v);
    std::sort(pattern.begin(), pattern.end());
    for (Index u : pattern) {
      // Fixed operand order keeps (v,u) and (u,v) bitwise equal.
      double value = -acc[u] * (inv_sqrt_dv[std::min(u, v)] * inv_sqrt_dv[std::max(u, v)]);
      if (u == v) value += 1.0;
      if (value != 0.0) {
        col_idx.push_back(u);
        vals.push_back(value);
      }
      acc[u] = 0.0;
      touched[u] = 0;
    }
    offsets.push_back(static_cast<Index>(vals.size()));
  }
  return SparseMatrix::from_csr(n, n, std::move(offsets), std::move(col_idx), std::move(vals));
}

SparseMatrix lift(const SparseMatrix& compact, const std::vector<Index>& row_ids, Index total_rows,
                  const std::vector<Index>& col_ids, Index total_cols) {
  WAVEHDNN_REQUIRE(static_cast<Index>(row_ids.size()) == compact.rows() &&
                       static_cast<Index>(col_ids.size()) == compact.cols(),
                   "lift: id maps do not match operator shape");
  std::vector<SparseMatrix::Triplet> t;
  t.reserve(compact.values().size());
  for (Index r = 0; r < compact.rows(); ++r) {
    for (Index k = compact.row_offsets()[r]; k < compact.row_offsets()[r + 1]; ++k) {
      t.push_back({row_ids[r], col_ids[compact.col_indices()[k]], compact.values()[k]});
    }
  }
  return SparseMatrix::from_triplets(total_rows, total_cols, std::move(t));
}

}  // namespace wavehdnn::hypergraph
