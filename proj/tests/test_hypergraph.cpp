#include "doctest.h"
#include "wavehdnn/data.hpp"
#include "wavehdnn/errors.hpp"
#include "wavehdnn/hypergraph.hpp"
#include "wavehdnn/rng.hpp"

using namespace wavehdnn;
using hypergraph::Side;

namespace {

data::InteractionDataset tiny() { return data::make_dataset(2, 2, {{0, 0}, {0, 1}, {1, 0}}, {}, {}); }

// Dense incidence straight from the train list.
Matrix dense_incidence(const data::InteractionDataset& ds) {
  Matrix h = Matrix::Zero(ds.num_users, ds.num_items);
  for (const auto& [u, i] : ds.train) h(u, i) = 1.0;
  return h;
}

data::InteractionDataset random_dataset(Rng& rng, Index users, Index items, double p) {
  std::vector<data::Interaction> train;
  for (Index u = 0; u < users; ++u) {
    for (Index i = 0; i < items; ++i) {
      if (rng.uniform() < p) train.emplace_back(u, i);
    }
    if (train.empty() || train.back().first != u) train.emplace_back(u, static_cast<Index>(rng.below(static_cast<std::uint64_t>(items))));
  }
  return data::make_dataset(users, items, train, {}, {});
}

}  // namespace

TEST_CASE("degrees of the two-user example") {
  const auto [user_side, item_side] = hypergraph::build_views(tiny());
  CHECK(user_side.node_degrees == std::vector<double>{2.0, 1.0});
  CHECK(user_side.edge_degrees == std::vector<double>{2.0, 1.0});
  CHECK(user_side.side == Side::user_side);
  CHECK(item_side.side == Side::item_side);
  CHECK(item_side.H.to_dense() == user_side.H.to_dense().transpose());
}

TEST_CASE("views carry exactly the train pairs") {
  Rng rng(3);
  const auto ds = random_dataset(rng, 30, 25, 0.15);
  const auto [user_side, item_side] = hypergraph::build_views(ds);
  const Matrix oracle = dense_incidence(ds);
  Matrix lifted = Matrix::Zero(ds.num_users, ds.num_items);
  const Matrix h = user_side.H.to_dense();
  for (Index r = 0; r < h.rows(); ++r) {
    for (Index c = 0; c < h.cols(); ++c) lifted(user_side.node_ids[r], user_side.edge_ids[c]) = h(r, c);
  }
  CHECK(lifted == oracle);
  CHECK(user_side.H.nnz() == static_cast<Index>(ds.train.size()));
  CHECK(item_side.H.nnz() == static_cast<Index>(ds.train.size()));
}

TEST_CASE("val and test pairs never enter the incidence") {
  const auto ds = data::make_dataset(2, 3, {{0, 0}, {1, 1}}, {{0, 2}}, {{1, 2}});
  const auto [user_side, item_side] = hypergraph::build_views(ds);
  CHECK(user_side.H.nnz() == 2);
  CHECK(user_side.dropped_edges() == 1);
  CHECK(item_side.dropped_nodes() == 1);
  CHECK(user_side.edge_ids == std::vector<Index>{0, 1});
}

TEST_CASE("HConv averages over members") {
  const auto [view, unused] = hypergraph::build_views(tiny());
  Matrix x(2, 1);
  x << 4.0, 10.0;
  const Matrix xe = hypergraph::node_to_edge(view, x);
  CHECK(xe(0, 0) == doctest::Approx(7.0));
  CHECK(xe(1, 0) == doctest::Approx(4.0));
  const Matrix xv = hypergraph::edge_to_node(view, xe);
  CHECK(xv(0, 0) == doctest::Approx(5.5));
  CHECK(xv(1, 0) == doctest::Approx(7.0));
  CHECK((hypergraph::edge_mean_operator(view).multiply(x) - xe).norm() < 1e-15);
  CHECK((hypergraph::node_mean_operator(view).multiply(xe) - xv).norm() < 1e-15);
  CHECK_THROWS_AS(hypergraph::node_to_edge(view, Matrix::Zero(3, 1)), ContractViolation);
}

TEST_CASE("normalized Laplacian matches the dense formula") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const auto ds = random_dataset(rng, 5 + static_cast<Index>(rng.below(20)), 5 + static_cast<Index>(rng.below(20)), 0.2);
    for (const auto& view : {hypergraph::build_views(ds).first, hypergraph::build_views(ds).second}) {
      const Matrix h = view.H.to_dense();
      Vector dv = h.rowwise().sum();
      Vector de = h.colwise().sum().transpose();
      const Matrix dv_is = dv.cwiseSqrt().cwiseInverse().asDiagonal();
      const Matrix de_inv = de.cwiseInverse().asDiagonal();
      const Matrix oracle =
          Matrix::Identity(h.rows(), h.rows()) - dv_is * h * de_inv * h.transpose() * dv_is;
      const Matrix lap = hypergraph::normalized_laplacian(view).to_dense();
      CHECK((lap - oracle).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((lap - lap.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("a single hyperedge over two nodes") {
  const auto ds = data::make_dataset(2, 1, {{0, 0}, {1, 0}}, {}, {});
  const Matrix lap = hypergraph::normalized_laplacian(hypergraph::build_views(ds).first).to_dense();
  Matrix expected(2, 2);
  expected << 0.5, -0.5, -0.5, 0.5;
  CHECK((lap - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("lift places compact entries at their global ids") {
  const auto compact = SparseMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 2.0}, {0, 1, 3.0}});
  const Matrix full = hypergraph::lift(compact, {1, 3}, 4, {0, 2}, 3).to_dense();
  Matrix expected = Matrix::Zero(4, 3);
  expected(1, 0) = 1.0;
  expected(3, 2) = 2.0;
  expected(1, 2) = 3.0;
  CHECK(full == expected);
}
