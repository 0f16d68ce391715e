#include <sstream>

#include "doctest.h"
#include "wavehdnn/errors.hpp"
#include "wavehdnn/rng.hpp"
#include "wavehdnn/sparse.hpp"

using namespace wavehdnn;

namespace {

Matrix random_dense(Index rows, Index cols, Rng& rng, double density) {
  Matrix m = Matrix::Zero(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) {
      if (rng.uniform() < density) m(r, c) = rng.uniform(-2.0, 2.0);
    }
  }
  return m;
}

SparseMatrix from_dense(const Matrix& d) {
  std::vector<SparseMatrix::Triplet> t;
  for (Index r = 0; r < d.rows(); ++r) {
    for (Index c = 0; c < d.cols(); ++c) {
      if (d(r, c) != 0.0) t.push_back({r, c, d(r, c)});
    }
  }
  return SparseMatrix::from_triplets(d.rows(), d.cols(), t);
}

}  // namespace

TEST_CASE("from_triplets sums duplicates and drops cancelled entries") {
  const auto m = SparseMatrix::from_triplets(2, 3, {{1, 2, 1.5}, {0, 0, 1.0}, {1, 2, 0.5}, {0, 1, 2.0}, {0, 1, -2.0}});
  CHECK(m.nnz() == 2);
  CHECK(m.at(0, 0) == 1.0);
  CHECK(m.at(1, 2) == 2.0);
  CHECK(m.at(0, 1) == 0.0);
  CHECK(m.row_offsets() == std::vector<Index>{0, 1, 2});
}

TEST_CASE("from_csr validates its arrays") {
  CHECK_NOTHROW(SparseMatrix::from_csr(2, 2, {0, 1, 2}, {1, 0}, {3.0, 4.0}));
  CHECK_THROWS_AS(SparseMatrix::from_csr(2, 2, {0, 2, 1}, {1, 0}, {3.0, 4.0}), ContractViolation);
  CHECK_THROWS_AS(SparseMatrix::from_csr(1, 2, {0, 2}, {1, 0}, {3.0, 4.0}), ContractViolation);
  CHECK_THROWS_AS(SparseMatrix::from_csr(1, 2, {0, 1}, {2}, {3.0}), ContractViolation);
  CHECK_THROWS_AS(SparseMatrix::from_csr(1, 2, {0, 1}, {0}, {0.0}), ContractViolation);
  CHECK_THROWS_AS(SparseMatrix::from_triplets(1, 1, {{0, 1, 1.0}}), ContractViolation);
}

TEST_CASE("products, transpose and scaling agree with dense arithmetic") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Index r = 1 + static_cast<Index>(rng.below(12));
    const Index c = 1 + static_cast<Index>(rng.below(12));
    const Matrix d = random_dense(r, c, rng, 0.3);
    const SparseMatrix s = from_dense(d);
    CHECK(s.to_dense() == d);
    const Matrix x = random_dense(c, 4, rng, 1.0);
    const Matrix y = random_dense(r, 3, rng, 1.0);
    CHECK((s.multiply(x) - d * x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.multiply_transposed(y) - d.transpose() * y).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.transpose().to_dense() == d.transpose());
    std::vector<double> left(static_cast<std::size_t>(r)), right(static_cast<std::size_t>(c));
    for (auto& v : left) v = rng.uniform(0.5, 2.0);
    for (auto& v : right) v = rng.uniform(0.5, 2.0);
    Matrix expected = d;
    for (Index i = 0; i < r; ++i) {
      for (Index j = 0; j < c; ++j) expected(i, j) *= left[i] * right[j];
    }
    CHECK((s.scaled(left, right).to_dense() - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("identity and coordinate output") {
  CHECK(SparseMatrix::identity(3).to_dense() == Matrix::Identity(3, 3));
  std::ostringstream os;
  SparseMatrix::from_triplets(2, 2, {{1, 0, 0.5}, {0, 1, 2.0}}).write_coordinates(os);
  CHECK(os.str() == "0 1 2\n1 0 0.5\n");
}
