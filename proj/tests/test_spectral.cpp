#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "wavehdnn/data.hpp"
#include "wavehdnn/errors.hpp"
#include "wavehdnn/hypergraph.hpp"
#include "wavehdnn/rng.hpp"
#include "wavehdnn/spectral.hpp"

using namespace wavehdnn;
using spectral::Direction;

namespace {

SparseMatrix laplacian_of(Index users, Index items, const std::vector<data::Interaction>& train) {
  const auto ds = data::make_dataset(users, items, train, {}, {});
  return hypergraph::normalized_laplacian(hypergraph::build_views(ds).first);
}

SparseMatrix random_laplacian(Rng& rng, Index max_nodes) {
  const Index n = 2 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(max_nodes - 1)));
  const Index m = 2 + static_cast<Index>(rng.below(40));
  std::vector<data::Interaction> train;
  for (Index u = 0; u < n; ++u) {
    const Index k = 1 + static_cast<Index>(rng.below(4));
    std::vector<Index> picked;
    for (Index j = 0; j < k; ++j) {
      const Index e = static_cast<Index>(rng.below(static_cast<std::uint64_t>(m)));
      if (std::find(picked.begin(), picked.end(), e) == picked.end()) picked.push_back(e);
    }
    for (Index e : picked) train.emplace_back(u, e);
  }
  return laplacian_of(n, m, train);
}

// exp(c * A) by scaling and squaring of a truncated Taylor series; shares no
// code with the eigendecomposition route.
Matrix expm(const Matrix& a, double c) {
  const Matrix s = c * a;
  const double norm = s.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  while (norm / std::pow(2.0, squarings) > 0.25) ++squarings;
  const Matrix x = s / std::pow(2.0, squarings);
  Matrix term = Matrix::Identity(a.rows(), a.cols());
  Matrix sum = term;
  for (int k = 1; k <= 30; ++k) {
    term = term * x / static_cast<double>(k);
    sum += term;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

double rel_inf(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-300);
}

}  // namespace

TEST_CASE("two nodes in one hyperedge at s = ln 2") {
  const SparseMatrix lap = laplacian_of(2, 1, {{0, 0}, {1, 0}});
  const auto op = spectral::exact_wavelet(lap, std::log(2.0));
  Matrix expected(2, 2);
  expected << 0.75, 0.25, 0.25, 0.75;
  CHECK((op.dense(Direction::forward) - expected).cwiseAbs().maxCoeff() < 1e-12);
  Matrix inverse(2, 2);
  inverse << 1.5, -0.5, -0.5, 1.5;
  CHECK((op.dense(Direction::inverse) - inverse).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Laplacian spectrum lies in [0, 2] and the exact pair inverts") {
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const SparseMatrix lap = random_laplacian(rng, 64);
    const Matrix dense = lap.to_dense();
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Vector ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(dense).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-10);
    CHECK(ev.maxCoeff() <= 2.0 + 1e-10);
    const auto op = spectral::exact_wavelet(lap, 1.0);
    const Matrix prod = op.dense(Direction::forward) * op.dense(Direction::inverse);
    CHECK((prod - Matrix::Identity(dense.rows(), dense.rows())).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("exact wavelet equals the matrix exponential") {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const SparseMatrix lap = random_laplacian(rng, 30);
    for (double s : {0.3, 1.0, 2.5}) {
      const auto op = spectral::exact_wavelet(lap, s);
      CHECK(rel_inf(op.dense(Direction::forward), expm(lap.to_dense(), -s)) < 1e-10);
      CHECK(rel_inf(op.dense(Direction::inverse), expm(lap.to_dense(), s)) < 1e-10);
    }
  }
}

TEST_CASE("Chebyshev order 20 matches exact application") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const SparseMatrix lap = random_laplacian(rng, 64);
    const auto exact = spectral::exact_wavelet(lap, 1.0);
    const auto cheb = spectral::chebyshev_wavelet(lap, 1.0, 20);
    Matrix x(lap.rows(), 3);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
    for (Direction dir : {Direction::forward, Direction::inverse}) {
      CHECK(rel_inf(cheb.apply(dir, x), exact.apply(dir, x)) < 1e-3);
    }
    CHECK(cheb.lambda_max() <= 2.0);
    CHECK(cheb.order() == 20);
  }
}

TEST_CASE("Chebyshev coefficients reproduce smooth functions") {
  const auto c = spectral::chebyshev_coefficients([](double l) { return 3.0 - 2.0 * l; }, 2.0, 4);
  // 3 - 2l on [0, 2] is 1 - 2x on [-1, 1]: c0 = 1, c1 = -2.
  CHECK(c[0] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(c[1] == doctest::Approx(-2.0).epsilon(1e-13));
  for (std::size_t k = 2; k < c.size(); ++k) CHECK(std::abs(c[k]) < 1e-13);
  const auto e = spectral::chebyshev_coefficients([](double l) { return std::exp(-l); }, 2.0, 10);
  for (double l : {0.0, 0.37, 1.0, 1.99}) {
    CHECK(spectral::chebyshev_evaluate(e, l, 2.0) == doctest::Approx(std::exp(-l)).epsilon(1e-9));
  }
}

TEST_CASE("approximation error shrinks with the order") {
  const SparseMatrix lap = laplacian_of(3, 2, {{0, 0}, {1, 0}, {1, 1}, {2, 1}});
  double previous = 1e9;
  for (int k : {2, 4, 8, 16}) {
    const auto op = spectral::chebyshev_wavelet(lap, 1.0, k);
    CHECK(op.approximation_error(Direction::forward) < previous);
    previous = op.approximation_error(Direction::forward);
  }
  CHECK(previous < 1e-12);
}

TEST_CASE("power iteration finds the top eigenvalue") {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const SparseMatrix lap = random_laplacian(rng, 40);
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(lap.to_dense()).eigenvalues().maxCoeff();
    CHECK(spectral::estimate_lambda_max(lap) == doctest::Approx(top).epsilon(1e-4));
  }
}

TEST_CASE("invalid settings are rejected") {
  const SparseMatrix lap = laplacian_of(2, 1, {{0, 0}, {1, 0}});
  CHECK_THROWS_AS(spectral::chebyshev_wavelet(lap, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(spectral::exact_wavelet(lap, -1.0), ConfigError);
  CHECK_THROWS_AS(spectral::exact_wavelet(lap, 1.0, 1), ConfigError);
  const auto op = spectral::exact_wavelet(lap, 1.0);
  CHECK_THROWS_AS(op.apply(Direction::forward, Matrix::Zero(3, 1)), ContractViolation);
}
