#include "wavehdnn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "wavehdnn/errors.hpp"
#include "wavehdnn/log.hpp"
#include "wavehdnn/rng.hpp"

namespace wavehdnn::spectral {
namespace {

void check_square(const SparseMatrix& l, const char* who) {
  WAVEHDNN_REQUIRE(l.rows() == l.cols(), std::string(who) + ": Laplacian must be square");
}

double max_grid_error(const std::vector<double>& coeffs, double lambda_max,
                      const std::function<double(double)>& f) {
  constexpr int kGrid = 2001;
  double worst = 0.0;
  for (int g = 0; g < kGrid; ++g) {
    const double lambda = lambda_max * g / (kGrid - 1);
    worst = std::max(worst, std::abs(chebyshev_evaluate(coeffs, lambda, lambda_max) - f(lambda)));
  }
  return worst;
}

}  // namespace

double estimate_lambda_max(const SparseMatrix& laplacian, int max_iterations, double tolerance) {
  check_square(laplacian, "estimate_lambda_max");
  const Index n = laplacian.rows();
  if (n == 0) return 0.0;
  Rng rng(0x5eed);
  Matrix v(n, 1);
  for (Index i = 0; i < n; ++i) v(i, 0) = rng.uniform(0.5, 1.5) * (i % 2 == 0 ? 1.0 : -1.0);
  v /= v.norm();
  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Matrix w = laplacian.multiply(v);
    const double rayleigh = (v.transpose() * w)(0, 0);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    if (it > 0 && std::abs(rayleigh - estimate) <= tolerance * std::max(1.0, std::abs(rayleigh))) {
      return std::max(rayleigh, norm);
    }
    estimate = rayleigh;
  }
  return estimate;
}

std::vector<double> chebyshev_coefficients(const std::function<double(double)>& f,
                                           double lambda_max, int order) {
  if (order < 1) throw ConfigError("chebyshev order must be >= 1");
  const int nodes = 2 * order + 2;
  std::vector<double> fx(static_cast<std::size_t>(nodes));
  std::vector<double> theta(static_cast<std::size_t>(nodes));
  for (int j = 0; j < nodes; ++j) {
    theta[j] = std::numbers::pi * (j + 0.5) / nodes;
    const double x = std::cos(theta[j]);
    fx[j] = f((x + 1.0) * lambda_max / 2.0);
  }
  std::vector<double> c(static_cast<std::size_t>(order + 1), 0.0);
  for (int k = 0; k <= order; ++k) {
    double sum = 0.0;
    for (int j = 0; j < nodes; ++j) sum += fx[j] * std::cos(k * theta[j]);
    c[k] = 2.0 * sum / nodes;
  }
  c[0] *= 0.5;
  return c;
}

double chebyshev_evaluate(const std::vector<double>& coeffs, double lambda, double lambda_max) {
  const double x = lambda_max > 0.0 ? 2.0 * lambda / lambda_max - 1.0 : -1.0;
  double t_prev = 1.0, t_cur = x;
  double acc = coeffs[0];
  if (coeffs.size() > 1) acc += coeffs[1] * x;
  for (std::size_t k = 2; k < coeffs.size(); ++k) {
    const double t_next = 2.0 * x * t_cur - t_prev;
    acc += coeffs[k] * t_next;
    t_prev = t_cur;
    t_cur = t_next;
  }
  return acc;
}

WaveletOperator exact_wavelet(const SparseMatrix& laplacian, double scale, Index dense_limit) {
  check_square(laplacian, "exact_wavelet");
  if (scale < 0.0) throw ConfigError("wavelet scale must be >= 0");
  if (laplacian.rows() > dense_limit) {
    throw ConfigError("exact_wavelet: " + std::to_string(laplacian.rows()) +
                      " nodes exceeds the dense limit of " + std::to_string(dense_limit) +
                      "; use chebyshev mode");
  }
  const Matrix dense = laplacian.to_dense();
  WAVEHDNN_REQUIRE((dense - dense.transpose()).cwiseAbs().maxCoeff() <= 1e-12 || dense.size() == 0,
                   "exact_wavelet: Laplacian is not symmetric");
  WaveletOperator op;
  op.mode_ = Mode::exact;
  op.scale_ = scale;
  op.dim_ = laplacian.rows();
  if (op.dim_ > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    if (solver.info() != Eigen::Success) throw NumericError("exact_wavelet: eigensolver did not converge");
    op.eigenvectors_ = solver.eigenvectors();
    op.eigenvalues_ = solver.eigenvalues().cwiseMax(0.0);
  }
  op.forward_gain_ = (-scale * op.eigenvalues_.array()).exp().matrix();
  op.inverse_gain_ = (scale * op.eigenvalues_.array()).exp().matrix();
  if (op.dim_ > 0) {
    std::ostringstream msg;
    msg << "exact wavelet: n=" << op.dim_ << " s=" << scale
        << " lambda in [" << op.eigenvalues_.minCoeff() << ", " << op.eigenvalues_.maxCoeff() << "]";
    log::debug(msg.str());
  }
  return op;
}

WaveletOperator chebyshev_wavelet(const SparseMatrix& laplacian, double scale, int order) {
  check_square(laplacian, "chebyshev_wavelet");
  if (order < 1) throw ConfigError("chebyshev order must be >= 1");
  if (scale < 0.0) throw ConfigError("wavelet scale must be >= 0");
  WaveletOperator op;
  op.mode_ = Mode::chebyshev;
  op.scale_ = scale;
  op.dim_ = laplacian.rows();
  op.laplacian_ = std::make_shared<const SparseMatrix>(laplacian);
  // Normalized hypergraph Laplacians have spectrum in [0, 2], so 2 stays a valid bound.
  op.lambda_max_ = std::min(1.01 * estimate_lambda_max(laplacian), 2.0);
  if (op.lambda_max_ <= 0.0) op.lambda_max_ = 2.0;
  auto fwd = [scale](double l) { return std::exp(-scale * l); };
  auto inv = [scale](double l) { return std::exp(scale * l); };
  op.forward_coeffs_ = chebyshev_coefficients(fwd, op.lambda_max_, order);
  op.inverse_coeffs_ = chebyshev_coefficients(inv, op.lambda_max_, order);
  op.forward_error_ = max_grid_error(op.forward_coeffs_, op.lambda_max_, fwd);
  op.inverse_error_ = max_grid_error(op.inverse_coeffs_, op.lambda_max_, inv);
  std::ostringstream msg;
  msg << "chebyshev wavelet: n=" << op.dim_ << " K=" << order << " s=" << scale
      << " lambda_max=" << op.lambda_max_ << " err_fwd=" << op.forward_error_
      << " err_inv=" << op.inverse_error_;
  log::debug(msg.str());
  return op;
}

Matrix WaveletOperator::apply(Direction dir, const Matrix& x) const {
  WAVEHDNN_REQUIRE(x.rows() == dim_, "wavelet apply: input has " + std::to_string(x.rows()) +
                                         " rows, operator dimension is " + std::to_string(dim_));
  if (mode_ == Mode::exact) {
    const Vector& gain = dir == Direction::forward ? forward_gain_ : inverse_gain_;
    Matrix spectral = eigenvectors_.transpose() * x;
    spectral.array().colwise() *= gain.array();
    return eigenvectors_ * spectral;
  }
  const auto& c = coefficients(dir);
  const double alpha = 2.0 / lambda_max_;
  auto rescaled = [&](const Matrix& v) -> Matrix { return alpha * laplacian_->multiply(v) - v; };
  Matrix t_prev = x;
  Matrix out = c[0] * x;
  if (c.size() == 1) return out;
  Matrix t_cur = rescaled(x);
  out += c[1] * t_cur;
  for (std::size_t k = 2; k < c.size(); ++k) {
    Matrix t_next = 2.0 * rescaled(t_cur) - t_prev;
    out += c[k] * t_next;
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
  }
  return out;
}

Matrix WaveletOperator::dense(Direction dir) const {
  return apply(dir, Matrix::Identity(dim_, dim_));
}

Matrix apply(const WaveletOperator& op, Direction dir, const Matrix& x) { return op.apply(dir, x); }

}  // namespace wavehdnn::spectral
