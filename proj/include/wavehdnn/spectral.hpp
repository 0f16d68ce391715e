#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "wavehdnn/sparse.hpp"
#include "wavehdnn/types.hpp"

namespace wavehdnn::spectral {

enum class Mode { exact, chebyshev };
enum class Direction { forward, inverse };

/// Heat-kernel wavelet pair on a hypergraph Laplacian:
///   forward  Theta  = U diag(exp(-s*lambda)) U^T
///   inverse  Theta' = U diag(exp(+s*lambda)) U^T
/// Either held through a dense eigendecomposition or as Chebyshev expansions
/// applied matrix-free. Immutable; apply() is safe to call concurrently.
class WaveletOperator {
 public:
  Mode mode() const { return mode_; }
  double scale() const { return scale_; }
  Index dim() const { return dim_; }

  const Matrix& eigenvectors() const { return eigenvectors_; }
  const Vector& eigenvalues() const { return eigenvalues_; }

  int order() const { return static_cast<int>(forward_coeffs_.size()) - 1; }
  double lambda_max() const { return lambda_max_; }
  const std::vector<double>& coefficients(Direction dir) const {
    return dir == Direction::forward ? forward_coeffs_ : inverse_coeffs_;
  }
  /// Max |p(lambda) - exp(-+s lambda)| over a dense grid on [0, lambda_max].
  double approximation_error(Direction dir) const {
    return dir == Direction::forward ? forward_error_ : inverse_error_;
  }

  Matrix apply(Direction dir, const Matrix& x) const;

  /// Materializes the operator (dim x dim). For tests and small graphs.
  Matrix dense(Direction dir) const;

 private:
  friend WaveletOperator exact_wavelet(const SparseMatrix&, double, Index);
  friend WaveletOperator chebyshev_wavelet(const SparseMatrix&, double, int);

  Mode mode_ = Mode::exact;
  double scale_ = 0.0;
  Index dim_ = 0;
  Matrix eigenvectors_;
  Vector eigenvalues_;
  Vector forward_gain_;
  Vector inverse_gain_;
  std::shared_ptr<const SparseMatrix> laplacian_;
  double lambda_max_ = 0.0;
  std::vector<double> forward_coeffs_;
  std::vector<double> inverse_coeffs_;
  double forward_error_ = 0.0;
  double inverse_error_ = 0.0;
};

inline constexpr Index kDefaultDenseLimit = 4096;
inline constexpr int kDefaultChebyshevOrder = 10;

/// Dense eigendecomposition route. Throws ConfigError when L exceeds
/// `dense_limit` rows and NumericError if the eigensolver fails.
WaveletOperator exact_wavelet(const SparseMatrix& laplacian, double scale,
                              Index dense_limit = kDefaultDenseLimit);

/// Matrix-free Chebyshev route of order K on [0, lambda_max].
WaveletOperator chebyshev_wavelet(const SparseMatrix& laplacian, double scale,
                                  int order = kDefaultChebyshevOrder);

/// Free-function form of WaveletOperator::apply.
Matrix apply(const WaveletOperator& op, Direction dir, const Matrix& x);

/// Power-iteration estimate of the largest eigenvalue of a symmetric PSD matrix.
double estimate_lambda_max(const SparseMatrix& laplacian, int max_iterations = 1000,
                           double tolerance = 1e-10);

/// Chebyshev projection of f on [0, lambda_max] with 2K+2 Chebyshev-Gauss nodes.
/// Returns c_0..c_K with c_0 already halved, so p(x) = sum_k c_k T_k(x).
std::vector<double> chebyshev_coefficients(const std::function<double(double)>& f,
                                           double lambda_max, int order);

/// Evaluates the expansion at a scalar lambda in [0, lambda_max].
double chebyshev_evaluate(const std::vector<double>& coeffs, double lambda, double lambda_max);

}  // namespace wavehdnn::spectral
