#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "wavehdnn/sparse.hpp"
#include "wavehdnn/types.hpp"

namespace wavehdnn::ad {

/// Trainable tensor that outlives individual tapes. Backward adds into `grad`.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool requires_grad = true;

  Parameter() = default;
  Parameter(std::string n, Matrix v, bool trainable = true)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())),
        requires_grad(trainable) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Gradient of the last backward() w.r.t. this value; zeros if unreached.
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Define-by-run record of operations. Nodes are appended in creation order,
/// which is a topological order; backward() walks them in reverse exactly once.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;

  /// With record_gradients == false, parameters bind as constants and no
  /// backward closures are kept (inference).
  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value, bool requires_grad = true);
  /// Leaf bound to a Parameter; its gradient is added into p.grad on backward.
  /// Frozen parameters (requires_grad == false) become constants.
  Var parameter(Parameter& p);

  /// Records an op output. `fn` receives the upstream gradient and must call
  /// accumulate() for each input. Pass requires_grad = false to skip recording fn.
  Var record(Matrix value, bool requires_grad, BackwardFn fn);

  /// Reverse sweep from a 1x1 loss. Throws ContractViolation if the loss is not
  /// scalar or if backward already ran on this tape.
  void backward(const Var& loss);

  /// Discards all nodes so the tape can be reused.
  void reset();

  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Matrix& grad(int id) const;
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  void accumulate(int id, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };
  std::vector<Node> nodes_;
  bool record_ = true;
  bool backward_done_ = false;
};

// ---- operations ---------------------------------------------------------

Var matmul(const Var& a, const Var& b);
/// S * x for a constant sparse S. S must outlive the tape's backward pass.
Var sparse_dense_matmul(const SparseMatrix& s, const Var& x);
/// Applies a constant linear map and its adjoint (for backward). Both must
/// outlive the tape's backward pass.
Var linear_map(const Var& x, std::function<Matrix(const Matrix&)> forward,
               std::function<Matrix(const Matrix&)> adjoint);

Var add(const Var& a, const Var& b);
Var subtract(const Var& a, const Var& b);
Var multiply(const Var& a, const Var& b);
Var scale(const Var& a, double c);
/// x + b with b (1 x cols) broadcast over rows.
Var add_row_broadcast(const Var& x, const Var& b);
/// diag(v) * x with v (rows x 1).
Var scale_rows(const Var& x, const Var& v);

Var relu(const Var& x);
Var sigmoid(const Var& x);
Var log(const Var& x);
Var exp(const Var& x);
/// log(1 + e^x), evaluated stably.
Var softplus(const Var& x);

/// Per-row (x - mean) / sqrt(var + eps), population variance, no affine terms.
Var row_layer_norm(const Var& x, double eps = 1e-5);
/// Per-row x / sqrt(|x|^2 + eps^2).
Var row_l2_normalize(const Var& x, double eps = 1e-12);

Var concat_columns(const std::vector<Var>& parts);
/// 1 x cols column means.
Var mean_over_rows(const Var& x);
/// rows x 1 row sums.
Var row_sum(const Var& x);
/// 1 x 1 sum of all entries.
Var sum_all(const Var& x);
/// 1 x 1 mean of all entries.
Var mean_all(const Var& x);

Var gather_rows(const Var& x, const std::vector<Index>& rows);
/// out (num_rows x cols) with out[rows[k]] += x[k].
Var scatter_add_rows(const Var& x, const std::vector<Index>& rows, Index num_rows);
/// rows x 1 stable log-sum-exp of each row.
Var logsumexp_rows(const Var& x);
Var transpose(const Var& x);

// ---- gradient checking ---------------------------------------------------

struct ParamCheck {
  std::string name;
  Index entries_checked = 0;
  double max_rel_error = 0.0;
  Index worst_row = -1;
  Index worst_col = -1;
  bool finite = true;
};

struct GradCheckReport {
  std::vector<ParamCheck> params;
  double max_rel_error = 0.0;
  bool finite = true;
  bool passed(double tol) const { return finite && max_rel_error < tol; }
};

/// Compares reverse-mode gradients with central differences
/// (f(theta+h) - f(theta-h)) / 2h on up to `samples_per_param` entries per
/// trainable parameter. Relative error uses max(|a|, |b|, 1e-8) as denominator.
/// `build_loss` must bind parameters through Tape::parameter and be deterministic.
/// Frozen parameters are skipped.
GradCheckReport check_gradients(const std::function<Var(Tape&)>& build_loss,
                                const std::vector<Parameter*>& params, double h = 1e-6,
                                Index samples_per_param = 20, std::uint64_t seed = 0);

}  // namespace wavehdnn::ad
