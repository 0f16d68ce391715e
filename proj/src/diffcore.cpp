#include "wavehdnn/diffcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wavehdnn/errors.hpp"
#include "wavehdnn/rng.hpp"

namespace wavehdnn::ad {
namespace {

Tape& tape_of(const Var& a) {
  WAVEHDNN_REQUIRE(a.valid(), "operation on an unbound Var");
  return *a.tape();
}

Tape& tape_of(const Var& a, const Var& b) {
  Tape& t = tape_of(a);
  WAVEHDNN_REQUIRE(b.tape() == &t, "operands recorded on different tapes");
  return t;
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  WAVEHDNN_REQUIRE(a.rows() == b.rows() && a.cols() == b.cols(),
                   std::string(op) + ": shape mismatch " + shape(a.value()) + " vs " + shape(b.value()));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const Matrix& Var::value() const {
  WAVEHDNN_REQUIRE(valid(), "Var::value on an unbound Var");
  return tape_->value(id_);
}

const Matrix& Var::grad() const {
  WAVEHDNN_REQUIRE(valid(), "Var::grad on an unbound Var");
  return tape_->grad(id_);
}

bool Var::requires_grad() const { return valid() && tape_->requires_grad(id_); }

Var Tape::constant(Matrix value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Matrix value, bool requires_grad) {
  return record(std::move(value), requires_grad, nullptr);
}

Var Tape::parameter(Parameter& p) {
  const bool trainable = record_ && p.requires_grad;
  Var v = record(p.value, trainable, nullptr);
  if (trainable) nodes_.back().param = &p;
  return v;
}

Var Tape::record(Matrix value, bool requires_grad, BackwardFn fn) {
  WAVEHDNN_REQUIRE(!backward_done_, "cannot record on a tape after backward; reset() it first");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Matrix& Tape::grad(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  WAVEHDNN_REQUIRE(backward_done_, "gradient requested before backward()");
  return n.grad;
}

void Tape::accumulate(int id, const Matrix& g) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (!n.requires_grad) return;
  WAVEHDNN_REQUIRE(g.rows() == n.value.rows() && g.cols() == n.value.cols(),
                   "accumulate: gradient shape " + shape(g) + " does not match value " + shape(n.value));
  if (n.has_grad) {
    n.grad += g;
  } else {
    n.grad = g;
    n.has_grad = true;
  }
}

void Tape::backward(const Var& loss) {
  WAVEHDNN_REQUIRE(loss.tape() == this, "backward: loss belongs to another tape");
  WAVEHDNN_REQUIRE(!backward_done_, "backward already ran on this tape; reset() before reuse");
  const Matrix& lv = value(loss.id());
  WAVEHDNN_REQUIRE(lv.rows() == 1 && lv.cols() == 1,
                   "backward: loss must be 1x1, got " + shape(lv));
  backward_done_ = true;
  accumulate(loss.id(), Matrix::Ones(1, 1));
  for (int i = loss.id(); i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.has_grad && n.backward) n.backward(*this, n.grad);
  }
  for (Node& n : nodes_) {
    if (!n.has_grad) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    if (n.param != nullptr) {
      Parameter& p = *n.param;
      if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) p.zero_grad();
      p.grad += n.grad;
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

// ---- operations ---------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  WAVEHDNN_REQUIRE(a.cols() == b.rows(),
                   "matmul: shape mismatch " + shape(a.value()) + " * " + shape(b.value()));
  Matrix out = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return t.record(std::move(out), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, const Matrix& g) {
                    if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
                    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
                  });
}

Var sparse_dense_matmul(const SparseMatrix& s, const Var& x) {
  Tape& t = tape_of(x);
  Matrix out = s.multiply(x.value());
  const int ix = x.id();
  const SparseMatrix* sp = &s;
  return t.record(std::move(out), x.requires_grad(), [ix, sp](Tape& tp, const Matrix& g) {
    tp.accumulate(ix, sp->multiply_transposed(g));
  });
}

Var linear_map(const Var& x, std::function<Matrix(const Matrix&)> forward,
               std::function<Matrix(const Matrix&)> adjoint) {
  Tape& t = tape_of(x);
  Matrix out = forward(x.value());
  const int ix = x.id();
  return t.record(std::move(out), x.requires_grad(),
                  [ix, adj = std::move(adjoint)](Tape& tp, const Matrix& g) {
                    tp.accumulate(ix, adj(g));
                  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "add");
  const int ia = a.id(), ib = b.id();
  return t.record(a.value() + b.value(), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, g);
                    tp.accumulate(ib, g);
                  });
}

Var subtract(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "subtract");
  const int ia = a.id(), ib = b.id();
  return t.record(a.value() - b.value(), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, const Matrix& g) {
                    tp.accumulate(ia, g);
                    if (tp.requires_grad(ib)) tp.accumulate(ib, -g);
                  });
}

Var multiply(const Var& a, const Var& b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a, b, "multiply");
  const int ia = a.id(), ib = b.id();
  return t.record(a.value().cwiseProduct(b.value()), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tp, const Matrix& g) {
                    if (tp.requires_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
                    if (tp.requires_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
                  });
}

Var scale(const Var& a, double c) {
  Tape& t = tape_of(a);
  const int ia = a.id();
  return t.record(c * a.value(), a.requires_grad(),
                  [ia, c](Tape& tp, const Matrix& g) { tp.accumulate(ia, c * g); });
}

Var add_row_broadcast(const Var& x, const Var& b) {
  Tape& t = tape_of(x, b);
  WAVEHDNN_REQUIRE(b.rows() == 1 && b.cols() == x.cols(),
                   "add_row_broadcast: bias " + shape(b.value()) + " vs input " + shape(x.value()));
  Matrix out = x.value();
  out.rowwise() += b.value().row(0);
  const int ix = x.id(), ib = b.id();
  return t.record(std::move(out), x.requires_grad() || b.requires_grad(),
                  [ix, ib](Tape& tp, const Matrix& g) {
                    tp.accumulate(ix, g);
                    if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
                  });
}

Var scale_rows(const Var& x, const Var& v) {
  Tape& t = tape_of(x, v);
  WAVEHDNN_REQUIRE(v.cols() == 1 && v.rows() == x.rows(),
                   "scale_rows: scale " + shape(v.value()) + " vs input " + shape(x.value()));
  Matrix out = x.value();
  out.array().colwise() *= v.value().col(0).array();
  const int ix = x.id(), iv = v.id();
  return t.record(std::move(out), x.requires_grad() || v.requires_grad(),
                  [ix, iv](Tape& tp, const Matrix& g) {
                    if (tp.requires_grad(ix)) {
                      Matrix gx = g;
                      gx.array().colwise() *= tp.value(iv).col(0).array();
                      tp.accumulate(ix, gx);
                    }
                    if (tp.requires_grad(iv)) {
                      tp.accumulate(iv, g.cwiseProduct(tp.value(ix)).rowwise().sum());
                    }
                  });
}

Var relu(const Var& x) {
  Tape& t = tape_of(x);
  const int ix = x.id();
  return t.record(x.value().cwiseMax(0.0), x.requires_grad(), [ix](Tape& tp, const Matrix& g) {
    // Subgradient 0 at x == 0.
    tp.accumulate(ix, (tp.value(ix).array() > 0.0).select(g, 0.0));
  });
}

Var sigmoid(const Var& x) {
  Tape& t = tape_of(x);
  Matrix out = x.value().unaryExpr([](double v) { return stable_sigmoid(v); });
  const int ix = x.id();
  return t.record(out, x.requires_grad(), [ix, out](Tape& tp, const Matrix& g) {
    tp.accumulate(ix, g.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix())));
  });
}

Var log(const Var& x) {
  Tape& t = tape_of(x);
  const int ix = x.id();
  return t.record(x.value().array().log().matrix(), x.requires_grad(),
                  [ix](Tape& tp, const Matrix& g) {
                    tp.accumulate(ix, g.cwiseQuotient(tp.value(ix)));
                  });
}

Var exp(const Var& x) {
  Tape& t = tape_of(x);
  const int ix = x.id();
  Matrix out = x.value().array().exp().matrix();
  return t.record(out, x.requires_grad(), [ix, out](Tape& tp, const Matrix& g) {
    tp.accumulate(ix, g.cwiseProduct(out));
  });
}

Var softplus(const Var& x) {
  Tape& t = tape_of(x);
  const int ix = x.id();
  Matrix out = x.value().unaryExpr(
      [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); });
  return t.record(std::move(out), x.requires_grad(), [ix](Tape& tp, const Matrix& g) {
    tp.accumulate(ix, g.cwiseProduct(tp.value(ix).unaryExpr([](double v) { return stable_sigmoid(v); })));
  });
}

Var row_layer_norm(const Var& x, double eps) {
  Tape& t = tape_of(x);
  WAVEHDNN_REQUIRE(x.cols() >= 1, "row_layer_norm: input has no columns");
  const Matrix& xv = x.value();
  const Index d = xv.cols();
  Matrix y(xv.rows(), d);
  Vector inv_std(xv.rows());
  for (Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const auto centered = xv.row(r).array() - mean;
    const double var = centered.square().sum() / static_cast<double>(d);
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    y.row(r) = (centered * inv_std(r)).matrix();
  }
  const int ix = x.id();
  return t.record(y, x.requires_grad(), [ix, y, inv_std](Tape& tp, const Matrix& g) {
    Matrix gx(g.rows(), g.cols());
    const double d = static_cast<double>(g.cols());
    for (Index r = 0; r < g.rows(); ++r) {
      const double mean_g = g.row(r).sum() / d;
      const double mean_gy = g.row(r).dot(y.row(r)) / d;
      gx.row(r) = inv_std(r) * (g.row(r).array() - mean_g - y.row(r).array() * mean_gy).matrix();
    }
    tp.accumulate(ix, gx);
  });
}

Var row_l2_normalize(const Var& x, double eps) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Vector norms(xv.rows());
  Matrix y(xv.rows(), xv.cols());
  for (Index r = 0; r < xv.rows(); ++r) {
    norms(r) = std::sqrt(xv.row(r).squaredNorm() + eps * eps);
    y.row(r) = xv.row(r) / norms(r);
  }
  const int ix = x.id();
  return t.record(y, x.requires_grad(), [ix, y, norms](Tape& tp, const Matrix& g) {
    const Matrix& xv = tp.value(ix);
    Matrix gx(g.rows(), g.cols());
    for (Index r = 0; r < g.rows(); ++r) {
      const double n = norms(r);
      gx.row(r) = g.row(r) / n - xv.row(r) * (xv.row(r).dot(g.row(r)) / (n * n * n));
    }
    tp.accumulate(ix, gx);
  });
}

Var concat_columns(const std::vector<Var>& parts) {
  WAVEHDNN_REQUIRE(!parts.empty(), "concat_columns: no inputs");
  Tape& t = tape_of(parts.front());
  Index cols = 0;
  bool needs = false;
  for (const Var& p : parts) {
    WAVEHDNN_REQUIRE(p.tape() == &t, "concat_columns: operands on different tapes");
    WAVEHDNN_REQUIRE(p.rows() == parts.front().rows(), "concat_columns: row count mismatch");
    cols += p.cols();
    needs = needs || p.requires_grad();
  }
  Matrix out(parts.front().rows(), cols);
  std::vector<std::pair<int, Index>> spans;  // (id, start column)
  Index at = 0;
  for (const Var& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    spans.emplace_back(p.id(), at);
    at += p.cols();
  }
  return t.record(std::move(out), needs, [spans](Tape& tp, const Matrix& g) {
    for (const auto& [id, start] : spans) {
      if (tp.requires_grad(id)) tp.accumulate(id, g.middleCols(start, tp.value(id).cols()));
    }
  });
}

Var mean_over_rows(const Var& x) {
  Tape& t = tape_of(x);
  WAVEHDNN_REQUIRE(x.rows() >= 1, "mean_over_rows: empty input");
  const int ix = x.id();
  const Index n = x.rows();
  return t.record(x.value().colwise().mean(), x.requires_grad(), [ix, n](Tape& tp, const Matrix& g) {
    tp.accumulate(ix, g.replicate(n, 1) / static_cast<double>(n));
  });
}

Var row_sum(const Var& x) {
  Tape& t = tape_of(x);
  const int ix = x.id();
  const Index c = x.cols();
  return t.record(x.value().rowwise().sum(), x.requires_grad(), [ix, c](Tape& tp, const Matrix& g) {
    tp.accumulate(ix, g.replicate(1, c));
  });
}

Var sum_all(const Var& x) {
  Tape& t = tape_of(x);
  const int ix = x.id();
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  const Index r = x.rows(), c = x.cols();
  return t.record(std::move(out), x.requires_grad(), [ix, r, c](Tape& tp, const Matrix& g) {
    tp.accumulate(ix, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var mean_all(const Var& x) {
  WAVEHDNN_REQUIRE(x.value().size() > 0, "mean_all: empty input");
  return scale(sum_all(x), 1.0 / static_cast<double>(x.value().size()));
}

Var gather_rows(const Var& x, const std::vector<Index>& rows) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  Matrix out(static_cast<Index>(rows.size()), xv.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    WAVEHDNN_REQUIRE(rows[k] >= 0 && rows[k] < xv.rows(), "gather_rows: index out of range");
    out.row(static_cast<Index>(k)) = xv.row(rows[k]);
  }
  const int ix = x.id();
  const Index n = xv.rows();
  return t.record(std::move(out), x.requires_grad(), [ix, rows, n](Tape& tp, const Matrix& g) {
    Matrix gx = Matrix::Zero(n, g.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) gx.row(rows[k]) += g.row(static_cast<Index>(k));
    tp.accumulate(ix, gx);
  });
}

Var scatter_add_rows(const Var& x, const std::vector<Index>& rows, Index num_rows) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  WAVEHDNN_REQUIRE(static_cast<Index>(rows.size()) == xv.rows(),
                   "scatter_add_rows: one target row per input row required");
  Matrix out = Matrix::Zero(num_rows, xv.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    WAVEHDNN_REQUIRE(rows[k] >= 0 && rows[k] < num_rows, "scatter_add_rows: index out of range");
    out.row(rows[k]) += xv.row(static_cast<Index>(k));
  }
  const int ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix, rows](Tape& tp, const Matrix& g) {
    Matrix gx(static_cast<Index>(rows.size()), g.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) gx.row(static_cast<Index>(k)) = g.row(rows[k]);
    tp.accumulate(ix, gx);
  });
}

Var logsumexp_rows(const Var& x) {
  Tape& t = tape_of(x);
  const Matrix& xv = x.value();
  WAVEHDNN_REQUIRE(xv.cols() >= 1, "logsumexp_rows: empty rows");
  Matrix out(xv.rows(), 1);
  Matrix soft(xv.rows(), xv.cols());
  for (Index r = 0; r < xv.rows(); ++r) {
    const double m = xv.row(r).maxCoeff();
    soft.row(r) = (xv.row(r).array() - m).exp().matrix();
    const double s = soft.row(r).sum();
    out(r, 0) = m + std::log(s);
    soft.row(r) /= s;
  }
  const int ix = x.id();
  return t.record(std::move(out), x.requires_grad(), [ix, soft](Tape& tp, const Matrix& g) {
    Matrix gx = soft;
    gx.array().colwise() *= g.col(0).array();
    tp.accumulate(ix, gx);
  });
}

Var transpose(const Var& x) {
  Tape& t = tape_of(x);
  const int ix = x.id();
  return t.record(x.value().transpose(), x.requires_grad(), [ix](Tape& tp, const Matrix& g) {
    tp.accumulate(ix, g.transpose());
  });
}

// ---- gradient checking ---------------------------------------------------

GradCheckReport check_gradients(const std::function<Var(Tape&)>& build_loss,
                                const std::vector<Parameter*>& params, double h,
                                Index samples_per_param, std::uint64_t seed) {
  GradCheckReport report;
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var loss = build_loss(tape);
    if (!std::isfinite(loss.value()(0, 0))) {
      report.finite = false;
      return report;
    }
    tape.backward(loss);
  }
  auto eval = [&]() {
    Tape tape;
    return build_loss(tape).value()(0, 0);
  };
  Rng rng(seed);
  for (Parameter* p : params) {
    if (!p->requires_grad) continue;
    ParamCheck pc;
    pc.name = p->name;
    const Index total = p->value.size();
    std::vector<Index> entries(static_cast<std::size_t>(total));
    for (Index k = 0; k < total; ++k) entries[k] = k;
    if (total > samples_per_param) {
      rng.shuffle(entries);
      entries.resize(static_cast<std::size_t>(samples_per_param));
      std::sort(entries.begin(), entries.end());
    }
    for (Index flat : entries) {
      const Index r = flat / p->value.cols();
      const Index c = flat % p->value.cols();
      const double original = p->value(r, c);
      p->value(r, c) = original + h;
      const double up = eval();
      p->value(r, c) = original - h;
      const double down = eval();
      p->value(r, c) = original;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = p->grad(r, c);
      ++pc.entries_checked;
      if (!std::isfinite(up) || !std::isfinite(down) || !std::isfinite(analytic)) {
        pc.finite = false;
        pc.worst_row = r;
        pc.worst_col = c;
        continue;
      }
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      if (rel > pc.max_rel_error || pc.worst_row < 0) {
        pc.max_rel_error = std::max(rel, pc.max_rel_error);
        pc.worst_row = r;
        pc.worst_col = c;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, pc.max_rel_error);
    report.finite = report.finite && pc.finite;
    report.params.push_back(std::move(pc));
  }
  return report;
}

}  // namespace wavehdnn::ad
