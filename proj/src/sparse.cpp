#include "wavehdnn/sparse.hpp"

#include <algorithm>
#include <iomanip>
#include <string>

#include "wavehdnn/errors.hpp"

namespace wavehdnn {

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
  WAVEHDNN_REQUIRE(rows >= 0 && cols >= 0, "SparseMatrix: negative shape");
  for (const auto& t : triplets) {
    WAVEHDNN_REQUIRE(t.row >= 0 && t.row < rows && t.col >= 0 && t.col < cols,
                     "SparseMatrix: triplet out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  std::size_t k = 0;
  while (k < triplets.size()) {
    const Index r = triplets[k].row;
    const Index c = triplets[k].col;
    double v = 0.0;
    for (; k < triplets.size() && triplets[k].row == r && triplets[k].col == c; ++k) {
      v += triplets[k].value;
    }
    if (v != 0.0) {
      m.col_indices_.push_back(c);
      m.values_.push_back(v);
      ++m.row_offsets_[static_cast<std::size_t>(r + 1)];
    }
  }
  for (Index r = 0; r < rows; ++r) {
    m.row_offsets_[static_cast<std::size_t>(r + 1)] += m.row_offsets_[static_cast<std::size_t>(r)];
  }
  return m;
}

SparseMatrix SparseMatrix::from_csr(Index rows, Index cols, std::vector<Index> row_offsets,
                                    std::vector<Index> col_indices, std::vector<double> values) {
  WAVEHDNN_REQUIRE(rows >= 0 && cols >= 0, "SparseMatrix: negative shape");
  WAVEHDNN_REQUIRE(row_offsets.size() == static_cast<std::size_t>(rows + 1) && row_offsets.front() == 0,
                   "SparseMatrix: row_offsets must have rows+1 entries starting at 0");
  WAVEHDNN_REQUIRE(col_indices.size() == values.size() &&
                       static_cast<Index>(values.size()) == row_offsets.back(),
                   "SparseMatrix: array lengths disagree");
  for (Index r = 0; r < rows; ++r) {
    const Index b = row_offsets[static_cast<std::size_t>(r)];
    const Index e = row_offsets[static_cast<std::size_t>(r + 1)];
    WAVEHDNN_REQUIRE(b <= e, "SparseMatrix: row_offsets not monotone");
    for (Index k = b; k < e; ++k) {
      const Index c = col_indices[static_cast<std::size_t>(k)];
      WAVEHDNN_REQUIRE(c >= 0 && c < cols, "SparseMatrix: column index out of range");
      WAVEHDNN_REQUIRE(k == b || col_indices[static_cast<std::size_t>(k - 1)] < c,
                       "SparseMatrix: column indices not strictly increasing");
      WAVEHDNN_REQUIRE(values[static_cast<std::size_t>(k)] != 0.0, "SparseMatrix: stored zero");
    }
  }
  SparseMatrix m;
  m.num_rows_ = rows;
  m.num_cols_ = cols;
  m.row_offsets_ = std::move(row_offsets);
  m.col_indices_ = std::move(col_indices);
  m.values_ = std::move(values);
  return m;
}

SparseMatrix SparseMatrix::identity(Index n) {
  std::vector<Index> offsets(static_cast<std::size_t>(n + 1));
  std::vector<Index> cols(static_cast<std::size_t>(n));
  for (Index i = 0; i <= n; ++i) offsets[static_cast<std::size_t>(i)] = i;
  for (Index i = 0; i < n; ++i) cols[static_cast<std::size_t>(i)] = i;
  return from_csr(n, n, std::move(offsets), std::move(cols),
                  std::vector<double>(static_cast<std::size_t>(n), 1.0));
}

double SparseMatrix::at(Index r, Index c) const {
  WAVEHDNN_REQUIRE(r >= 0 && r < num_rows_ && c >= 0 && c < num_cols_, "SparseMatrix::at out of range");
  const auto b = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(r)];
  const auto e = col_indices_.begin() + row_offsets_[static_cast<std::size_t>(r + 1)];
  const auto it = std::lower_bound(b, e, c);
  return it != e && *it == c ? values_[static_cast<std::size_t>(it - col_indices_.begin())] : 0.0;
}

Matrix SparseMatrix::multiply(const Matrix& x) const {
  WAVEHDNN_REQUIRE(x.rows() == num_cols_,
                   "SparseMatrix::multiply: shape mismatch (" + std::to_string(num_rows_) + "x" +
                       std::to_string(num_cols_) + " * " + std::to_string(x.rows()) + "x" +
                       std::to_string(x.cols()) + ")");
  Matrix out = Matrix::Zero(num_rows_, x.cols());
  for (Index r = 0; r < num_rows_; ++r) {
    for (Index k = row_offsets_[static_cast<std::size_t>(r)]; k < row_offsets_[static_cast<std::size_t>(r + 1)]; ++k) {
      out.row(r).noalias() += values_[static_cast<std::size_t>(k)] *
                              x.row(col_indices_[static_cast<std::size_t>(k)]);
    }
  }
  return out;
}

Matrix SparseMatrix::multiply_transposed(const Matrix& x) const {
  WAVEHDNN_REQUIRE(x.rows() == num_rows_, "SparseMatrix::multiply_transposed: shape mismatch");
  Matrix out = Matrix::Zero(num_cols_, x.cols());
  for (Index r = 0; r < num_rows_; ++r) {
    for (Index k = row_offsets_[static_cast<std::size_t>(r)]; k < row_offsets_[static_cast<std::size_t>(r + 1)]; ++k) {
      out.row(col_indices_[static_cast<std::size_t>(k)]).noalias() +=
          values_[static_cast<std::size_t>(k)] * x.row(r);
    }
  }
  return out;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<Index> offsets(static_cast<std::size_t>(num_cols_ + 1), 0);
  for (Index c : col_indices_) ++offsets[static_cast<std::size_t>(c + 1)];
  for (Index c = 0; c < num_cols_; ++c) offsets[static_cast<std::size_t>(c + 1)] += offsets[static_cast<std::size_t>(c)];
  std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
  std::vector<Index> cols(values_.size());
  std::vector<double> vals(values_.size());
  for (Index r = 0; r < num_rows_; ++r) {
    for (Index k = row_offsets_[static_cast<std::size_t>(r)]; k < row_offsets_[static_cast<std::size_t>(r + 1)]; ++k) {
      const auto dst = static_cast<std::size_t>(cursor[static_cast<std::size_t>(col_indices_[static_cast<std::size_t>(k)])]++);
      cols[dst] = r;
      vals[dst] = values_[static_cast<std::size_t>(k)];
    }
  }
  SparseMatrix t;
  t.num_rows_ = num_cols_;
  t.num_cols_ = num_rows_;
  t.row_offsets_ = std::move(offsets);
  t.col_indices_ = std::move(cols);
  t.values_ = std::move(vals);
  return t;
}

SparseMatrix SparseMatrix::scaled(const std::vector<double>& left, const std::vector<double>& right) const {
  WAVEHDNN_REQUIRE(left.empty() || static_cast<Index>(left.size()) == num_rows_, "scaled: left size");
  WAVEHDNN_REQUIRE(right.empty() || static_cast<Index>(right.size()) == num_cols_, "scaled: right size");
  std::vector<Triplet> t;
  t.reserve(values_.size());
  for (Index r = 0; r < num_rows_; ++r) {
    for (Index k = row_offsets_[static_cast<std::size_t>(r)]; k < row_offsets_[static_cast<std::size_t>(r + 1)]; ++k) {
      const Index c = col_indices_[static_cast<std::size_t>(k)];
      double v = values_[static_cast<std::size_t>(k)];
      if (!left.empty()) v *= left[static_cast<std::size_t>(r)];
      if (!right.empty()) v *= right[static_cast<std::size_t>(c)];
      t.push_back({r, c, v});
    }
  }
  return from_triplets(num_rows_, num_cols_, std::move(t));
}

Matrix SparseMatrix::to_dense() const {
  Matrix out = Matrix::Zero(num_rows_, num_cols_);
  for (Index r = 0; r < num_rows_; ++r) {
    for (Index k = row_offsets_[static_cast<std::size_t>(r)]; k < row_offsets_[static_cast<std::size_t>(r + 1)]; ++k) {
      out(r, col_indices_[static_cast<std::size_t>(k)]) = values_[static_cast<std::size_t>(k)];
    }
  }
  return out;
}

void SparseMatrix::write_coordinates(std::ostream& os) const {
  const auto old = os.precision(17);
  for (Index r = 0; r < num_rows_; ++r) {
    for (Index k = row_offsets_[static_cast<std::size_t>(r)]; k < row_offsets_[static_cast<std::size_t>(r + 1)]; ++k) {
      os << r << ' ' << col_indices_[static_cast<std::size_t>(k)] << ' '
         << values_[static_cast<std::size_t>(k)] << '\n';
    }
  }
  os.precision(old);
}

}  // namespace wavehdnn
