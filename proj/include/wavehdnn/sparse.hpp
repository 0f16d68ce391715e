#pragma once

#include <ostream>
#include <tuple>
#include <vector>

#include "wavehdnn/types.hpp"

namespace wavehdnn {

/// Immutable CSR matrix. Column indices are strictly increasing within a row
/// and no explicit zeros are stored.
class SparseMatrix {
 public:
  struct Triplet {
    Index row;
    Index col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols) : num_rows_(rows), num_cols_(cols), row_offsets_(rows + 1, 0) {}

  /// Duplicate (row, col) entries are summed; entries summing to zero are dropped.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);

  /// Adopts raw CSR arrays after validating every invariant.
  static SparseMatrix from_csr(Index rows, Index cols, std::vector<Index> row_offsets,
                               std::vector<Index> col_indices, std::vector<double> values);

  static SparseMatrix identity(Index n);

  Index rows() const { return num_rows_; }
  Index cols() const { return num_cols_; }
  Index nnz() const { return static_cast<Index>(values_.size()); }

  const std::vector<Index>& row_offsets() const { return row_offsets_; }
  const std::vector<Index>& col_indices() const { return col_indices_; }
  const std::vector<double>& values() const { return values_; }

  /// Stored value at (r, c), or 0.
  double at(Index r, Index c) const;

  /// this * X
  Matrix multiply(const Matrix& x) const;
  /// this^T * X, without materializing the transpose.
  Matrix multiply_transposed(const Matrix& x) const;

  SparseMatrix transpose() const;
  /// diag(left) * this * diag(right); pass empty vectors to skip a side.
  SparseMatrix scaled(const std::vector<double>& left, const std::vector<double>& right) const;

  Matrix to_dense() const;

  /// Coordinate dump: one "row col value" line per stored entry, row-major.
  void write_coordinates(std::ostream& os) const;

 private:
  Index num_rows_ = 0;
  Index num_cols_ = 0;
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  std::vector<double> values_;
};

}  // namespace wavehdnn
