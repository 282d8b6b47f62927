#pragma once

#include <vector>

#include "mvmi/common.hpp"
#include "mvmi/dense.hpp"

namespace mvmi {

// CSR with strictly increasing column indices per row and no stored zeros.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), offsets_(rows + 1, 0) {}

  // Triplets must be unique; they are sorted here and zeros are dropped.
  static SparseMatrix from_triplets(int rows, int cols,
                                    std::vector<std::tuple<int, int, float>> triplets);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t nnz() const { return values_.size(); }

  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<int>& col_indices() const { return cols_idx_; }
  const std::vector<float>& values() const { return values_; }

  DenseMatrix densify() const;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::size_t> offsets_;
  std::vector<int> cols_idx_;
  std::vector<float> values_;
};

// c = s * d, double accumulation per output entry.
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d);
// c = s^T * d (gradient path of spmm).
DenseMatrix spmm_tn(const SparseMatrix& s, const DenseMatrix& d);

}  // namespace mvmi
