#include "mvmi/sparse.hpp"

#include <algorithm>
#include <tuple>

namespace mvmi {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols,
                                         std::vector<std::tuple<int, int, float>> triplets) {
  SparseMatrix m(rows, cols);
  std::sort(triplets.begin(), triplets.end());
  std::size_t kept = 0;
  for (auto& [r, c, v] : triplets) {
    contract(r >= 0 && r < rows && c >= 0 && c < cols, "SparseMatrix: index out of range");
    if (v == 0.0f) continue;
    if (kept > 0) {
      auto& [pr, pc, pv] = triplets[kept - 1];
      contract(!(pr == r && pc == c), "SparseMatrix: duplicate entry");
    }
    triplets[kept++] = {r, c, v};
  }
  triplets.resize(kept);
  m.cols_idx_.reserve(kept);
  m.values_.reserve(kept);
  std::size_t t = 0;
  for (int r = 0; r < rows; ++r) {
    m.offsets_[r] = m.values_.size();
    while (t < kept && std::get<0>(triplets[t]) == r) {
      m.cols_idx_.push_back(std::get<1>(triplets[t]));
      m.values_.push_back(std::get<2>(triplets[t]));
      ++t;
    }
  }
  m.offsets_[rows] = m.values_.size();
  return m;
}

DenseMatrix SparseMatrix::densify() const {
  DenseMatrix d(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
      d(r, cols_idx_[k]) = values_[k];
  return d;
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& d) {
  contract(s.cols() == d.rows(),
           "spmm: inner dimensions differ, sparse " + std::to_string(s.rows()) + "x" +
               std::to_string(s.cols()) + " * dense " + d.shape_str());
  DenseMatrix c(s.rows(), d.cols());
  const int n = d.cols();
  std::vector<double> acc(n);
  for (int r = 0; r < s.rows(); ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t k = s.offsets()[r]; k < s.offsets()[r + 1]; ++k) {
      const double v = s.values()[k];
      const float* drow = d.row(s.col_indices()[k]);
      for (int j = 0; j < n; ++j) acc[j] += v * drow[j];
    }
    float* crow = c.row(r);
    for (int j = 0; j < n; ++j) crow[j] = static_cast<float>(acc[j]);
  }
  return c;
}

DenseMatrix spmm_tn(const SparseMatrix& s, const DenseMatrix& d) {
  contract(s.rows() == d.rows(),
           "spmm_tn: inner dimensions differ, sparse " + std::to_string(s.rows()) + "x" +
               std::to_string(s.cols()) + "^T * dense " + d.shape_str());
  // Scatter rows of d into output rows indexed by the sparse columns.
  // Row-by-row accumulation in float here; callers that need tighter sums
  // use symmetric matrices where spmm_tn(s, d) == spmm(s, d).
  DenseMatrix c(s.cols(), d.cols());
  const int n = d.cols();
  for (int r = 0; r < s.rows(); ++r) {
    const float* drow = d.row(r);
    for (std::size_t k = s.offsets()[r]; k < s.offsets()[r + 1]; ++k) {
      const float v = s.values()[k];
      float* crow = c.row(s.col_indices()[k]);
      for (int j = 0; j < n; ++j) crow[j] += v * drow[j];
    }
  }
  return c;
}

}  // namespace mvmi
