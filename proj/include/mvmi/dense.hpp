#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mvmi/common.hpp"

namespace mvmi {

// Row-major 32-bit float matrix. Reductions and hand-written kernels
// accumulate in double; see matmul() for the gemm path.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols, float fill = 0.0f)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}
  DenseMatrix(int rows, int cols, std::vector<float> data);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  float& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  float operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  float* row(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const float* row(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

  bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape_str() const;
  bool all_finite() const;

  void fill(float v) { std::fill(data_.begin(), data_.end(), v); }

  static DenseMatrix identity(int n);

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<float> data_;
};

// c = a * b. Shape mismatch raises ContractError naming both shapes.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
// c = a * b^T.
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
// c = a^T * b.
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);

// Thread count for the gemm backend. 1 (the default) is the
// bit-deterministic mode; anything else trades determinism for speed.
void set_kernel_threads(int n);
int kernel_threads();

}  // namespace mvmi
