#include "mvmi/dense.hpp"

#include <cmath>
#include <sstream>

#ifdef MVMI_USE_CBLAS
#include <cblas.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace mvmi {

namespace {

int g_threads = 1;

// Fallback kernel: i-k-j loop with a double accumulator row.
void gemm_fallback(bool transpose_b, const DenseMatrix& a, const DenseMatrix& b,
                   DenseMatrix& c) {
  const int m = c.rows(), n = c.cols();
  const int k = a.cols();
  std::vector<double> acc(n);
  for (int i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    if (!transpose_b) {
      const float* arow = a.row(i);
      for (int kk = 0; kk < k; ++kk) {
        const double av = arow[kk];
        if (av == 0.0) continue;
        const float* brow = b.row(kk);
        for (int j = 0; j < n; ++j) acc[j] += av * brow[j];
      }
    } else {
      const float* arow = a.row(i);
      for (int j = 0; j < n; ++j) {
        const float* brow = b.row(j);
        double s = 0.0;
        for (int kk = 0; kk < k; ++kk) s += double(arow[kk]) * brow[kk];
        acc[j] = s;
      }
    }
    float* crow = c.row(i);
    for (int j = 0; j < n; ++j) crow[j] = static_cast<float>(acc[j]);
  }
}

}  // namespace

DenseMatrix::DenseMatrix(int rows, int cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  contract(data_.size() == static_cast<std::size_t>(rows) * cols,
           "DenseMatrix: data length " + std::to_string(data_.size()) +
               " != " + std::to_string(rows) + "x" + std::to_string(cols));
}

std::string DenseMatrix::shape_str() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

bool DenseMatrix::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

DenseMatrix DenseMatrix::identity(int n) {
  DenseMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

void set_kernel_threads(int n) {
  g_threads = n < 1 ? 1 : n;
#ifdef MVMI_USE_CBLAS
  openblas_set_num_threads(g_threads);
#endif
}

int kernel_threads() { return g_threads; }

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  contract(a.cols() == b.rows(),
           "matmul: inner dimensions differ, " + a.shape_str() + " * " + b.shape_str());
  DenseMatrix c(a.rows(), b.cols());
#ifdef MVMI_USE_CBLAS
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, a.rows(), b.cols(), a.cols(),
              1.0f, a.data(), a.cols(), b.data(), b.cols(), 0.0f, c.data(), c.cols());
#else
  gemm_fallback(false, a, b, c);
#endif
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  contract(a.cols() == b.cols(),
           "matmul_nt: inner dimensions differ, " + a.shape_str() + " * " + b.shape_str() + "^T");
  DenseMatrix c(a.rows(), b.rows());
#ifdef MVMI_USE_CBLAS
  cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, a.rows(), b.rows(), a.cols(),
              1.0f, a.data(), a.cols(), b.data(), b.cols(), 0.0f, c.data(), c.cols());
#else
  gemm_fallback(true, a, b, c);
#endif
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  contract(a.rows() == b.rows(),
           "matmul_tn: inner dimensions differ, " + a.shape_str() + "^T * " + b.shape_str());
  DenseMatrix c(a.cols(), b.cols());
#ifdef MVMI_USE_CBLAS
  cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, a.cols(), b.cols(), a.rows(),
              1.0f, a.data(), a.cols(), b.data(), b.cols(), 0.0f, c.data(), c.cols());
#else
  // a^T: swap loop roles via explicit loops.
  const int m = a.cols(), n = b.cols(), k = a.rows();
  std::vector<double> acc(n);
  for (int i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int kk = 0; kk < k; ++kk) {
      const double av = a(kk, i);
      if (av == 0.0) continue;
      const float* brow = b.row(kk);
      for (int j = 0; j < n; ++j) acc[j] += av * brow[j];
    }
    for (int j = 0; j < n; ++j) c(i, j) = static_cast<float>(acc[j]);
  }
#endif
  return c;
}

}  // namespace mvmi
