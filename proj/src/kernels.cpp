#include "wsm/kernels.hpp"

#include <cstdint>

namespace wsm::kernels {

namespace {

void check_matmul_shapes(const Tensor& a, const Tensor& b, const Tensor& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw std::invalid_argument("matmul: shape mismatch " + a.shape_str() +
                                " * " + b.shape_str() + " -> " +
                                c.shape_str());
  }
}

inline void matmul_row(const double* arow, const Tensor& b, double* crow) {
  const std::size_t k_extent = b.rows();
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < k_extent; ++k) {
    const double aik = arow[k];
    if (aik == 0.0) continue;
    const double* brow = b.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
  }
}

}  // namespace

std::size_t matmul_parallel_threshold() { return 1u << 16; }

void matmul_serial(const Tensor& a, const Tensor& b, Tensor& c) {
  check_matmul_shapes(a, b, c);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    matmul_row(a.data() + i * a.cols(), b, c.data() + i * c.cols());
  }
}

void matmul_omp(const Tensor& a, const Tensor& b, Tensor& c) {
  check_matmul_shapes(a, b, c);
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < m; ++i) {
    matmul_row(a.data() + i * a.cols(), b, c.data() + i * c.cols());
  }
}

void matmul(const Tensor& a, const Tensor& b, Tensor& c) {
  if (a.rows() * a.cols() * b.cols() >= matmul_parallel_threshold()) {
    matmul_omp(a, b, c);
  } else {
    matmul_serial(a, b, c);
  }
}

void matmul_tn(const Tensor& a, const Tensor& b, Tensor& c) {
  // c[k][j] += sum_i a[i][k] * b[i][j]
  if (a.rows() != b.rows() || c.rows() != a.cols() || c.cols() != b.cols()) {
    throw std::invalid_argument("matmul_tn: shape mismatch " + a.shape_str() +
                                "^T * " + b.shape_str() + " -> " +
                                c.shape_str());
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.data() + i * a.cols();
    const double* brow = b.data() + i * b.cols();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      double* crow = c.data() + k * c.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
}

void matmul_nt(const Tensor& a, const Tensor& b, Tensor& c) {
  // c[i][k] += sum_j a[i][j] * b[k][j]
  if (a.cols() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows()) {
    throw std::invalid_argument("matmul_nt: shape mismatch " + a.shape_str() +
                                " * " + b.shape_str() + "^T -> " +
                                c.shape_str());
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* arow = a.data() + i * a.cols();
    double* crow = c.data() + i * c.cols();
    for (std::size_t k = 0; k < b.rows(); ++k) {
      const double* brow = b.data() + k * b.cols();
      double acc = 0.0;
      for (std::size_t j = 0; j < a.cols(); ++j) acc += arow[j] * brow[j];
      crow[k] += acc;
    }
  }
}

void axpy_serial(double alpha, const Tensor& x, Tensor& y) {
  check_same_shape(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

void axpy_omp(double alpha, const Tensor& x, Tensor& y) {
  check_same_shape(x, y, "axpy");
  const std::int64_t n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpy(double alpha, const Tensor& x, Tensor& y) {
  if (x.size() >= matmul_parallel_threshold()) {
    axpy_omp(alpha, x, y);
  } else {
    axpy_serial(alpha, x, y);
  }
}

}  // namespace wsm::kernels
