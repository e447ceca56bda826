#pragma once

#include <cstddef>

#include "wsm/tensor.hpp"

namespace wsm::kernels {

// C += A * B. Serial reference implementation, kept as the test oracle
// for the OpenMP variant.
void matmul_serial(const Tensor& a, const Tensor& b, Tensor& c);

// C += A * B with OpenMP over output rows. Each output element is reduced
// by one thread in a fixed order, so results are bit-identical to the
// serial kernel.
void matmul_omp(const Tensor& a, const Tensor& b, Tensor& c);

// Dispatch: small products stay serial (thread fan-out costs more than the
// multiply below ~64k flops).
void matmul(const Tensor& a, const Tensor& b, Tensor& c);

// C += A^T * B and C += A * B^T, used by the backward pass.
void matmul_tn(const Tensor& a, const Tensor& b, Tensor& c);
void matmul_nt(const Tensor& a, const Tensor& b, Tensor& c);

// y += alpha * x
void axpy_serial(double alpha, const Tensor& x, Tensor& y);
void axpy_omp(double alpha, const Tensor& x, Tensor& y);
void axpy(double alpha, const Tensor& x, Tensor& y);

std::size_t matmul_parallel_threshold();

}  // namespace wsm::kernels
