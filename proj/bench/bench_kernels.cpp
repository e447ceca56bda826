// Compares the serial reference kernels against their OpenMP variants and
// checks that results stay bit-identical.

#include <chrono>
#include <cstdio>
#include <cstring>

#include "wsm/kernels.hpp"
#include "wsm/rng.hpp"
#include "wsm/tensor.hpp"

using namespace wsm;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng) {
  Tensor t(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

template <typename F>
double time_ms(F&& f, int reps) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) f();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main() {
  Rng rng(42);
  std::printf("%-22s %12s %12s %8s %8s\n", "kernel", "serial(ms)", "omp(ms)",
              "speedup", "bitwise");
  for (const std::size_t n : {64u, 128u, 256u, 512u}) {
    const Tensor a = random_tensor(n, n, rng);
    const Tensor b = random_tensor(n, n, rng);
    Tensor c_serial(n, n), c_omp(n, n);
    const int reps = n <= 128 ? 50 : 5;
    const double t_serial = time_ms(
        [&] {
          c_serial.fill(0.0);
          kernels::matmul_serial(a, b, c_serial);
        },
        reps);
    const double t_omp = time_ms(
        [&] {
          c_omp.fill(0.0);
          kernels::matmul_omp(a, b, c_omp);
        },
        reps);
    std::printf("matmul %4zux%-4zu       %12.3f %12.3f %8.2f %8s\n", n, n,
                t_serial, t_omp, t_serial / t_omp,
                bit_equal(c_serial, c_omp) ? "yes" : "NO");
  }
  for (const std::size_t n : {1u << 16, 1u << 20}) {
    const Tensor x = random_tensor(1, n, rng);
    Tensor y_serial(1, n), y_omp(1, n);
    const double t_serial =
        time_ms([&] { kernels::axpy_serial(0.5, x, y_serial); }, 20);
    const double t_omp =
        time_ms([&] { kernels::axpy_omp(0.5, x, y_omp); }, 20);
    std::printf("axpy   %-12zu    %12.3f %12.3f %8.2f %8s\n", n, t_serial,
                t_omp, t_serial / t_omp,
                bit_equal(y_serial, y_omp) ? "yes" : "NO");
  }
  return 0;
}
