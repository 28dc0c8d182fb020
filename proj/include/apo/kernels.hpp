#pragma once

// Data-parallel inner loops used by the estimators and design matrices.
//
// Every kernel has a scalar reference implementation. Vectorized variants
// (AVX2+FMA on x86-64, NEON on aarch64) are compiled into separate
// translation units and chosen once at runtime from the CPU feature bits.
// The environment variable APO_KERNELS=scalar|avx2|neon overrides the choice.
// Vector variants reassociate sums, so results agree with the scalar path to
// rounding, not bit for bit; a single process always uses one backend.

#include <cstddef>
#include <span>
#include <string_view>

namespace apo::kernels {

enum class Backend { kScalar, kAvx2, kNeon };

struct KernelTable {
  Backend backend;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // sum_i w[i] * x[i] * y[i]
  double (*weighted_dot)(const double* w, const double* x, const double* y,
                         std::size_t n);
  // sum_i (x[i] - y[i])^2
  double (*squared_distance)(const double* x, const double* y, std::size_t n);
  // y[i] += a * x[i]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
};

std::string_view backend_name(Backend backend);

// True when the backend was compiled in and the running CPU supports it.
bool available(Backend backend);

// Kernel table for a specific backend; throws std::invalid_argument if it is
// not available on this machine.
const KernelTable& table(Backend backend);

// The process-wide table. Resolved on first use.
const KernelTable& active();

// Replaces the process-wide table. Not meant to be called while other
// threads are running kernels.
void select(Backend backend);

namespace detail {
extern const KernelTable kScalarTable;
#if defined(APO_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif
#if defined(APO_HAVE_NEON)
extern const KernelTable kNeonTable;
#endif
}  // namespace detail

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline double weighted_dot(std::span<const double> w, std::span<const double> x,
                           std::span<const double> y) {
  return active().weighted_dot(w.data(), x.data(), y.data(), x.size());
}

inline double squared_distance(std::span<const double> x,
                               std::span<const double> y) {
  return active().squared_distance(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace apo::kernels
