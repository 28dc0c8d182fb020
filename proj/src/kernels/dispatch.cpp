#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "apo/kernels.hpp"

namespace apo::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(APO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* resolve_default() {
  if (const char* forced = std::getenv("APO_KERNELS")) {
    const std::string name(forced);
    if (name == "scalar") return &table(Backend::kScalar);
    if (name == "avx2" && available(Backend::kAvx2)) return &table(Backend::kAvx2);
    if (name == "neon" && available(Backend::kNeon)) return &table(Backend::kNeon);
  }
  if (available(Backend::kAvx2)) return &table(Backend::kAvx2);
  if (available(Backend::kNeon)) return &table(Backend::kNeon);
  return &table(Backend::kScalar);
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
    case Backend::kNeon:
      return "neon";
  }
  return "unknown";
}

bool available(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return true;
    case Backend::kAvx2:
      return cpu_has_avx2();
    case Backend::kNeon:
#if defined(APO_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend backend) {
  if (!available(backend)) {
    throw std::invalid_argument("kernel backend '" +
                                std::string(backend_name(backend)) +
                                "' is not available on this machine");
  }
  switch (backend) {
    case Backend::kScalar:
      return detail::kScalarTable;
#if defined(APO_HAVE_AVX2)
    case Backend::kAvx2:
      return detail::kAvx2Table;
#endif
#if defined(APO_HAVE_NEON)
    case Backend::kNeon:
      return detail::kNeonTable;
#endif
    default:
      break;
  }
  return detail::kScalarTable;
}

const KernelTable& active() {
  const KernelTable* current = g_active.load(std::memory_order_acquire);
  if (current == nullptr) {
    const KernelTable* resolved = resolve_default();
    const KernelTable* expected = nullptr;
    g_active.compare_exchange_strong(expected, resolved,
                                     std::memory_order_acq_rel);
    current = g_active.load(std::memory_order_acquire);
  }
  return *current;
}

void select(Backend backend) {
  g_active.store(&table(backend), std::memory_order_release);
}

}  // namespace apo::kernels
