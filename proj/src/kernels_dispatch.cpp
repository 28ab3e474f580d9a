#include "chs/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace chs::kernels {

#ifndef CHS_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* choose_default() {
  if (const char* env = std::getenv("CHS_KERNELS"); env != nullptr && std::string(env) == "scalar") {
    return &scalar_table();
  }
  if (isa_supported(Isa::avx2)) {
    return avx2_table();
  }
  return &scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return true;
    case Isa::avx2:
      return avx2_table() != nullptr && cpu_has_avx2_fma();
  }
  return false;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& active() {
  const KernelTable* table = g_active.load(std::memory_order_acquire);
  if (table == nullptr) {
    const KernelTable* chosen = choose_default();
    const KernelTable* expected = nullptr;
    g_active.compare_exchange_strong(expected, chosen, std::memory_order_acq_rel);
    table = g_active.load(std::memory_order_acquire);
  }
  return *table;
}

Isa active_isa() { return active().isa; }

void set_active_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel variant not available: " + std::string(isa_name(isa)));
  }
  g_active.store(isa == Isa::avx2 ? avx2_table() : &scalar_table(), std::memory_order_release);
}

}  // namespace chs::kernels
