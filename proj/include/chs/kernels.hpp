#pragma once

// Complex inner loops shared by the tensor code: bilinear/sesquilinear dot
// products and axpy over interleaved std::complex<double> arrays.
//
// Every kernel has a scalar reference implementation. An AVX2+FMA variant is
// compiled into a separate translation unit and selected at runtime when the
// CPU supports it. Setting CHS_KERNELS=scalar in the environment forces the
// reference path.

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>

namespace chs::kernels {

using cplx = std::complex<double>;

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // sum_k x[k] * y[k]
  cplx (*dotu)(const cplx* x, const cplx* y, std::size_t n);
  // sum_k x[k] * conj(y[k])
  cplx (*dotc)(const cplx* x, const cplx* y, std::size_t n);
  // y[k] += a * x[k]
  void (*axpy)(cplx a, const cplx* x, cplx* y, std::size_t n);
};

const KernelTable& scalar_table();

// nullptr when the variant was not compiled in.
const KernelTable* avx2_table();

bool isa_supported(Isa isa);
std::string_view isa_name(Isa isa);

// The table used by the dispatching wrappers below.
const KernelTable& active();
Isa active_isa();

// Overrides the runtime choice (tests use this to compare variants). Throws
// std::invalid_argument if the requested variant is unavailable.
void set_active_isa(Isa isa);

inline cplx dotu(std::span<const cplx> x, std::span<const cplx> y) {
  return active().dotu(x.data(), y.data(), x.size());
}

inline cplx dotc(std::span<const cplx> x, std::span<const cplx> y) {
  return active().dotc(x.data(), y.data(), x.size());
}

inline void axpy(cplx a, std::span<const cplx> x, std::span<cplx> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace chs::kernels
