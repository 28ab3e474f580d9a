#include "chs/kernels.hpp"

namespace chs::kernels {
namespace {

cplx dotu_scalar(const cplx* x, const cplx* y, std::size_t n) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    re += x[k].real() * y[k].real() - x[k].imag() * y[k].imag();
    im += x[k].real() * y[k].imag() + x[k].imag() * y[k].real();
  }
  return {re, im};
}

cplx dotc_scalar(const cplx* x, const cplx* y, std::size_t n) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    re += x[k].real() * y[k].real() + x[k].imag() * y[k].imag();
    im += x[k].imag() * y[k].real() - x[k].real() * y[k].imag();
  }
  return {re, im};
}

void axpy_scalar(cplx a, const cplx* x, cplx* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    y[k] += a * x[k];
  }
}

constexpr KernelTable kScalar{Isa::scalar, dotu_scalar, dotc_scalar, axpy_scalar};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace chs::kernels
