// Compiled with -mavx2 -mfma. Nothing in here may run before the dispatcher
// has confirmed CPU support.

#include "chs/kernels.hpp"

#include <immintrin.h>

namespace chs::kernels {
namespace {

// One __m256d holds two interleaved complex numbers [re0, im0, re1, im1].
inline __m256d load2(const cplx* p) { return _mm256_loadu_pd(reinterpret_cast<const double*>(p)); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Alternating-sign sum: v0 - v1 + v2 - v3.
inline double hsum_alt(__m256d v) {
  const __m256d sign = _mm256_setr_pd(1.0, -1.0, 1.0, -1.0);
  return hsum(_mm256_mul_pd(v, sign));
}

// straight accumulates [xr*yr, xi*yi], swapped accumulates [xr*yi, xi*yr].
inline void accumulate(const cplx* x, const cplx* y, std::size_t n, __m256d& straight, __m256d& swapped,
                       std::size_t& k) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  __m256d w0 = _mm256_setzero_pd();
  __m256d w1 = _mm256_setzero_pd();
  for (; k + 4 <= n; k += 4) {
    const __m256d x0 = load2(x + k);
    const __m256d y0 = load2(y + k);
    const __m256d x1 = load2(x + k + 2);
    const __m256d y1 = load2(y + k + 2);
    s0 = _mm256_fmadd_pd(x0, y0, s0);
    s1 = _mm256_fmadd_pd(x1, y1, s1);
    w0 = _mm256_fmadd_pd(x0, _mm256_permute_pd(y0, 0b0101), w0);
    w1 = _mm256_fmadd_pd(x1, _mm256_permute_pd(y1, 0b0101), w1);
  }
  for (; k + 2 <= n; k += 2) {
    const __m256d x0 = load2(x + k);
    const __m256d y0 = load2(y + k);
    s0 = _mm256_fmadd_pd(x0, y0, s0);
    w0 = _mm256_fmadd_pd(x0, _mm256_permute_pd(y0, 0b0101), w0);
  }
  straight = _mm256_add_pd(s0, s1);
  swapped = _mm256_add_pd(w0, w1);
}

cplx dotu_avx2(const cplx* x, const cplx* y, std::size_t n) {
  __m256d straight;
  __m256d swapped;
  std::size_t k = 0;
  accumulate(x, y, n, straight, swapped, k);
  double re = hsum_alt(straight);
  double im = hsum(swapped);
  for (; k < n; ++k) {
    re += x[k].real() * y[k].real() - x[k].imag() * y[k].imag();
    im += x[k].real() * y[k].imag() + x[k].imag() * y[k].real();
  }
  return {re, im};
}

cplx dotc_avx2(const cplx* x, const cplx* y, std::size_t n) {
  __m256d straight;
  __m256d swapped;
  std::size_t k = 0;
  accumulate(x, y, n, straight, swapped, k);
  double re = hsum(straight);
  double im = -hsum_alt(swapped);
  for (; k < n; ++k) {
    re += x[k].real() * y[k].real() + x[k].imag() * y[k].imag();
    im += x[k].imag() * y[k].real() - x[k].real() * y[k].imag();
  }
  return {re, im};
}

void axpy_avx2(cplx a, const cplx* x, cplx* y, std::size_t n) {
  const __m256d ar = _mm256_set1_pd(a.real());
  const __m256d ai = _mm256_set1_pd(a.imag());
  double* yd = reinterpret_cast<double*>(y);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    const __m256d xv = load2(x + k);
    __m256d yv = _mm256_loadu_pd(yd + 2 * k);
    yv = _mm256_fmadd_pd(ar, xv, yv);
    // even lanes subtract ai*xi, odd lanes add ai*xr
    yv = _mm256_addsub_pd(yv, _mm256_mul_pd(ai, _mm256_permute_pd(xv, 0b0101)));
    _mm256_storeu_pd(yd + 2 * k, yv);
  }
  for (; k < n; ++k) {
    y[k] += a * x[k];
  }
}

constexpr KernelTable kAvx2{Isa::avx2, dotu_avx2, dotc_avx2, axpy_avx2};

}  // namespace

const KernelTable* avx2_table() { return &kAvx2; }

}  // namespace chs::kernels
