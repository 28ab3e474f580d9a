#include "chs/kernels.hpp"

#include <doctest.h>

#include <random>
#include <vector>

using chs::kernels::cplx;
namespace k = chs::kernels;

namespace {

std::vector<cplx> random_array(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<cplx> v(n);
  for (auto& z : v) {
    z = cplx(nd(rng), nd(rng));
  }
  return v;
}

double rel(cplx a, cplx b, double scale) { return std::abs(a - b) / std::max(1.0, scale); }

// plain loops, independent of both kernel tables
cplx naive_dotu(const std::vector<cplx>& x, const std::vector<cplx>& y) {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i] * y[i];
  }
  return acc;
}

cplx naive_dotc(const std::vector<cplx>& x, const std::vector<cplx>& y) {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i] * std::conj(y[i]);
  }
  return acc;
}

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  std::mt19937_64 rng(11);
  const k::KernelTable& t = k::scalar_table();
  for (std::size_t n : {0u, 1u, 2u, 3u, 7u, 16u, 33u, 256u}) {
    const auto x = random_array(n, rng);
    const auto y = random_array(n, rng);
    const double s = static_cast<double>(n);
    CHECK(rel(t.dotu(x.data(), y.data(), n), naive_dotu(x, y), s) < 1e-14);
    CHECK(rel(t.dotc(x.data(), y.data(), n), naive_dotc(x, y), s) < 1e-14);
    auto z = y;
    const cplx a(0.3, -1.7);
    t.axpy(a, x.data(), z.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(z[i] - (y[i] + a * x[i])) < 1e-15);
    }
  }
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const k::KernelTable* v = k::avx2_table();
  if (v == nullptr || !k::isa_supported(k::Isa::avx2)) {
    MESSAGE("avx2 variant unavailable on this machine; equivalence not exercised");
    return;
  }
  const k::KernelTable& s = k::scalar_table();
  std::mt19937_64 rng(12);
  for (std::size_t n = 0; n <= 67; ++n) {
    const auto x = random_array(n, rng);
    const auto y = random_array(n, rng);
    const double sc = static_cast<double>(n) + 1.0;
    CHECK(rel(v->dotu(x.data(), y.data(), n), s.dotu(x.data(), y.data(), n), sc) < 1e-13);
    CHECK(rel(v->dotc(x.data(), y.data(), n), s.dotc(x.data(), y.data(), n), sc) < 1e-13);
    auto z1 = y;
    auto z2 = y;
    const cplx a(-0.25, 2.5);
    v->axpy(a, x.data(), z1.data(), n);
    s.axpy(a, x.data(), z2.data(), n);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(z1[i] - z2[i]) < 1e-14);
    }
  }
}

TEST_CASE("dispatch override switches the active table") {
  const k::Isa before = k::active_isa();
  k::set_active_isa(k::Isa::scalar);
  CHECK(k::active_isa() == k::Isa::scalar);
  CHECK(&k::active() == &k::scalar_table());
  if (k::isa_supported(k::Isa::avx2)) {
    k::set_active_isa(k::Isa::avx2);
    CHECK(k::active_isa() == k::Isa::avx2);
  } else {
    CHECK_THROWS_AS(k::set_active_isa(k::Isa::avx2), std::invalid_argument);
  }
  k::set_active_isa(before);
  CHECK(k::isa_name(k::Isa::scalar) == "scalar");
}
