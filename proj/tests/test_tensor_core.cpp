#include "chs/error.hpp"
#include "chs/moment_sources.hpp"
#include "chs/tensor_core.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace chs;

namespace {

const cplx I(0.0, 1.0);

TensorElement random_element(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    c.data()[i] = cplx(nd(rng), nd(rng));
  }
  return TensorElement(c);
}

std::vector<CyclicStructure> corpus() {
  std::vector<CyclicStructure> out{structure_from_matrices(pauli_family())};
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const std::size_t d = 2 + seed % 3;
    const std::size_t n = std::min<std::size_t>(d * d, 2 + seed % 4);
    out.push_back(structure_from_matrices(random_family(d, n, seed)));
  }
  out.push_back(semicircular_structure(3));
  return out;
}

}  // namespace

TEST_CASE("pair_index") {
  CHECK(pair_index(0, 0, 4) == 0);
  CHECK(pair_index(1, 2, 4) == 6);
  CHECK(pair_index(3, 3, 4) == 15);
  CHECK_THROWS(pair_index(4, 0, 4));
}

TEST_CASE("Pauli gram matches direct 2x2 traces") {
  const auto m = oracle::pauli();
  const CyclicStructure s = structure_from_matrices(pauli_family());
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = 0; b < 4; ++b) {
      for (std::size_t c = 0; c < 4; ++c) {
        for (std::size_t d = 0; d < 4; ++d) {
          CHECK(std::abs(s.at(a, b, c, d) - oracle::gram_entry(m, a, b, c, d)) < 1e-15);
        }
      }
    }
  }
}

TEST_CASE("inner products in the Pauli structure") {
  const CyclicStructure s = structure_from_matrices(pauli_family());
  const auto e = [](std::size_t i, std::size_t j) { return TensorElement::basis(i, j, 4); };
  CHECK(std::abs(inner(s, e(1, 0), e(1, 0)) - 1.0) < 1e-15);
  CHECK(std::abs(inner(s, e(1, 2), e(3, 0)) - I) < 1e-15);
  CHECK(std::abs(inner(s, e(1, 2), e(2, 1)) + 1.0) < 1e-15);
  CHECK_THROWS_AS(inner(s, e(1, 2), TensorElement::basis(1, 2, 3)), ShapeError);
}

TEST_CASE("involution and real/imaginary parts") {
  const TensorElement x12 = TensorElement::basis(1, 2, 3);
  const TensorElement x21 = TensorElement::basis(2, 1, 3);
  CHECK((involution(x12).coeffs() - x21.coeffs()).norm() == 0.0);
  CHECK((involution(x12 * I).coeffs() - (x21 * -I).coeffs()).norm() == 0.0);

  std::mt19937_64 rng(3);
  const TensorElement u = random_element(3, rng);
  CHECK((involution(involution(u)).coeffs() - u.coeffs()).norm() == 0.0);
  const TensorElement re = real_part(u);
  const TensorElement im = imag_part(u);
  CHECK((re + im * I - u).coeff_norm() < 1e-15);
  CHECK((involution(re) - re).coeff_norm() < 1e-15);
  CHECK((involution(im) - im).coeff_norm() < 1e-15);

  CHECK((real_part(x12) - (x12 + x21) * cplx(0.5)).coeff_norm() == 0.0);
  CHECK(imag_part(TensorElement::basis(1, 1, 3)).coeff_norm() == 0.0);

  const CyclicStructure s = structure_from_matrices(pauli_family());
  CHECK(std::abs(norm_sq(s, imag_part(TensorElement::basis(1, 2, 4))) - 1.0) < 1e-15);
}

TEST_CASE("validator accepts genuine trace structures") {
  const CyclicStructure p = structure_from_matrices(pauli_family());
  const ValidationReport r = validate(p);
  CHECK(r.all_pass());
  CHECK(r.min_eigenvalue >= -1e-12);
  CHECK(validate(structure_from_matrices(random_family(3, 5, 9))).all_pass());
}

TEST_CASE("validator reports a constructed violation with a witness") {
  const CyclicStructure p = structure_from_matrices(pauli_family());
  Matrix g = p.gram();
  g(static_cast<Eigen::Index>(pair_index(1, 2, 4)), static_cast<Eigen::Index>(pair_index(3, 0, 4))) = 1.0;
  const ValidationReport r = validate(CyclicStructure(4, g));
  CHECK_FALSE(r.all_pass());
  const bool hermitian_fail = !r.record(Axiom::hermitian).pass;
  const bool cyclic_fail = !r.record(Axiom::cyclicity).pass;
  CHECK((hermitian_fail || cyclic_fail));
  const AxiomRecord& rec = cyclic_fail ? r.record(Axiom::cyclicity) : r.record(Axiom::hermitian);
  CHECK(rec.worst > rec.threshold);
  std::size_t nonzero = 0;
  for (std::size_t w : rec.witness) {
    nonzero += w != 0 ? 1 : 0;
  }
  CHECK(nonzero > 0);
}

TEST_CASE("orbit maps leave valid structures fixed") {
  for (const CyclicStructure& s : corpus()) {
    const std::size_t n = s.dim();
    const double tol = 1e-12 * s.scale();
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < n; ++c) {
          for (std::size_t d = 0; d < n; ++d) {
            // R2: (a,b,c,d) -> (c,a,d,b); R3: (a,b,c,d) -> (b,a,d,c) conjugated
            REQUIRE(std::abs(s.at(a, b, c, d) - s.at(c, a, d, b)) <= tol);
            REQUIRE(std::abs(s.at(a, b, c, d) - std::conj(s.at(b, a, d, c))) <= tol);
            // derived swap identity
            REQUIRE(std::abs(s.at(a, b, c, d) - s.at(b, d, a, c)) <= tol);
          }
        }
      }
    }
  }
}

TEST_CASE("sesquilinearity, positivity and the involution isometry") {
  std::mt19937_64 rng(5);
  for (const CyclicStructure& s : corpus()) {
    const std::size_t n = s.dim();
    for (int t = 0; t < 100; ++t) {
      const TensorElement u = random_element(n, rng);
      const TensorElement v = random_element(n, rng);
      const cplx uv = inner(s, u, v);
      const cplx vu = inner(s, v, u);
      CHECK(std::abs(uv - std::conj(vu)) <= 1e-12 * std::max(1.0, std::abs(uv)));
      const double nu = norm_sq(s, u);
      const double c2 = u.coeff_norm() * u.coeff_norm();
      CHECK(nu >= -1e-9 * c2 * s.scale());
      if (t < 32) {
        CHECK(std::abs(norm_sq(s, involution(u)) - nu) <= 1e-10 * c2 * s.scale());
      }
    }
  }
}

TEST_CASE("trivial projection") {
  const CyclicStructure s = structure_from_matrices(pauli_family());
  const TrivialProjection a = trivial_projection(s, TensorElement::basis(2, 0, 4));
  CHECK(a.distance < 1e-12);
  CHECK((a.left.coeffs() - TensorElement::basis(2, 0, 4).coeffs()).norm() < 1e-12);
  CHECK(a.right.coeff_norm() < 1e-12);
  CHECK_FALSE(a.nontrivial_support);

  const TensorElement u = imag_part(TensorElement::basis(1, 2, 4));
  const TrivialProjection b = trivial_projection(s, u);
  CHECK(b.distance_left < 1e-7);
  CHECK(b.nontrivial_support);
  CHECK(std::abs(inner(s, u, TensorElement::basis(3, 0, 4)) - 1.0) < 1e-15);

  // orthogonality of the residual and idempotence
  std::mt19937_64 rng(8);
  const CyclicStructure r = structure_from_matrices(random_family(3, 4, 2));
  const TensorElement w = random_element(4, rng);
  const TrivialProjection p = trivial_projection(r, w);
  for (std::size_t m = 0; m < 4; ++m) {
    CHECK(std::abs(inner(r, p.residual, TensorElement::basis(m, 0, 4))) < 1e-9);
    CHECK(std::abs(inner(r, p.residual, TensorElement::basis(0, m, 4))) < 1e-9);
  }
  const TrivialProjection again = trivial_projection(r, p.left + p.right);
  CHECK(again.distance < 1e-6);
}

TEST_CASE("raw support test ignores seminorm") {
  Matrix c = Matrix::Zero(3, 3);
  c(1, 2) = 1.0;
  CHECK(has_nontrivial_support(TensorElement(c)));
  Matrix t = Matrix::Zero(3, 3);
  t(2, 0) = 1.0;
  t(0, 1) = 1.0;
  CHECK_FALSE(has_nontrivial_support(TensorElement(t)));
}

TEST_CASE("independent pair Gram is definite after mixing") {
  const CyclicStructure p = structure_from_matrices(pauli_family());
  const CyclicStructure m = mix(p, semicircular_structure(4), 0.1);
  CHECK(min_eigenvalue(independent_pair_gram(m)) > 0.0);
  CHECK(pair_deviation(p, p) == 0.0);
  CHECK(std::abs(pair_deviation(p, m) - 0.1 * max_abs(semicircular_structure(4).gram() - p.gram())) < 1e-15);
}
