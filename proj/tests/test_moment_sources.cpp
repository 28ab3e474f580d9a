#include "chs/error.hpp"
#include "chs/moment_sources.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <functional>
#include <random>

using namespace chs;

namespace {

Matrix pauli(int k) {
  Matrix m(2, 2);
  const cplx i(0.0, 1.0);
  if (k == 1) {
    m << 0.0, 1.0, 1.0, 0.0;
  } else if (k == 2) {
    m << 0.0, -i, i, 0.0;
  } else {
    m << 1.0, 0.0, 0.0, -1.0;
  }
  return m;
}

// all words of length len over letters 0..g
void for_each_word(std::size_t len, std::size_t g, const std::function<void(const std::vector<std::size_t>&)>& f) {
  std::vector<std::size_t> w(len, 0);
  for (;;) {
    f(w);
    std::size_t k = 0;
    while (k < len && ++w[k] > g) {
      w[k++] = 0;
    }
    if (k == len) {
      return;
    }
  }
}

}  // namespace

TEST_CASE("orthonormalize") {
  const Matrix sx = pauli(1);
  const Matrix sy = pauli(2);
  const MatrixFamily a = orthonormalize(std::vector<Matrix>{sx});
  REQUIRE(a.size() == 2);
  CHECK((a.matrices[0] - Matrix::Identity(2, 2)).norm() < 1e-15);
  CHECK((a.matrices[1] - sx).norm() < 1e-15);

  const MatrixFamily b = orthonormalize(std::vector<Matrix>{sx, sx + sy});
  REQUIRE(b.size() == 3);
  CHECK((b.matrices[2] - sy).norm() < 1e-14);
  CHECK(family_defect(b) < 1e-14);

  try {
    orthonormalize(std::vector<Matrix>{sx, 2.0 * sx});
    FAIL("dependent input accepted");
  } catch (const LinearDependenceError& e) {
    CHECK(e.index() == 1);
  }
  Matrix bad = sx;
  bad(0, 1) = 2.0;
  CHECK_THROWS_AS(orthonormalize(std::vector<Matrix>{bad}), ShapeError);
}

TEST_CASE("Pauli structure entries") {
  const CyclicStructure s = structure_from_matrices(pauli_family());
  CHECK(std::abs(s.at(1, 2, 3, 0) - cplx(0.0, 1.0)) < 1e-15);
  CHECK(std::abs(s.at(1, 1, 1, 1) - 1.0) < 1e-15);
  CHECK(std::abs(s.at(1, 2, 2, 1) + 1.0) < 1e-15);
  CHECK(s.gram().rows() == 16);
}

TEST_CASE("random families are orthonormal and self-adjoint") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t d = 2 + seed % 3;
    const MatrixFamily f = random_family(d, std::min<std::size_t>(d * d, 5), seed);
    CHECK(family_defect(f) < 1e-12);
    const CyclicStructure s = structure_from_matrices(f);
    // hermitianity holds to round-off by trace identities
    CHECK((s.gram() - s.gram().adjoint()).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK_THROWS_AS(random_family(2, 5, 0), std::invalid_argument);
  CHECK_THROWS_AS(random_family(2, 0, 0), std::invalid_argument);
}

TEST_CASE("trace moment gram against naive products") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  std::vector<Matrix> mats;
  std::vector<oracle::Mat> ref;
  for (int k = 0; k < 3; ++k) {
    Matrix m(3, 3);
    oracle::Mat r{3, std::vector<oracle::cplx>(9)};
    for (int i = 0; i < 9; ++i) {
      m.data()[i] = cplx(nd(rng), nd(rng));
    }
    for (std::size_t rr = 0; rr < 3; ++rr) {
      for (std::size_t cc = 0; cc < 3; ++cc) {
        r(rr, cc) = m(static_cast<Eigen::Index>(rr), static_cast<Eigen::Index>(cc));
      }
    }
    mats.push_back(m);
    ref.push_back(r);
  }
  const Matrix g = trace_moment_gram(mats);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t d = 0; d < 3; ++d) {
          const cplx want = oracle::gram_entry(ref, a, b, c, d);
          CHECK(std::abs(g(static_cast<Eigen::Index>(a * 3 + b), static_cast<Eigen::Index>(c * 3 + d)) - want) <
                1e-12 * std::max(1.0, std::abs(want)));
        }
      }
    }
  }
}

TEST_CASE("semicircular moments: spot values") {
  using W = std::vector<std::size_t>;
  CHECK(semicircular_moment(W{1, 1, 1, 1}) == 2);
  CHECK(semicircular_moment(W{1, 2, 1, 2}) == 0);
  CHECK(semicircular_moment(W{1, 0, 1}) == 1);
  CHECK(semicircular_moment(W{1}) == 0);
  CHECK(semicircular_moment(W{}) == 1);
  const std::uint64_t catalan[] = {1, 2, 5, 14, 42, 132};
  for (std::size_t m = 1; m <= 6; ++m) {
    CHECK(semicircular_moment(W(2 * m, 1)) == catalan[m - 1]);
    CHECK(oracle::semicircular_moment(W(2 * m, 1)) == catalan[m - 1]);
  }
}

TEST_CASE("semicircular moments agree with brute-force enumeration") {
  std::size_t words = 0;
  for (std::size_t len = 0; len <= 8; ++len) {
    for_each_word(len, 3, [&](const std::vector<std::size_t>& w) {
      ++words;
      REQUIRE(semicircular_moment(w) == oracle::semicircular_moment(w));
    });
  }
  CHECK(words > 80000);
}

TEST_CASE("semicircular structure") {
  const CyclicStructure s2 = semicircular_structure(2);
  CHECK(s2.at(1, 1, 1, 1) == 2.0);
  CHECK(s2.at(1, 1, 0, 0) == 1.0);
  const CyclicStructure s3 = semicircular_structure(3);
  CHECK(s3.at(1, 2, 1, 2) == 1.0);
  CHECK(s3.at(1, 2, 2, 1) == 0.0);
  for (std::size_t n = 1; n <= 8; ++n) {
    const CyclicStructure s = semicircular_structure(n);
    CHECK(validate(s).all_pass());
    CHECK(min_eigenvalue(s.gram()) >= -1e-12);
    CHECK(min_eigenvalue(independent_pair_gram(s)) >= 0.1);
  }
}

TEST_CASE("mix") {
  const CyclicStructure a = structure_from_matrices(pauli_family());
  const CyclicStructure b = semicircular_structure(4);
  CHECK((mix(a, b, 0.0).gram() - a.gram()).norm() == 0.0);
  CHECK((mix(a, b, 1.0).gram() - b.gram()).norm() == 0.0);
  const double spread = max_abs(b.gram() - a.gram());
  for (double lam : {1e-3, 0.1, 0.5}) {
    const CyclicStructure m = mix(a, b, lam);
    CHECK(std::abs(pair_deviation(a, m) - lam * spread) < 1e-14);
    CHECK(validate(m).all_pass());
    CHECK(min_eigenvalue(independent_pair_gram(m)) >= lam * min_eigenvalue(independent_pair_gram(b)) * (1 - 1e-9));
  }
  CHECK_THROWS_AS(mix(a, semicircular_structure(3), 0.5), ShapeError);
  CHECK_THROWS_AS(mix(a, b, 1.5), std::invalid_argument);
}
