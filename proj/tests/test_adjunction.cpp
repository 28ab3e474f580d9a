#include "chs/adjunction.hpp"
#include "chs/error.hpp"
#include "chs/moment_sources.hpp"

#include <doctest.h>

#include <random>

using namespace chs;

namespace {

CyclicStructure pauli() { return structure_from_matrices(pauli_family()); }

TensorElement pauli_target() { return imag_part(TensorElement::basis(1, 2, 4)); }

CyclicStructure sigma_x_pair() {
  Matrix sx(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  return structure_from_matrices(orthonormalize(std::vector<Matrix>{sx}));
}

// Y (x) 1 and 1 (x) Y in the orthonormal coordinates of W
TensorElement y_tensor_unit(const ExtensionResult& r, bool left) {
  const std::size_t n = r.structure.dim();
  Matrix c = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index m = 0; m < r.y_coordinates.size(); ++m) {
    if (left) {
      c(m, 0) = r.y_coordinates(m);
    } else {
      c(0, m) = r.y_coordinates(m);
    }
  }
  return TensorElement(c);
}

TensorElement y_tensor_y(const ExtensionResult& r) {
  const RealVector& y = r.y_coordinates;
  return TensorElement(Matrix((y * y.transpose()).cast<cplx>()));
}

// sum over an orthonormalization of the V pairs of |<<Y(x)Y, e>>|^2
double bessel_oracle(const ExtensionResult& r) {
  const std::size_t n = r.perturbed.dim();
  const std::size_t w = r.structure.dim();
  const TensorElement yy = y_tensor_y(r);
  Vector c(static_cast<Eigen::Index>(n * n));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      c(static_cast<Eigen::Index>(a * n + b)) = inner(r.structure, TensorElement::basis(a, b, w), yy);
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(r.perturbed.gram());
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double lam = es.eigenvalues()(k);
    if (lam > 1e-10 * top) {
      acc += std::norm(es.eigenvectors().col(k).dot(c)) / lam;
    }
  }
  return acc;
}

TensorElement random_target(const CyclicStructure& s, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  const auto n = static_cast<Eigen::Index>(s.dim());
  Matrix c = Matrix::Zero(n, n);
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 1; j < n; ++j) {
      c(i, j) = cplx(nd(rng), nd(rng));
    }
  }
  TensorElement y = real_part(TensorElement(c));
  return y * cplx(1.0 / std::sqrt(norm_sq(s, y)));
}

}  // namespace

TEST_CASE("check_target") {
  const CyclicStructure s = pauli();
  const ExtensionTarget t = check_target(s, pauli_target());
  CHECK(t.self_adjoint);
  CHECK(t.unit_norm);
  CHECK(t.nontrivial);
  CHECK(std::abs(t.norm_sq - 1.0) < 1e-15);
  CHECK_THROWS_AS(check_target(s, TensorElement::basis(2, 0, 4)), TargetError);
  try {
    check_target(s, pauli_target() * cplx(2.0));
    FAIL("scaled target accepted");
  } catch (const TargetError& e) {
    CHECK(std::string(e.what()).find("norm 1") != std::string::npos);
  }
  CHECK_THROWS_AS(check_target(s, TensorElement::basis(1, 2, 4)), TargetError);
}

TEST_CASE("perturb") {
  const CyclicStructure s = pauli();
  const Perturbation p = perturb(s, 1e-2);
  CHECK(p.deviation < 1e-2);
  CHECK(p.independent_min_eigenvalue > 0.0);
  CHECK(min_eigenvalue(independent_pair_gram(p.structure)) > 0.0);
  CHECK(validate(p.structure).all_pass());
  CHECK_THROWS_AS(perturb(s, 0.0), std::invalid_argument);
  // already definite inputs are mixed all the same
  const Perturbation q = perturb(semicircular_structure(3), 1e-2);
  CHECK(q.mix_weight > 0.0);
}

TEST_CASE("pinned lambdas") {
  const CyclicStructure s = pauli();
  const LambdaTable t = pinned_lambdas(s, pauli_target());
  CHECK(std::abs(t.lambda(3, 0) - 1.0) < 1e-15);
  CHECK(std::abs(t.lambda(0, 0)) < 1e-15);
  CHECK(t.consistency_defect < 1e-12);
  // a J-violating target pins conflicting values
  TensorElement bad = pauli_target();
  Matrix c = bad.coeffs();
  c(1, 2) += cplx(0.3, 0.0);
  c(3, 0) = cplx(0.0, 0.5);
  CHECK_THROWS_AS(pinned_lambdas(s, TensorElement(c)), PinningError);
}

TEST_CASE("one-Y solve") {
  const CyclicStructure s = sigma_x_pair();
  const TensorElement y = TensorElement::basis(1, 1, 2);
  const Perturbation p = perturb(s, 1e-2);
  const TensorElement ye = y * cplx(1.0 / std::sqrt(norm_sq(p.structure, y)));
  const EtaSystem sys = solve_one_y_block(p.structure, pinned_lambdas(p.structure, ye));
  CHECK(sys.solve_residual < 1e-12);
  CHECK(sys.range_residual < 1e-9);
  for (std::size_t j = 0; j < 2; ++j) {
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs(sys.at(k, j, 0) - std::conj(sys.at(0, j, k))) < 1e-14);
    }
  }
  // without perturbation the pair Gram of a trace model is singular
  CHECK_THROWS_AS(solve_one_y_block(pauli(), pinned_lambdas(pauli(), pauli_target())), SolverError);
}

TEST_CASE("extend on the Pauli structure") {
  const CyclicStructure s = pauli();
  const ExtensionResult r = extend(s, pauli_target(), 1e-2);
  CHECK(r.structure.dim() == 5);
  CHECK(validate(r.structure, 1e-8).all_pass());
  CHECK(r.epsilon_achieved < 1e-2);
  CHECK(r.null_residual_left < 1e-8);
  CHECK(r.null_residual_right < 1e-8);
  CHECK(min_eigenvalue(r.structure.gram()) >= -1e-8 * r.structure.scale());

  // null residuals recomputed from the stored structure
  CHECK(seminorm(r.structure, y_tensor_unit(r, true) - r.y) < 1e-8);
  CHECK(seminorm(r.structure, y_tensor_unit(r, false) - r.y) < 1e-8);

  // Bessel bound, from an independent eigen-decomposition of the pair Gram
  const double bessel = bessel_oracle(r);
  CHECK(r.t_min >= bessel * (1.0 - 1e-9));
  CHECK(std::abs(r.bessel_bound - bessel) <= 1e-6 * std::max(1.0, bessel));
  CHECK(std::abs(norm_sq(r.structure, y_tensor_y(r)) - r.t) <= 1e-8 * r.t);

  // the V-pair block is S_eps, untouched
  const std::size_t n = s.dim();
  bool same = true;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t d = 0; d < n; ++d) {
          same = same && r.structure.at(a, b, c, d) == r.perturbed.at(a, b, c, d);
        }
      }
    }
  }
  CHECK(same);
  // orbit relations hold exactly, not just within tolerance
  CHECK(cyclicity_defect(r.structure) == 0.0);
  CHECK(self_adjointness_defect(r.structure) == 0.0);
}

TEST_CASE("t below t_min certifies a negative eigenvalue") {
  const CyclicStructure s = pauli();
  const ExtendOptions base;
  const Perturbation p = perturb(s, 1e-2, base.margin);
  const TensorElement y = pauli_target() * cplx(1.0 / std::sqrt(norm_sq(p.structure, pauli_target())));
  const EtaSystem sys = solve_one_y_block(p.structure, pinned_lambdas(p.structure, y));
  AssembleOptions diag;
  for (double shift : {-1e-3, -1e-6 * p.structure.scale()}) {
    diag.t_shift = shift;
    const ExtensionResult r = assemble(p.structure, y, sys, diag);
    CHECK(r.witness_value < 0.0);
    CHECK(r.witness_rayleigh < 0.0);
  }
  diag.t_shift = 1e-3;
  CHECK(assemble(p.structure, y, sys, diag).witness_value > 0.0);
}

TEST_CASE("extend the {I, sigma_x} structure by sigma_x (x) sigma_x") {
  const CyclicStructure s = sigma_x_pair();
  const ExtensionResult r = extend(s, TensorElement::basis(1, 1, 2), 1e-2);
  CHECK(r.structure.dim() == 3);
  CHECK(validate(r.structure, 1e-8).all_pass());
  CHECK(r.epsilon_achieved < 1e-2);
  // Y plays sigma_x^2 = 1
  const TensorElement diff = y_tensor_unit(r, true) - TensorElement::basis(0, 0, 3);
  CHECK(seminorm(r.structure, diff) < 0.1);
}

TEST_CASE("budget is respected and monotone in epsilon") {
  const CyclicStructure s = pauli();
  double last = 1.0;
  for (double eps : {1e-2, 5e-3, 2.5e-3, 1e-4}) {
    const ExtensionResult r = extend(s, pauli_target(), eps);
    CHECK(r.epsilon_achieved < eps);
    CHECK(r.epsilon_achieved <= last);
    CHECK(r.validation.all_pass());
    last = r.epsilon_achieved;
  }
}

TEST_CASE("random instances") {
  std::mt19937_64 rng(77);
  for (std::uint64_t k = 0; k < 6; ++k) {
    const std::size_t d = 2 + k % 2;
    const std::size_t n = 3 + k % 2;
    const CyclicStructure s = structure_from_matrices(random_family(d, n, 100 + k));
    const TensorElement y = random_target(s, rng);
    const ExtensionResult r = extend(s, y, 1e-2);
    CHECK(validate(r.structure, 1e-8).all_pass());
    CHECK(r.epsilon_achieved < 1e-2);
    CHECK(r.null_residual_left < 1e-8);
    CHECK(r.null_residual_right < 1e-8);
    CHECK(r.t_min >= r.bessel_bound);
  }
}
