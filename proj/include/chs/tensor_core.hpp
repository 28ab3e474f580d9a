#pragma once

// Cyclic structures: a pointed real space with orthonormal basis
// x_0 = 1, x_1, ..., x_{n-1} and a hermitian positive form on the
// complexified pair space, stored as the Gram tensor
//
//   gram[p(i,j), p(k,l)] = <<x_i (x) x_j, x_k (x) x_l>>,   p(i,j) = i*n + j.
//
// The form is linear in its first argument and conjugate-linear in the
// second. In a trace model <<a(x)b, c(x)d>> = tau(a b d c).

#include "chs/linalg.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace chs {

inline constexpr double kDefaultTol = 1e-9;

// Coefficients below this magnitude are ignored by the raw-support test.
inline constexpr double kSupportZero = 1e-12;

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n);

class CyclicStructure {
 public:
  // Default labels are "1", "x1", ..., "x{n-1}". Throws ShapeError if the
  // gram is not n^2 x n^2 or the label count is wrong.
  CyclicStructure(std::size_t dim, Matrix gram, std::vector<std::string> labels = {});

  std::size_t dim() const noexcept { return dim_; }
  std::size_t pairs() const noexcept { return dim_ * dim_; }
  const Matrix& gram() const noexcept { return gram_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  // <<x_a (x) x_b, x_c (x) x_d>>
  cplx at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
    return gram_(static_cast<Eigen::Index>(a * dim_ + b), static_cast<Eigen::Index>(c * dim_ + d));
  }

  // max(1, largest real diagonal entry); the reference for relative tolerances.
  double scale() const noexcept { return scale_; }

 private:
  std::size_t dim_;
  Matrix gram_;
  std::vector<std::string> labels_;
  double scale_;
};

std::vector<std::string> default_labels(std::size_t n);

// An element sum_{i,j} C[i,j] x_i (x) x_j of the complexified pair space.
class TensorElement {
 public:
  TensorElement() = default;
  explicit TensorElement(Matrix coeffs);

  static TensorElement zero(std::size_t n);
  // x_i (x) x_j
  static TensorElement basis(std::size_t i, std::size_t j, std::size_t n);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(coeffs_.rows()); }
  const Matrix& coeffs() const noexcept { return coeffs_; }
  cplx operator()(std::size_t i, std::size_t j) const {
    return coeffs_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }

  // Row-major flattening matching pair_index.
  Vector flat() const;
  static TensorElement from_flat(const Vector& v, std::size_t n);

  // Same tensor seen in a structure with more basis vectors (zero padding).
  TensorElement embedded(std::size_t n) const;

  double coeff_norm() const { return coeffs_.norm(); }

  TensorElement& operator+=(const TensorElement& o);
  TensorElement& operator-=(const TensorElement& o);
  TensorElement& operator*=(cplx s);

  friend TensorElement operator+(TensorElement a, const TensorElement& b) { return a += b; }
  friend TensorElement operator-(TensorElement a, const TensorElement& b) { return a -= b; }
  friend TensorElement operator*(cplx s, TensorElement a) { return a *= s; }
  friend TensorElement operator*(TensorElement a, cplx s) { return a *= s; }

 private:
  Matrix coeffs_;
};

// sum C_u[i,j] conj(C_v[k,l]) gram[p(i,j), p(k,l)]
cplx inner(const CyclicStructure& s, const TensorElement& u, const TensorElement& v);

inline double norm_sq(const CyclicStructure& s, const TensorElement& u) { return inner(s, u, u).real(); }

// Conjugate-linear swap a(x)b -> b(x)a: the coefficient matrix becomes C^H.
TensorElement involution(const TensorElement& u);
TensorElement real_part(const TensorElement& u);
TensorElement imag_part(const TensorElement& u);

// True when some coefficient at (i,j) with i != 0 and j != 0 exceeds
// kSupportZero, i.e. u is not literally in V(x)1 + 1(x)V.
bool has_nontrivial_support(const TensorElement& u);

// ---------------------------------------------------------------------------
// Validation

enum class Axiom {
  hermitian,
  positivity,
  unit_embedding,
  cyclicity,            // <<a b, c d>> = <<c a, d b>>
  self_adjointness,     // <<a b, c d>> = conj <<b a, d c>>
  derived_swap,         // <<a b, c d>> = <<b d, a c>>
  involution_isometry,  // <<Ju, Ju>> = <<u, u>>
  implication,          // cyclicity and self-adjointness force the two above
};

std::string_view axiom_name(Axiom a);

struct AxiomRecord {
  Axiom axiom;
  bool pass = true;
  double worst = 0.0;      // relative to scale() except for unit_embedding
  double threshold = 0.0;  // pass <=> worst <= threshold
  std::array<std::size_t, 4> witness{0, 0, 0, 0};
};

struct ValidationReport {
  double tol = kDefaultTol;
  double scale = 1.0;
  double min_eigenvalue = 0.0;
  std::size_t kernel_dim = 0;
  std::vector<AxiomRecord> records;

  bool all_pass() const;
  const AxiomRecord& record(Axiom a) const;
};

// Checks hermitianity, positivity, the unit embeddings (basis pairs and 32
// random real vectors), cyclicity and self-adjointness over all 4-tuples, and
// the swap and involution checks at 10*tol. Failures are reported, never thrown.
ValidationReport validate(const CyclicStructure& s, double tol = kDefaultTol, std::uint64_t seed = 0x5eedULL);

// Largest entry deviation from the orbit relations; also used by tests.
double cyclicity_defect(const CyclicStructure& s);
double self_adjointness_defect(const CyclicStructure& s);

// ---------------------------------------------------------------------------
// Projections

// Least-squares projection of u onto span(basis) in the (semi)norm of s.
struct SpanProjection {
  Vector coefficients;  // u ~ sum_r coefficients[r] * basis[r]
  TensorElement projection;
  TensorElement residual;
  double distance = 0.0;  // seminorm of the residual
};

SpanProjection project_onto_span(const CyclicStructure& s, const TensorElement& u,
                                 const std::vector<TensorElement>& basis);

// x_m (x) 1 for m = 0..n-1
std::vector<TensorElement> left_unit_span(std::size_t n);

struct TrivialProjection {
  TensorElement left;      // component in V(x)1
  TensorElement right;     // component in 1(x)V (the shared 1(x)1 goes left)
  TensorElement residual;
  double distance = 0.0;       // to V(x)1 + 1(x)V
  double distance_left = 0.0;  // to V(x)1 alone
  bool nontrivial_support = false;
};

TrivialProjection trivial_projection(const CyclicStructure& s, const TensorElement& u);

// ---------------------------------------------------------------------------
// Independent pair set: (0,0), (i,0) for i >= 1 and (i,j) for i,j >= 1.
// The pairs (0,i) are omitted because 1(x)x_i - x_i(x)1 is null in every trace
// model, so the full n^2 pair Gram is never definite.

std::vector<std::size_t> independent_pairs(std::size_t n);
Matrix independent_pair_gram(const CyclicStructure& s);

// Max entrywise |gram_a - gram_b| over the first n^2 x n^2 pairs of a common
// basis: b may have more basis vectors than a.
double pair_deviation(const CyclicStructure& a, const CyclicStructure& b);

}  // namespace chs
