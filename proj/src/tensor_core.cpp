#include "chs/tensor_core.hpp"

#include "chs/error.hpp"
#include "chs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <stdexcept>

namespace chs {

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
  if (i >= n || j >= n) {
    throw std::out_of_range("pair_index: basis index out of range (" + std::to_string(i) + ", " +
                            std::to_string(j) + ") for dimension " + std::to_string(n));
  }
  return i * n + j;
}

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(i == 0 ? std::string("1") : "x" + std::to_string(i));
  }
  return labels;
}

CyclicStructure::CyclicStructure(std::size_t dim, Matrix gram, std::vector<std::string> labels)
    : dim_(dim), gram_(std::move(gram)), labels_(std::move(labels)) {
  if (dim_ == 0) {
    throw ShapeError("cyclic structure must have at least the pointed vector");
  }
  const auto np = static_cast<Eigen::Index>(dim_ * dim_);
  if (gram_.rows() != np || gram_.cols() != np) {
    throw ShapeError("gram must be " + std::to_string(np) + "x" + std::to_string(np) + ", got " +
                     std::to_string(gram_.rows()) + "x" + std::to_string(gram_.cols()));
  }
  if (labels_.empty()) {
    labels_ = default_labels(dim_);
  } else if (labels_.size() != dim_) {
    throw ShapeError("expected " + std::to_string(dim_) + " labels, got " + std::to_string(labels_.size()));
  }
  scale_ = std::max(1.0, gram_.diagonal().real().maxCoeff());
}

// ---------------------------------------------------------------------------

TensorElement::TensorElement(Matrix coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.rows() != coeffs_.cols()) {
    throw ShapeError("tensor element coefficients must be square");
  }
}

TensorElement TensorElement::zero(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return TensorElement(Matrix::Zero(k, k));
}

TensorElement TensorElement::basis(std::size_t i, std::size_t j, std::size_t n) {
  if (i >= n || j >= n) {
    throw std::out_of_range("TensorElement::basis index out of range");
  }
  TensorElement e = zero(n);
  e.coeffs_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return e;
}

Vector TensorElement::flat() const {
  const auto n = coeffs_.rows();
  Vector v(n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      v(i * n + j) = coeffs_(i, j);
    }
  }
  return v;
}

TensorElement TensorElement::from_flat(const Vector& v, std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  if (v.size() != k * k) {
    throw ShapeError("flat tensor has wrong length");
  }
  Matrix c(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      c(i, j) = v(i * k + j);
    }
  }
  return TensorElement(std::move(c));
}

TensorElement TensorElement::embedded(std::size_t n) const {
  if (n < dim()) {
    throw ShapeError("cannot embed a tensor into a smaller structure");
  }
  TensorElement e = zero(n);
  e.coeffs_.topLeftCorner(coeffs_.rows(), coeffs_.cols()) = coeffs_;
  return e;
}

TensorElement& TensorElement::operator+=(const TensorElement& o) {
  if (o.dim() != dim()) {
    throw ShapeError("tensor dimension mismatch");
  }
  coeffs_ += o.coeffs_;
  return *this;
}

TensorElement& TensorElement::operator-=(const TensorElement& o) {
  if (o.dim() != dim()) {
    throw ShapeError("tensor dimension mismatch");
  }
  coeffs_ -= o.coeffs_;
  return *this;
}

TensorElement& TensorElement::operator*=(cplx s) {
  coeffs_ *= s;
  return *this;
}

// ---------------------------------------------------------------------------

cplx inner(const CyclicStructure& s, const TensorElement& u, const TensorElement& v) {
  if (u.dim() != s.dim() || v.dim() != s.dim()) {
    throw ShapeError("inner: tensor dimension " + std::to_string(u.dim()) + "/" + std::to_string(v.dim()) +
                     " does not match structure dimension " + std::to_string(s.dim()));
  }
  const Vector fu = u.flat();
  const Vector fv = v.flat();
  const Matrix& g = s.gram();
  const auto np = g.rows();
  // sum_beta conj(v_beta) * (sum_alpha u_alpha g[alpha, beta]); columns are contiguous.
  cplx total = 0.0;
  for (Eigen::Index beta = 0; beta < np; ++beta) {
    if (fv(beta) == cplx(0.0)) {
      continue;
    }
    const cplx col = kernels::dotu(std::span<const cplx>(fu.data(), static_cast<std::size_t>(np)),
                                   std::span<const cplx>(g.col(beta).data(), static_cast<std::size_t>(np)));
    total += col * std::conj(fv(beta));
  }
  return total;
}

TensorElement involution(const TensorElement& u) { return TensorElement(u.coeffs().adjoint()); }

TensorElement real_part(const TensorElement& u) { return TensorElement((u.coeffs() + u.coeffs().adjoint()) * 0.5); }

TensorElement imag_part(const TensorElement& u) {
  return TensorElement((u.coeffs() - u.coeffs().adjoint()) / cplx(0.0, 2.0));
}

bool has_nontrivial_support(const TensorElement& u) {
  const auto n = static_cast<Eigen::Index>(u.dim());
  for (Eigen::Index i = 1; i < n; ++i) {
    for (Eigen::Index j = 1; j < n; ++j) {
      if (std::abs(u.coeffs()(i, j)) > kSupportZero) {
        return true;
      }
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

std::string_view axiom_name(Axiom a) {
  switch (a) {
    case Axiom::hermitian:
      return "hermitian";
    case Axiom::positivity:
      return "positivity";
    case Axiom::unit_embedding:
      return "unit_embedding";
    case Axiom::cyclicity:
      return "cyclicity";
    case Axiom::self_adjointness:
      return "self_adjointness";
    case Axiom::derived_swap:
      return "derived_swap";
    case Axiom::involution_isometry:
      return "involution_isometry";
    case Axiom::implication:
      return "implication";
  }
  return "unknown";
}

bool ValidationReport::all_pass() const {
  return std::all_of(records.begin(), records.end(), [](const AxiomRecord& r) { return r.pass; });
}

const AxiomRecord& ValidationReport::record(Axiom a) const {
  for (const auto& r : records) {
    if (r.axiom == a) {
      return r;
    }
  }
  throw std::out_of_range("validation report has no record for " + std::string(axiom_name(a)));
}

namespace {

struct Worst {
  double value = 0.0;
  std::array<std::size_t, 4> witness{0, 0, 0, 0};
  void offer(double v, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
    if (v > value) {
      value = v;
      witness = {a, b, c, d};
    }
  }
};

// Visits every 4-tuple; f returns the violation at (a,b,c,d).
template <typename F>
Worst scan_tuples(std::size_t n, F&& f) {
  Worst w;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t d = 0; d < n; ++d) {
          w.offer(f(a, b, c, d), a, b, c, d);
        }
      }
    }
  }
  return w;
}

AxiomRecord make_record(Axiom axiom, const Worst& w, double threshold) {
  AxiomRecord r;
  r.axiom = axiom;
  r.worst = w.value;
  r.threshold = threshold;
  r.pass = w.value <= threshold;
  r.witness = w.witness;
  return r;
}

}  // namespace

double cyclicity_defect(const CyclicStructure& s) {
  return scan_tuples(s.dim(), [&](auto a, auto b, auto c, auto d) {
           return std::abs(s.at(a, b, c, d) - s.at(c, a, d, b));
         })
      .value;
}

double self_adjointness_defect(const CyclicStructure& s) {
  return scan_tuples(s.dim(), [&](auto a, auto b, auto c, auto d) {
           return std::abs(s.at(a, b, c, d) - std::conj(s.at(b, a, d, c)));
         })
      .value;
}

ValidationReport validate(const CyclicStructure& s, double tol, std::uint64_t seed) {
  if (!(tol > 0.0)) {
    throw std::invalid_argument("validate: tolerance must be positive");
  }
  const std::size_t n = s.dim();
  const double scale = s.scale();
  const Matrix& g = s.gram();

  ValidationReport rep;
  rep.tol = tol;
  rep.scale = scale;

  // hermitian
  Worst herm;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t d = 0; d < n; ++d) {
          herm.offer(std::abs(s.at(a, b, c, d) - std::conj(s.at(c, d, a, b))) / scale, a, b, c, d);
        }
      }
    }
  }
  rep.records.push_back(make_record(Axiom::hermitian, herm, tol));

  // positivity
  const Eigen::VectorXd ev = hermitian_eigenvalues(g);
  rep.min_eigenvalue = ev.minCoeff();
  rep.kernel_dim = static_cast<std::size_t>((ev.array().abs() <= tol * scale).count());
  {
    Worst pos;
    pos.value = std::max(0.0, -rep.min_eigenvalue) / scale;
    rep.records.push_back(make_record(Axiom::positivity, pos, tol));
  }

  // unit embeddings, absolute
  {
    Worst unit;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const cplx delta = i == j ? 1.0 : 0.0;
        unit.offer(std::abs(s.at(i, 0, j, 0) - delta), i, 0, j, 0);
        unit.offer(std::abs(s.at(0, i, 0, j) - delta), 0, i, 0, j);
      }
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 32; ++trial) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(n));
      for (auto& x : v) {
        x = normal(rng);
      }
      const double vv = v.squaredNorm();
      if (vv == 0.0) {
        continue;
      }
      const auto k = static_cast<Eigen::Index>(n);
      Matrix lc = Matrix::Zero(k, k);
      Matrix rc = Matrix::Zero(k, k);
      lc.col(0) = v.cast<cplx>();
      rc.row(0) = v.cast<cplx>().transpose();
      const TensorElement left(lc);
      const TensorElement right(rc);
      unit.offer(std::abs(inner(s, left, left) - vv) / vv, 0, 0, 0, 0);
      unit.offer(std::abs(inner(s, right, right) - vv) / vv, 0, 0, 0, 0);
    }
    rep.records.push_back(make_record(Axiom::unit_embedding, unit, tol));
  }

  // <<a b, c d>> = <<c a, d b>>
  const Worst cyc = scan_tuples(n, [&](auto a, auto b, auto c, auto d) {
    return std::abs(s.at(a, b, c, d) - s.at(c, a, d, b)) / scale;
  });
  rep.records.push_back(make_record(Axiom::cyclicity, cyc, tol));

  // <<a b, c d>> = conj <<b a, d c>>
  const Worst sadj = scan_tuples(n, [&](auto a, auto b, auto c, auto d) {
    return std::abs(s.at(a, b, c, d) - std::conj(s.at(b, a, d, c))) / scale;
  });
  rep.records.push_back(make_record(Axiom::self_adjointness, sadj, tol));

  // <<a b, c d>> = <<b d, a c>>
  const Worst swap = scan_tuples(n, [&](auto a, auto b, auto c, auto d) {
    return std::abs(s.at(a, b, c, d) - s.at(b, d, a, c)) / scale;
  });
  rep.records.push_back(make_record(Axiom::derived_swap, swap, 10.0 * tol));

  // involution isometry on random complex tensors
  {
    Worst iso;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal;
    const auto k = static_cast<Eigen::Index>(n);
    for (int trial = 0; trial < 32; ++trial) {
      Matrix c(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
          c(i, j) = cplx(normal(rng), normal(rng));
        }
      }
      const TensorElement u(c);
      const TensorElement ju = involution(u);
      const double w = c.squaredNorm() * scale;
      iso.offer(std::abs(inner(s, ju, ju) - inner(s, u, u)) / w, 0, 0, 0, 0);
    }
    rep.records.push_back(make_record(Axiom::involution_isometry, iso, 10.0 * tol));
  }

  // whenever hermitianity, cyclicity and self-adjointness hold, the swap and
  // involution checks must pass too
  {
    const bool premises = rep.record(Axiom::hermitian).pass && rep.record(Axiom::cyclicity).pass &&
                          rep.record(Axiom::self_adjointness).pass;
    const auto& sw = rep.record(Axiom::derived_swap);
    const auto& iv = rep.record(Axiom::involution_isometry);
    AxiomRecord implied;
    implied.axiom = Axiom::implication;
    implied.threshold = 10.0 * tol;
    implied.worst = premises ? std::max(sw.worst, iv.worst) : 0.0;
    implied.witness = sw.worst >= iv.worst ? sw.witness : iv.witness;
    implied.pass = !premises || (sw.pass && iv.pass);
    rep.records.push_back(implied);
  }
  return rep;
}

// ---------------------------------------------------------------------------

SpanProjection project_onto_span(const CyclicStructure& s, const TensorElement& u,
                                 const std::vector<TensorElement>& basis) {
  const std::size_t n = s.dim();
  const auto r = static_cast<Eigen::Index>(basis.size());
  // inner(u, v) = v^H K u with K = conj(gram)
  const Matrix k = s.gram().conjugate();
  Matrix t(static_cast<Eigen::Index>(n * n), r);
  for (Eigen::Index c = 0; c < r; ++c) {
    t.col(c) = basis[static_cast<std::size_t>(c)].flat();
  }
  const Vector fu = u.flat();
  const Matrix kt = k * t;
  const Matrix h = t.adjoint() * kt;
  const Vector rhs = kt.adjoint() * fu;
  const HermitianPinv hp = hermitian_pinv(h);

  SpanProjection out;
  out.coefficients = hp.pinv * rhs;
  const Vector proj = t * out.coefficients;
  out.projection = TensorElement::from_flat(proj, n);
  out.residual = TensorElement::from_flat(fu - proj, n);
  out.distance = std::sqrt(std::max(0.0, norm_sq(s, out.residual)));
  return out;
}

std::vector<TensorElement> left_unit_span(std::size_t n) {
  std::vector<TensorElement> basis;
  basis.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    basis.push_back(TensorElement::basis(m, 0, n));
  }
  return basis;
}

TrivialProjection trivial_projection(const CyclicStructure& s, const TensorElement& u) {
  // Left first: the right part only uses the components of 1(x)x_m orthogonal
  // to V(x)1, so anything already in V(x)1 stays on the left.
  const std::size_t n = s.dim();
  const std::vector<TensorElement> left_basis = left_unit_span(n);
  const SpanProjection left_only = project_onto_span(s, u, left_basis);

  std::vector<TensorElement> right_basis;
  std::vector<TensorElement> right_shadow;  // projections of 1(x)x_m onto V(x)1
  for (std::size_t m = 1; m < n; ++m) {
    const TensorElement r = TensorElement::basis(0, m, n);
    SpanProjection p = project_onto_span(s, r, left_basis);
    right_basis.push_back(std::move(p.residual));
    right_shadow.push_back(std::move(p.projection));
  }

  TrivialProjection out;
  out.left = left_only.projection;
  out.right = TensorElement::zero(n);
  if (!right_basis.empty()) {
    // The orthogonalized right vectors are often numerically null (in matrix
    // models x_m(x)1 and 1(x)x_m coincide), so rank is judged against the
    // scale of the full Gram rather than their own.
    const Matrix k = s.gram().conjugate();
    const auto nr = static_cast<Eigen::Index>(right_basis.size());
    Matrix t(static_cast<Eigen::Index>(n * n), nr);
    Matrix full(static_cast<Eigen::Index>(n * n), nr + static_cast<Eigen::Index>(n));
    for (Eigen::Index c = 0; c < nr; ++c) {
      t.col(c) = right_basis[static_cast<std::size_t>(c)].flat();
      full.col(c) = TensorElement::basis(0, static_cast<std::size_t>(c) + 1, n).flat();
    }
    for (std::size_t m = 0; m < n; ++m) {
      full.col(nr + static_cast<Eigen::Index>(m)) = left_basis[m].flat();
    }
    const double scale = hermitian_pinv(full.adjoint() * k * full).largest;
    const Matrix kt = k * t;
    const HermitianPinv hp = hermitian_pinv(t.adjoint() * kt);
    Vector beta = Vector::Zero(nr);
    if (hp.largest > kPinvCutoff * scale) {
      const HermitianPinv cut = hermitian_pinv(t.adjoint() * kt, kPinvCutoff * scale / hp.largest);
      beta = cut.pinv * (kt.adjoint() * left_only.residual.flat());
    }
    for (std::size_t m = 1; m < n; ++m) {
      const cplx b = beta(static_cast<Eigen::Index>(m - 1));
      out.right += b * TensorElement::basis(0, m, n);
      out.left -= b * right_shadow[m - 1];
    }
  }
  out.residual = u - out.left - out.right;
  out.distance = std::sqrt(std::max(0.0, norm_sq(s, out.residual)));
  out.distance_left = left_only.distance;
  out.nontrivial_support = has_nontrivial_support(u);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> independent_pairs(std::size_t n) {
  std::vector<std::size_t> idx;
  idx.reserve(n * n - n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == 0 && j != 0) {
        continue;
      }
      idx.push_back(i * n + j);
    }
  }
  return idx;
}

Matrix independent_pair_gram(const CyclicStructure& s) {
  const auto idx = independent_pairs(s.dim());
  const auto m = static_cast<Eigen::Index>(idx.size());
  Matrix out(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      out(r, c) = s.gram()(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(r)]),
                           static_cast<Eigen::Index>(idx[static_cast<std::size_t>(c)]));
    }
  }
  return out;
}

double pair_deviation(const CyclicStructure& a, const CyclicStructure& b) {
  const std::size_t n = std::min(a.dim(), b.dim());
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          worst = std::max(worst, std::abs(a.at(i, j, k, l) - b.at(i, j, k, l)));
        }
      }
    }
  }
  return worst;
}

}  // namespace chs
