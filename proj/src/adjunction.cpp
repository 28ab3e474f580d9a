#include "chs/adjunction.hpp"

#include "chs/error.hpp"
#include "chs/moment_sources.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace chs {

namespace {

std::string sci(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

ExtensionTarget check_target(const CyclicStructure& s, const TensorElement& y) {
  if (y.dim() != s.dim()) {
    throw ShapeError("target has dimension " + std::to_string(y.dim()) + ", structure has " + std::to_string(s.dim()));
  }
  ExtensionTarget out;
  out.y = y;
  out.adjoint_defect = max_abs(involution(y).coeffs() - y.coeffs());
  out.norm_sq = norm_sq(s, y);
  out.self_adjoint = out.adjoint_defect <= kTargetTol;
  out.unit_norm = std::abs(out.norm_sq - 1.0) <= kTargetTol;
  out.nontrivial = has_nontrivial_support(y);

  std::vector<std::string> failures;
  if (!out.self_adjoint) {
    failures.push_back("y must be self-adjoint (max |Jy - y| = " + sci(out.adjoint_defect) + ")");
  }
  if (!out.unit_norm) {
    failures.push_back("y must have norm 1 (<<y, y>> = " + sci(out.norm_sq) + ")");
  }
  if (!out.nontrivial) {
    failures.push_back("y must have support outside V(x)1 + 1(x)V");
  }
  if (!failures.empty()) {
    std::string msg = "invalid extension target: ";
    for (std::size_t k = 0; k < failures.size(); ++k) {
      msg += (k ? "; " : "") + failures[k];
    }
    throw TargetError(msg);
  }
  return out;
}

Perturbation perturb(const CyclicStructure& s, double eps, double margin) {
  if (!(eps > 0.0)) {
    throw std::invalid_argument("perturbation: epsilon must be positive");
  }
  if (!(margin > 0.0 && margin < 1.0)) {
    throw std::invalid_argument("perturbation: margin must lie in (0, 1)");
  }
  const CyclicStructure semi = semicircular_structure(s.dim());
  const double spread = max_abs(semi.gram() - s.gram());
  const double mu_s = min_eigenvalue(independent_pair_gram(semi));

  Perturbation out{s, eps / (1.0 + spread), 0.0, 0.0, mu_s, 0};
  constexpr int kMaxHalvings = 60;
  for (;;) {
    CyclicStructure mixed = mix(s, semi, out.mix_weight);
    out.deviation = max_abs(mixed.gram() - s.gram());
    out.independent_min_eigenvalue = min_eigenvalue(independent_pair_gram(mixed));
    const bool close = out.deviation < eps;
    const bool definite = out.independent_min_eigenvalue >= out.mix_weight * mu_s * (1.0 - margin);
    if ((close && definite) || out.halvings == kMaxHalvings) {
      out.structure = std::move(mixed);
      return out;
    }
    out.mix_weight *= 0.5;
    ++out.halvings;
  }
}

LambdaTable pinned_lambdas(const CyclicStructure& s_eps, const TensorElement& y) {
  const std::size_t n = s_eps.dim();
  if (y.dim() != n) {
    throw ShapeError("pinned_lambdas: dimension mismatch");
  }
  LambdaTable out;
  out.y = y;
  // lambda_beta = sum_alpha y_alpha G[alpha, beta]
  const Vector lam = s_eps.gram().transpose() * y.flat();
  out.lambda = Matrix(ix(n), ix(n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      out.lambda(ix(k), ix(i)) = lam(ix(k * n + i));
    }
  }
  // F(0,j,k) = lambda(k,j) and F(i,j,0) = lambda(j,i) meet at F(0,j,0), and
  // reversal pairs F(0,j,k) with F(k,j,0).
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    worst = std::max(worst, std::abs(out.lambda(ix(0), ix(j)) - out.lambda(ix(j), ix(0))));
    for (std::size_t k = 0; k < n; ++k) {
      worst = std::max(worst, std::abs(out.lambda(ix(j), ix(k)) - std::conj(out.lambda(ix(k), ix(j)))));
    }
  }
  out.consistency_defect = worst;
  if (worst > 1e-10 * s_eps.scale()) {
    throw PinningError("pinned one-Y values disagree within an orbit (defect " + sci(worst) + ")");
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// Real rows over the split unknowns x[2f] = Re F_f, x[2f+1] = Im F_f.
class RowBuilder {
 public:
  explicit RowBuilder(std::size_t unknowns) : unknowns_(unknowns) {}

  // Adds Re and Im rows of sum_t w_t F_{f_t} = rhs.
  void complex_row(const std::vector<std::pair<std::size_t, cplx>>& terms, cplx rhs, bool re = true, bool im = true) {
    if (re) {
      std::vector<std::pair<std::size_t, double>> r;
      for (const auto& [f, w] : terms) {
        r.emplace_back(2 * f, w.real());
        r.emplace_back(2 * f + 1, -w.imag());
      }
      add(std::move(r), rhs.real());
    }
    if (im) {
      std::vector<std::pair<std::size_t, double>> r;
      for (const auto& [f, w] : terms) {
        r.emplace_back(2 * f, w.imag());
        r.emplace_back(2 * f + 1, w.real());
      }
      add(std::move(r), rhs.imag());
    }
  }

  void add(std::vector<std::pair<std::size_t, double>> row, double rhs) {
    rows_.push_back(std::move(row));
    rhs_.push_back(rhs);
  }

  RealMatrix matrix() const {
    RealMatrix m = RealMatrix::Zero(ix(rows_.size()), ix(unknowns_));
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (const auto& [c, v] : rows_[r]) {
        m(ix(r), ix(c)) += v;
      }
    }
    return m;
  }

  RealVector rhs() const { return Eigen::Map<const RealVector>(rhs_.data(), ix(rhs_.size())); }
  std::size_t size() const { return rows_.size(); }

 private:
  std::size_t unknowns_;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows_;
  std::vector<double> rhs_;
};

}  // namespace

EtaSystem solve_one_y_block(const CyclicStructure& s_eps, const LambdaTable& lambdas) {
  const std::size_t n = s_eps.dim();
  const TensorElement& y = lambdas.y;
  EtaSystem sys;
  sys.n = n;
  sys.y = y;

  const Matrix ind = independent_pair_gram(s_eps);
  sys.independent_min_eigenvalue = min_eigenvalue(ind);
  if (!(sys.independent_min_eigenvalue > kPinvCutoff * s_eps.scale())) {
    throw SolverError("range condition cannot be certified: independent pair Gram is singular (min eigenvalue " +
                          sci(sys.independent_min_eigenvalue) + ")",
                      sys.independent_min_eigenvalue);
  }

  const Matrix& a = s_eps.gram();
  const HermitianPinv ap = hermitian_pinv(a);
  sys.kernel_dim = static_cast<std::size_t>(ap.kernel.cols());

  const std::size_t n3 = n * n * n;
  auto fid = [n](std::size_t i, std::size_t j, std::size_t k) { return (i * n + j) * n + k; };
  RowBuilder rb(2 * n3);

  // Reversal: F(k,j,i) = conj F(i,j,k).
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = i; k < n; ++k) {
        if (k == i) {
          rb.add({{2 * fid(i, j, k) + 1, 1.0}}, 0.0);
        } else {
          rb.add({{2 * fid(k, j, i), 1.0}, {2 * fid(i, j, k), -1.0}}, 0.0);
          rb.add({{2 * fid(k, j, i) + 1, 1.0}, {2 * fid(i, j, k) + 1, 1.0}}, 0.0);
        }
      }
    }
  }

  // Pins from the identification Y(x)1 = 1(x)Y = y.
  sys.pinned.assign(n3, 0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      rb.complex_row({{fid(0, j, k), 1.0}}, lambdas.lambda(ix(k), ix(j)));
      sys.pinned[fid(0, j, k)] = 1;
      rb.complex_row({{fid(k, j, 0), 1.0}}, lambdas.lambda(ix(j), ix(k)));
      sys.pinned[fid(k, j, 0)] = 1;
    }
  }

  // Range: one-Y columns orthogonal to every kernel vector of the pair Gram.
  for (Eigen::Index c = 0; c < ap.kernel.cols(); ++c) {
    const auto z = ap.kernel.col(c);
    for (std::size_t j = 1; j < n; ++j) {
      std::vector<std::pair<std::size_t, cplx>> left, right;
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
          const cplx w = std::conj(z(ix(u * n + v)));
          if (std::abs(w) < kSupportZero) {
            continue;
          }
          left.emplace_back(fid(u, v, j), w);
          right.emplace_back(fid(j, u, v), w);
        }
      }
      rb.complex_row(left, 0.0);
      rb.complex_row(right, 0.0);
    }
    // Same for the Y(x)Y column restricted to its pointed entries:
    // M(0,0) = 1, M(0,b) = sum y_cd F(c,d,b), M(a,0) = sum y_cd F(a,c,d).
    std::vector<std::pair<std::size_t, cplx>> terms;
    for (std::size_t b = 1; b < n; ++b) {
      const cplx w0b = std::conj(z(ix(b)));
      const cplx wb0 = std::conj(z(ix(b * n)));
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
          const cplx yc = y(u, v);
          if (std::abs(yc) < kSupportZero) {
            continue;
          }
          if (std::abs(w0b) >= kSupportZero) {
            terms.emplace_back(fid(u, v, b), w0b * yc);
          }
          if (std::abs(wb0) >= kSupportZero) {
            terms.emplace_back(fid(b, u, v), wb0 * yc);
          }
        }
      }
    }
    rb.complex_row(terms, -std::conj(z(0)));
  }

  // M(0,j) real, so that the separated-Y entries N(0,j) = M(j,0) are real.
  for (std::size_t j = 1; j < n; ++j) {
    std::vector<std::pair<std::size_t, cplx>> terms;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        if (std::abs(y(u, v)) >= kSupportZero) {
          terms.emplace_back(fid(u, v, j), y(u, v));
        }
      }
    }
    rb.complex_row(terms, 0.0, false, true);
  }

  const RealMatrix c = rb.matrix();
  const RealVector rhs = rb.rhs();
  sys.rows = rb.size();
  sys.unknowns = 2 * n3;

  // Cost: sum over one-Y columns b_q of b_q^H A+ b_q, the squared norm of the
  // represented functional, plus a tiny Frobenius term for uniqueness.
  const std::size_t m = n - 1;
  Matrix half = Matrix::Zero(ix(n * n), ix(ap.rank));  // A+ = half half^H
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(a));
    Eigen::Index col = 0;
    for (Eigen::Index e = 0; e < es.eigenvalues().size() && col < half.cols(); ++e) {
      const double lam = es.eigenvalues()(e);
      if (std::abs(lam) > kPinvCutoff * ap.largest) {
        half.col(col++) = es.eigenvectors().col(e) / std::sqrt(lam);
      }
    }
  }
  RowBuilder wb(2 * n3);
  for (std::size_t q = 0; q < 2 * m; ++q) {
    const std::size_t j = q % m + 1;
    for (Eigen::Index e = 0; e < half.cols(); ++e) {
      std::vector<std::pair<std::size_t, cplx>> terms;
      for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
          const cplx w = std::conj(half(ix(u * n + v), e));
          terms.emplace_back(q < m ? fid(u, v, j) : fid(j, u, v), w);
        }
      }
      wb.complex_row(terms, 0.0);
    }
  }
  const RealMatrix wm = wb.matrix();
  RealMatrix h = wm.transpose() * wm;
  const double rho = 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
  h.diagonal().array() += rho;

  // Constraint space by SVD: particular solution plus null-space correction.
  // BDCSVD with full U is inaccurate on these wide systems in Eigen 3.4.
  Eigen::JacobiSVD<RealMatrix> svd(c, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const RealVector& sv = svd.singularValues();
  const double cut = 1e-10 * (sv.size() ? std::max(1.0, sv(0)) : 1.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cut) {
    ++rank;
  }
  const RealMatrix& vfull = svd.matrixV();
  RealVector x = vfull.leftCols(rank) *
                 (svd.matrixU().leftCols(rank).transpose() * rhs).cwiseQuotient(sv.head(rank));
  const RealMatrix z = vfull.rightCols(vfull.cols() - rank);
  if (z.cols() > 0) {
    const RealMatrix hz = h * z;
    const RealMatrix zhz = z.transpose() * hz;
    const RealVector g = hz.transpose() * x;
    x -= z * zhz.ldlt().solve(g);
  }
  sys.solve_residual = (c * x - rhs).lpNorm<Eigen::Infinity>();
  if (!(sys.solve_residual <= 1e-9)) {
    throw SolverError("one-Y system is inconsistent (residual " + sci(sys.solve_residual) + ")", sys.solve_residual);
  }

  sys.f.resize(n3);
  for (std::size_t f = 0; f < n3; ++f) {
    sys.f[f] = cplx(x(ix(2 * f)), x(ix(2 * f + 1)));
  }
  // Pinned values exactly, then the reversal relation exactly.
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      sys.f[fid(0, j, k)] = lambdas.lambda(ix(k), ix(j));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = i; k < n; ++k) {
        if (k == i) {
          sys.f[fid(i, j, i)] = sys.f[fid(i, j, i)].real();
        } else {
          const cplx avg = 0.5 * (sys.f[fid(i, j, k)] + std::conj(sys.f[fid(k, j, i)]));
          sys.f[fid(i, j, k)] = avg;
          sys.f[fid(k, j, i)] = std::conj(avg);
        }
      }
    }
  }

  // eta: A eta_q = B[:, q] for the columns (Y, j) and (j, Y), j >= 1.
  Matrix b(ix(n * n), ix(2 * m));
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        b(ix(u * n + v), ix(j - 1)) = sys.at(u, v, j);
        b(ix(u * n + v), ix(m + j - 1)) = sys.at(j, u, v);
      }
    }
  }
  sys.eta = ap.pinv * b;
  const double bnorm = std::max(1.0, max_abs(b));
  sys.range_residual = b.size() == 0 ? 0.0 : max_abs(a * sys.eta - b) / bnorm;
  if (!(sys.range_residual <= 1e-9)) {
    throw SolverError("one-Y columns leave the range of the pair Gram (residual " + sci(sys.range_residual) + ")",
                      sys.range_residual);
  }
  return sys;
}

// ---------------------------------------------------------------------------

namespace {

// Class values of the natural-basis form on W = V + RY, letter Y = n.
struct WordTable {
  std::size_t n = 0;
  const CyclicStructure* s = nullptr;
  const EtaSystem* sys = nullptr;
  Matrix m;        // M(a,b), hermitian
  RealMatrix nn;   // N(a,b), symmetric
  RealVector p;    // P(a)
  double t = 0.0;

  cplx phi(const std::array<std::size_t, 4>& w) const {
    const std::size_t y = n;
    int count = 0;
    std::array<std::size_t, 4> pos{};
    for (std::size_t k = 0; k < 4; ++k) {
      if (w[k] == y) {
        pos[static_cast<std::size_t>(count++)] = k;
      }
    }
    auto at = [&w](std::size_t k) { return w[k % 4]; };
    switch (count) {
      case 0:
        return s->at(w[0], w[1], w[3], w[2]);
      case 1: {
        const std::size_t q = pos[0];
        return sys->at(at(q + 1), at(q + 2), at(q + 3));
      }
      case 2: {
        const std::size_t lo = pos[0], hi = pos[1];
        if (hi - lo == 2) {
          return nn(ix(at(lo + 1)), ix(at(lo + 3)));
        }
        const std::size_t start = (hi - lo == 1) ? lo : hi;  // hi == 3, lo == 0 wraps
        return m(ix(at(start + 2)), ix(at(start + 3)));
      }
      case 3: {
        std::size_t other = 0;
        for (std::size_t k = 0; k < 4; ++k) {
          if (w[k] != y) {
            other = w[k];
          }
        }
        return p(ix(other));
      }
      default:
        return t;
    }
  }

  Matrix gram() const {
    const std::size_t w = n + 1;
    Matrix g(ix(w * w), ix(w * w));
    for (std::size_t a = 0; a < w; ++a) {
      for (std::size_t b = 0; b < w; ++b) {
        for (std::size_t c = 0; c < w; ++c) {
          for (std::size_t d = 0; d < w; ++d) {
            g(ix(a * w + b), ix(c * w + d)) = phi({a, b, d, c});
          }
        }
      }
    }
    return g;
  }
};

// Averages every dihedral word orbit that contains the letter `letter`.
void symmetrize_orbits(Matrix& g, std::size_t w, std::size_t letter) {
  auto idx = [w](std::size_t a, std::size_t b) { return ix(a * w + b); };
  // Word (u0,u1,u2,u3) lives at gram[p(u0,u1), p(u3,u2)].
  auto ref = [&](const std::array<std::size_t, 4>& u) -> cplx& { return g(idx(u[0], u[1]), idx(u[3], u[2])); };
  std::vector<char> done(static_cast<std::size_t>(g.size()), 0);
  auto flag = [&](const std::array<std::size_t, 4>& u) -> char& {
    return done[static_cast<std::size_t>(idx(u[0], u[1]) * g.rows() + idx(u[3], u[2]))];
  };
  for (std::size_t a = 0; a < w; ++a) {
    for (std::size_t b = 0; b < w; ++b) {
      for (std::size_t c = 0; c < w; ++c) {
        for (std::size_t d = 0; d < w; ++d) {
          const std::array<std::size_t, 4> base{a, b, c, d};
          if (flag(base) || (a != letter && b != letter && c != letter && d != letter)) {
            continue;
          }
          std::array<std::array<std::size_t, 4>, 8> orbit;
          for (std::size_t r = 0; r < 4; ++r) {
            for (std::size_t k = 0; k < 4; ++k) {
              orbit[r][k] = base[(r + k) % 4];
              orbit[4 + r][k] = base[(r + 4 - k) % 4];
            }
          }
          cplx sum = 0.0;
          for (std::size_t r = 0; r < 8; ++r) {
            sum += r < 4 ? ref(orbit[r]) : std::conj(ref(orbit[r]));
          }
          cplx avg = sum / 8.0;
          // palindromic orbits force a real value
          for (std::size_t r = 4; r < 8; ++r) {
            if (orbit[r] == base) {
              avg = avg.real();
            }
          }
          for (std::size_t r = 0; r < 8; ++r) {
            ref(orbit[r]) = r < 4 ? avg : std::conj(avg);
            flag(orbit[r]) = 1;
          }
        }
      }
    }
  }
}

}  // namespace

namespace {

// sum u_a conj(u_b) g[a,b] (real part) with extended-precision accumulation.
long double form_ld(const Matrix& g, const Vector& v) {
  std::vector<Eigen::Index> support;
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (v(k) != cplx(0.0)) {
      support.push_back(k);
    }
  }
  long double re = 0.0L;
  for (Eigen::Index a : support) {
    for (Eigen::Index b : support) {
      const long double ur = v(a).real(), ui = v(a).imag();
      const long double wr = v(b).real(), wi = -v(b).imag();
      const long double gr = g(a, b).real(), gi = g(a, b).imag();
      const long double pr = ur * wr - ui * wi;
      const long double pi = ur * wi + ui * wr;
      re += pr * gr - pi * gi;
    }
  }
  return re;
}

// Largest double not above x, stepped down `extra` more ulps.
double floor_double(long double x, int extra) {
  double v = static_cast<double>(x);
  if (static_cast<long double>(v) > x) {
    v = std::nextafter(v, -HUGE_VAL);
  }
  for (int k = 0; k < extra; ++k) {
    v = std::nextafter(v, -HUGE_VAL);
  }
  return v;
}

}  // namespace

double seminorm(const CyclicStructure& s, const TensorElement& u) {
  if (u.dim() != s.dim()) {
    throw ShapeError("seminorm: dimension mismatch");
  }
  return std::sqrt(static_cast<double>(std::max(0.0L, form_ld(s.gram(), u.flat()))));
}

ExtensionResult assemble(const CyclicStructure& s_eps, const TensorElement& y, const EtaSystem& sys,
                         const AssembleOptions& options) {
  const std::size_t n = s_eps.dim();
  if (sys.n != n || y.dim() != n) {
    throw ShapeError("assemble: dimension mismatch");
  }
  if (!(options.delta > 0.0)) {
    throw std::invalid_argument("assemble: delta must be positive");
  }
  const std::size_t w = n + 1;
  const std::size_t m = n - 1;
  const double scale = s_eps.scale();
  const auto nn = ix(n);

  ExtensionResult out{.structure = s_eps, .perturbed = s_eps};
  out.eta = sys;

  // Schur data for the one-Y pair columns.
  const Matrix& a = s_eps.gram();
  const HermitianPinv ap = hermitian_pinv(a);
  Matrix b(ix(n * n), ix(2 * m));
  for (std::size_t j = 1; j < n; ++j) {
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        b(ix(u * n + v), ix(j - 1)) = sys.at(u, v, j);
        b(ix(u * n + v), ix(m + j - 1)) = sys.at(j, u, v);
      }
    }
  }
  const Matrix k = hermitian_part(b.adjoint() * ap.pinv * b);
  const Matrix k11 = k.topLeftCorner(ix(m), ix(m));
  Matrix d = -k;
  d.topLeftCorner(ix(m), ix(m)) += k11;
  d.bottomRightCorner(ix(m), ix(m)) += k11.transpose();
  const double deficit = m ? std::max(0.0, -min_eigenvalue(d)) : 0.0;
  const double coupling = m ? spectral_norm(k.topRightCorner(ix(m), ix(m))) : 0.0;

  WordTable tab;
  tab.n = n;
  tab.s = &s_eps;
  tab.sys = &sys;

  // Pointed entries derived from the identification.
  std::vector<cplx> m0(n, 0.0);
  m0[0] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    cplx acc = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        acc += y(u, v) * sys.at(u, v, j);
      }
    }
    m0[j] = acc.real();
  }

  // Reduced pair set: V pairs, then (Y,j) and (j,Y) for j >= 1; Y(x)1 and
  // 1(x)Y are null-equivalent to y and left out.
  std::vector<Eigen::Index> reduced;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = 0; v < n; ++v) {
      reduced.push_back(ix(u * w + v));
    }
  }
  for (std::size_t j = 1; j < n; ++j) {
    reduced.push_back(ix(n * w + j));
  }
  for (std::size_t j = 1; j < n; ++j) {
    reduced.push_back(ix(j * w + n));
  }
  const Eigen::Index yy = ix(n * w + n);

  double delta_abs = options.delta * scale;
  const int attempts = options.t_shift ? 1 : options.max_doublings + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const double shift = deficit + delta_abs * (1.0 + coupling);
    tab.m = Matrix::Zero(nn, nn);
    tab.m.bottomRightCorner(ix(m), ix(m)) = k11 + shift * Matrix::Identity(ix(m), ix(m));
    for (std::size_t j = 0; j < n; ++j) {
      tab.m(0, ix(j)) = m0[j];
      tab.m(ix(j), 0) = std::conj(m0[j]);
    }
    tab.m = hermitian_part(tab.m);
    tab.nn = RealMatrix::Zero(nn, nn);
    for (std::size_t j = 0; j < n; ++j) {
      tab.nn(0, ix(j)) = tab.nn(ix(j), 0) = m0[j].real();
    }
    tab.p = RealVector::Zero(nn);
    cplx p0 = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        p0 += y(u, v) * tab.m(ix(u), ix(v));
      }
    }
    tab.p(0) = p0.real();
    tab.t = 0.0;

    Matrix g = tab.gram();
    // Block elimination through A+ and the Schur complement of the Y pairs;
    // Q itself is far too ill-conditioned for a direct pseudo-inverse.
    const auto r = static_cast<Eigen::Index>(reduced.size());
    const auto nv = ix(n * n);
    const auto ny = r - nv;
    Matrix m2(ny, ny);
    Vector col(r);
    for (Eigen::Index u = 0; u < r; ++u) {
      col(u) = g(reduced[static_cast<std::size_t>(u)], yy);
    }
    for (Eigen::Index u = 0; u < ny; ++u) {
      for (Eigen::Index v = 0; v < ny; ++v) {
        m2(u, v) = g(reduced[static_cast<std::size_t>(nv + u)], reduced[static_cast<std::size_t>(nv + v)]);
      }
    }
    const Vector cv = col.head(nv);
    const Vector dv = col.tail(ny);
    const Vector acv = ap.pinv * cv;
    const Matrix s2 = hermitian_part(m2 - b.adjoint() * ap.pinv * b);
    const Vector ev = dv - b.adjoint() * acv;
    Eigen::LDLT<Matrix> s2f(s2);
    const Vector x2 = ny ? Vector(s2f.solve(ev)) : Vector(0);
    const Vector x1 = acv - ap.pinv * (b * x2);
    out.bessel_bound = cv.dot(acv).real();
    out.t_min = out.bessel_bound + (ny ? ev.dot(x2).real() : 0.0);
    out.schur_min_eigenvalue = ny ? min_eigenvalue(s2) : 0.0;
    out.range_residual = max_abs(a * acv - cv) / std::max(1.0, max_abs(cv));
    out.t = options.t_shift ? out.t_min + *options.t_shift : out.t_min + delta_abs;
    tab.t = out.t;
    g(yy, yy) = out.t;
    {
      Vector wv = Vector::Zero(g.rows());
      for (Eigen::Index u = 0; u < nv; ++u) {
        wv(reduced[static_cast<std::size_t>(u)]) = -x1(u);
      }
      for (Eigen::Index u = 0; u < ny; ++u) {
        wv(reduced[static_cast<std::size_t>(nv + u)]) = -x2(u);
      }
      wv(yy) = 1.0;
      out.witness_value = (wv.adjoint() * g * wv)(0).real();
      out.witness_rayleigh = out.witness_value / wv.squaredNorm();
    }

    out.delta = delta_abs;
    out.delta_doublings = attempt;
    out.margin_shift = shift;
    out.natural_min_eigenvalue = min_eigenvalue(g);
    const double natural_scale = std::max(1.0, g.diagonal().real().maxCoeff());
    const bool psd = out.natural_min_eigenvalue >= -1e-8 * natural_scale;
    if (!psd && !options.t_shift) {
      if (attempt + 1 == attempts) {
        throw AssemblyError("extension Gram is not positive after " + std::to_string(options.max_doublings) +
                                " margin doublings (min eigenvalue " + sci(out.natural_min_eigenvalue) + ")",
                            out.natural_min_eigenvalue);
      }
      delta_abs *= 2.0;
      continue;
    }

    // Orthonormal coordinates: x_n = (Y - sum c_m x_m) / r.
    RealVector coords(ix(w));
    double rest = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      coords(ix(j)) = sys.at(0, 0, j).real();
      rest -= coords(ix(j)) * coords(ix(j));
    }
    if (!(rest > 1e-12)) {
      throw AssemblyError("target lies in V(x)1; no new direction to adjoin", out.natural_min_eigenvalue);
    }
    const double radius = std::sqrt(rest);
    coords(nn) = radius;
    RealMatrix t1 = RealMatrix::Identity(ix(w), ix(w));
    for (std::size_t j = 0; j < n; ++j) {
      t1(ix(j), nn) = -coords(ix(j)) / radius;
    }
    t1(nn, nn) = 1.0 / radius;
    RealMatrix kron(ix(w * w), ix(w * w));
    for (std::size_t a1 = 0; a1 < w; ++a1) {
      for (std::size_t b1 = 0; b1 < w; ++b1) {
        for (std::size_t a2 = 0; a2 < w; ++a2) {
          for (std::size_t b2 = 0; b2 < w; ++b2) {
            kron(ix(a1 * w + b1), ix(a2 * w + b2)) = t1(ix(a1), ix(a2)) * t1(ix(b1), ix(b2));
          }
        }
      }
    }
    const Matrix kc = kron.cast<cplx>();
    Matrix g2 = kc.transpose() * g * kc;
    symmetrize_orbits(g2, w, n);
    for (std::size_t u = 0; u < n * n; ++u) {
      const std::size_t u1 = u / n, u2 = u % n;
      for (std::size_t v = 0; v < n * n; ++v) {
        const std::size_t v1 = v / n, v2 = v % n;
        g2(ix(u1 * w + u2), ix(v1 * w + v2)) = a(ix(u), ix(v));
      }
    }

    out.y_coordinates = coords;
    out.y = y.embedded(w);
    Matrix left = Matrix::Zero(ix(w), ix(w));
    Matrix right = Matrix::Zero(ix(w), ix(w));
    for (std::size_t j = 0; j < w; ++j) {
      left(ix(j), 0) = coords(ix(j));
      right(0, ix(j)) = coords(ix(j));
    }
    const Vector zl = (TensorElement(left) - out.y).flat();
    const Vector zr = (TensorElement(right) - out.y).flat();

    // <<x_n(x)1, x_n(x)1>> is 1 in exact arithmetic. Within 1e-10, pick
    // the representable value for which both null relations hold on the
    // stored entries; otherwise their seminorms stall at sqrt(ulp).
    {
      const Eigen::Index n0 = ix(n * w), on = ix(n), zz = 0, nnn = ix(n * w + n);
      const long double r2 = static_cast<long double>(radius) * radius;
      const long double cur = g2(n0, n0).real();
      const long double ql = form_ld(g2, zl) - r2 * cur;
      const long double qr = form_ld(g2, zr) - r2 * cur;
      const double snapped = std::min(floor_double(-ql / r2, 2), floor_double(-qr / r2, 2));
      if (std::abs(snapped - 1.0) <= 1e-10) {
        for (auto [u, v] : {std::pair{n0, n0}, std::pair{on, on}, std::pair{nnn, zz}, std::pair{zz, nnn}}) {
          g2(u, v) = snapped;
        }
      }
    }

    std::vector<std::string> labels = s_eps.labels();
    labels.push_back("Y" + std::to_string(n));
    out.structure = CyclicStructure(w, std::move(g2), std::move(labels));
    out.min_eigenvalue = min_eigenvalue(out.structure.gram());
    out.null_residual_left = seminorm(out.structure, TensorElement::from_flat(zl, w));
    out.null_residual_right = seminorm(out.structure, TensorElement::from_flat(zr, w));
    out.validation = validate(out.structure, 1e-8);
    return out;
  }
  throw AssemblyError("unreachable", 0.0);
}

ExtensionResult extend(const CyclicStructure& s, const TensorElement& y, double eps, const ExtendOptions& options) {
  check_target(s, y);
  Perturbation pert = perturb(s, eps, options.margin);
  TensorElement target = y;
  const double ns = norm_sq(pert.structure, target);
  if (std::abs(ns - 1.0) > kTargetTol) {
    target *= cplx(1.0 / std::sqrt(ns));
  }
  const LambdaTable lam = pinned_lambdas(pert.structure, target);
  const EtaSystem sys = solve_one_y_block(pert.structure, lam);
  ExtensionResult out = assemble(pert.structure, target, sys, options.assemble);
  if (!options.label.empty()) {
    std::vector<std::string> labels = out.structure.labels();
    labels.back() = options.label;
    out.structure = CyclicStructure(out.structure.dim(), out.structure.gram(), std::move(labels));
  }
  out.epsilon_requested = eps;
  out.epsilon_achieved = pair_deviation(s, out.structure);
  out.mix_weight = pert.mix_weight;
  return out;
}

}  // namespace chs
