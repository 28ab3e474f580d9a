#include "chs/embed_fit.hpp"

#include "chs/error.hpp"
#include "chs/kernels.hpp"
#include "chs/moment_sources.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <stdexcept>

namespace chs {

namespace {

Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

std::span<const cplx> flat(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }

}  // namespace

std::string_view model_class_name(ModelClass c) { return c == ModelClass::positive ? "positive" : "self_adjoint"; }

Matrix model_tensor(std::span<const Matrix> mats) {
  if (mats.empty()) {
    throw ShapeError("model_tensor: empty tuple");
  }
  const Eigen::Index d = mats.front().rows();
  for (std::size_t m = 0; m < mats.size(); ++m) {
    const Matrix& a = mats[m];
    if (a.rows() != d || a.cols() != d) {
      throw ShapeError("model_tensor: matrices must share one square shape");
    }
    if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff())) {
      throw ShapeError("model_tensor: matrix " + std::to_string(m) + " is not self-adjoint");
    }
  }
  if ((mats.front() - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-12) {
    throw ShapeError("model_tensor: element 0 must be the identity");
  }
  return trace_moment_gram(mats);
}

double fit_residual(const Matrix& target, std::span<const Matrix> mats) {
  const Matrix g = model_tensor(mats);
  if (g.rows() != target.rows()) {
    throw ShapeError("fit_residual: tuple size does not match the target");
  }
  return (g - target).squaredNorm();
}

// ---------------------------------------------------------------------------

MomentObjective::MomentObjective(const Matrix& target, std::size_t n, std::size_t d, ModelClass cls)
    : target_(target), n_(n), d_(d), cls_(cls), params_per_matrix_(cls == ModelClass::positive ? 2 * d * d : d * d) {
  if (n == 0 || d == 0) {
    throw std::invalid_argument("MomentObjective: n and d must be positive");
  }
  if (target.rows() != ix(n * n) || target.cols() != ix(n * n)) {
    throw ShapeError("MomentObjective: target is not n^2 x n^2");
  }
}

std::vector<Matrix> MomentObjective::unpack(const RealVector& x) const {
  const auto d = ix(d_);
  std::vector<Matrix> out;
  out.reserve(n_);
  out.push_back(Matrix::Identity(d, d));
  std::size_t p = 0;
  for (std::size_t m = 1; m < n_; ++m) {
    Matrix a(d, d);
    if (cls_ == ModelClass::self_adjoint) {
      for (Eigen::Index r = 0; r < d; ++r) {
        a(r, r) = x(ix(p++));
      }
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = r + 1; c < d; ++c) {
          a(r, c) = cplx(x(ix(p)), x(ix(p + 1)));
          a(c, r) = std::conj(a(r, c));
          p += 2;
        }
      }
    } else {
      Matrix b(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
          b(r, c) = cplx(x(ix(p)), x(ix(p + 1)));
          p += 2;
        }
      }
      a = b.adjoint() * b;
    }
    out.push_back(std::move(a));
  }
  return out;
}

RealVector MomentObjective::pack(std::span<const Matrix> mats) const {
  if (mats.size() != n_) {
    throw ShapeError("MomentObjective::pack: expected " + std::to_string(n_) + " matrices");
  }
  const auto d = ix(d_);
  RealVector x(ix(parameter_count()));
  std::size_t p = 0;
  for (std::size_t m = 1; m < n_; ++m) {
    const Matrix& a = mats[m];
    if (a.rows() != d || a.cols() != d) {
      throw ShapeError("MomentObjective::pack: matrix " + std::to_string(m) + " has the wrong size");
    }
    if (cls_ == ModelClass::self_adjoint) {
      for (Eigen::Index r = 0; r < d; ++r) {
        x(ix(p++)) = a(r, r).real();
      }
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = r + 1; c < d; ++c) {
          x(ix(p++)) = a(r, c).real();
          x(ix(p++)) = a(r, c).imag();
        }
      }
    } else {
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
          x(ix(p++)) = a(r, c).real();
          x(ix(p++)) = a(r, c).imag();
        }
      }
    }
  }
  return x;
}

double MomentObjective::value(const RealVector& x) const {
  const std::vector<Matrix> mats = unpack(x);
  return (trace_moment_gram(mats) - target_).squaredNorm();
}

double MomentObjective::value_and_gradient(const RealVector& x, RealVector& grad) const {
  const std::size_t n = n_;
  const auto d = ix(d_);
  const std::vector<Matrix> mats = unpack(x);
  const Matrix resid = trace_moment_gram(mats) - target_;
  const double f = resid.squaredNorm();

  std::vector<Matrix> prod(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      prod[i * n + j] = mats[i] * mats[j];
    }
  }
  // df = 2 Re sum_ab tr(dP_ab C_ab), P_ab = A_a A_b, where
  //   C_ab = (1/d) [ sum_kl conj R[(a,b),(k,l)] P_lk + sum_ij conj R[(i,j),(b,a)] P_ij ].
  const double inv_d = 1.0 / static_cast<double>(d_);
  std::vector<Matrix> cmat(n * n, Matrix::Zero(d, d));
  const auto len = static_cast<std::size_t>(d * d);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      Matrix& c = cmat[a * n + b];
      std::span<cplx> out(c.data(), len);
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          const cplx w1 = std::conj(resid(ix(a * n + b), ix(k * n + l))) * inv_d;
          kernels::axpy(w1, flat(prod[l * n + k]), out);
          const cplx w2 = std::conj(resid(ix(k * n + l), ix(b * n + a))) * inv_d;
          kernels::axpy(w2, flat(prod[k * n + l]), out);
        }
      }
    }
  }

  grad.setZero(ix(parameter_count()));
  std::size_t p = 0;
  for (std::size_t m = 1; m < n; ++m) {
    // df = 2 Re tr(dA_m Z_m)
    Matrix z = Matrix::Zero(d, d);
    for (std::size_t b = 0; b < n; ++b) {
      z.noalias() += mats[b] * cmat[m * n + b];
      z.noalias() += cmat[b * n + m] * mats[b];
    }
    const Matrix gam = z + z.adjoint();
    if (cls_ == ModelClass::self_adjoint) {
      for (Eigen::Index r = 0; r < d; ++r) {
        grad(ix(p++)) = gam(r, r).real();
      }
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = r + 1; c < d; ++c) {
          grad(ix(p++)) = 2.0 * gam(r, c).real();
          grad(ix(p++)) = 2.0 * gam(r, c).imag();
        }
      }
    } else {
      // A = B^H B: the gradient in B is 2 B Gamma.
      Matrix bm(d, d);
      std::size_t q = p;
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
          bm(r, c) = cplx(x(ix(q)), x(ix(q + 1)));
          q += 2;
        }
      }
      const Matrix gb = 2.0 * bm * gam;
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
          grad(ix(p++)) = gb(r, c).real();
          grad(ix(p++)) = gb(r, c).imag();
        }
      }
    }
  }
  return f;
}

// ---------------------------------------------------------------------------

namespace {

struct Minimum {
  RealVector x;
  double f = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// L-BFGS with backtracking Armijo line search.
Minimum lbfgs(const MomentObjective& obj, RealVector x, std::size_t max_iter) {
  constexpr std::size_t kMemory = 12;
  constexpr double kArmijo = 1e-4;
  RealVector g;
  double f = obj.value_and_gradient(x, g);
  std::deque<std::pair<RealVector, RealVector>> hist;
  Minimum out;
  if (x.size() == 0) {
    out.x = std::move(x);
    out.f = f;
    out.converged = true;
    return out;
  }
  std::size_t stalls = 0;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (f <= 1e-28 || gnorm <= 1e-15 * std::max(1.0, f)) {
      out.converged = true;
      break;
    }
    // two-loop recursion
    RealVector q = g;
    std::vector<double> alpha(hist.size());
    for (std::size_t k = hist.size(); k-- > 0;) {
      const auto& [s, y] = hist[k];
      alpha[k] = s.dot(q) / y.dot(s);
      q -= alpha[k] * y;
    }
    if (!hist.empty()) {
      const auto& [s, y] = hist.back();
      q *= s.dot(y) / y.squaredNorm();
    } else {
      q /= std::max(1.0, g.norm());
    }
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const auto& [s, y] = hist[k];
      const double beta = y.dot(q) / y.dot(s);
      q += (alpha[k] - beta) * s;
    }
    RealVector dir = -q;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      hist.clear();
      dir = -g / std::max(1.0, g.norm());
      slope = g.dot(dir);
    }
    double step = 1.0;
    RealVector xn, gn;
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + step * dir;
      fn = obj.value_and_gradient(xn, gn);
      if (std::isfinite(fn) && fn <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (hist.empty()) {
        out.converged = gnorm <= 1e-8 * std::max(1.0, f);
        break;
      }
      hist.clear();
      continue;
    }
    RealVector s = xn - x;
    RealVector y = gn - g;
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      hist.emplace_back(std::move(s), std::move(y));
      if (hist.size() > kMemory) {
        hist.pop_front();
      }
    }
    const double decrease = f - fn;
    stalls = decrease <= 1e-15 * std::max(f, 1e-300) ? stalls + 1 : 0;
    x = std::move(xn);
    g = std::move(gn);
    f = fn;
    if (stalls >= 20) {
      out.converged = g.lpNorm<Eigen::Infinity>() <= 1e-8 * std::max(1.0, f);
      break;
    }
  }
  out.x = std::move(x);
  out.f = f;
  out.iterations = it;
  return out;
}

RealVector random_start(const MomentObjective& obj, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  const double sd = obj.model_class() == ModelClass::positive
                        ? 1.0 / std::sqrt(2.0 * static_cast<double>(obj.d()))
                        : 1.0 / std::sqrt(static_cast<double>(obj.d()));
  RealVector x(ix(obj.parameter_count()));
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    x(k) = sd * normal(rng);
  }
  return x;
}

}  // namespace

FitResult fit(const CyclicStructure& target, const FitOptions& options) {
  if (options.d == 0) {
    throw std::invalid_argument("fit: d must be >= 1");
  }
  const std::size_t n = target.dim();
  const MomentObjective obj(target.gram(), n, options.d, options.model);
  FitResult out;
  out.d = options.d;
  out.model = options.model;
  out.residual = std::numeric_limits<double>::infinity();

  std::vector<RealVector> starts;
  std::vector<bool> warm;
  if (!options.warm_start.empty()) {
    starts.push_back(obj.pack(options.warm_start));
    warm.push_back(true);
  }
  for (std::size_t r = 0; r < options.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(options.d), static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    starts.push_back(random_start(obj, rng));
    warm.push_back(false);
  }

  RealVector best_x;
  for (std::size_t r = 0; r < starts.size(); ++r) {
    RestartTrace trace;
    trace.index = r;
    trace.warm = warm[r];
    trace.initial = obj.value(starts[r]);
    const Minimum m = lbfgs(obj, starts[r], options.max_iterations);
    trace.final_value = m.f;
    trace.iterations = m.iterations;
    trace.converged = m.converged;
    out.traces.push_back(trace);
    if (m.f < out.residual) {
      out.residual = m.f;
      out.best_restart = r;
      out.converged = m.converged;
      best_x = m.x;
    }
  }
  out.restarts = starts.size();
  if (starts.empty()) {
    // Nothing to optimize: report the identity-only tuple.
    best_x = RealVector::Zero(ix(obj.parameter_count()));
    out.residual = obj.value(best_x);
  }
  out.matrices = obj.unpack(best_x);
  if (options.model == ModelClass::positive) {
    const auto d = ix(options.d);
    out.factors.push_back(Matrix::Identity(d, d));
    std::size_t p = 0;
    for (std::size_t m = 1; m < n; ++m) {
      Matrix b(d, d);
      for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < d; ++c) {
          b(r, c) = cplx(best_x(ix(p)), best_x(ix(p + 1)));
          p += 2;
        }
      }
      out.factors.push_back(std::move(b));
    }
  }
  return out;
}

std::vector<Matrix> inflate(std::span<const Matrix> mats, std::size_t factor) {
  if (factor == 0) {
    throw std::invalid_argument("inflate: factor must be >= 1");
  }
  std::vector<Matrix> out;
  out.reserve(mats.size());
  const auto f = ix(factor);
  for (const Matrix& a : mats) {
    Matrix big = Matrix::Zero(a.rows() * f, a.cols() * f);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) {
        for (Eigen::Index k = 0; k < f; ++k) {
          big(r * f + k, c * f + k) = a(r, c);
        }
      }
    }
    out.push_back(std::move(big));
  }
  return out;
}

std::vector<CurvePoint> epsilon_curve(const CyclicStructure& target, std::size_t d_max, std::size_t restarts,
                                      std::uint64_t seed, ModelClass model) {
  if (d_max < 1 || d_max > 6) {
    throw std::invalid_argument("epsilon_curve: d_max must lie in [1, 6]");
  }
  std::vector<CurvePoint> curve;
  std::vector<FitResult> results;
  for (std::size_t d = 1; d <= d_max; ++d) {
    FitOptions opts;
    opts.d = d;
    opts.restarts = restarts;
    opts.seed = seed;
    opts.model = model;
    CurvePoint pt;
    pt.d = d;
    if (d % 2 == 0) {
      const FitResult& half = results[d / 2 - 1];
      opts.warm_start = inflate(model == ModelClass::positive ? half.factors : half.matrices);
      pt.warm_started = true;
      pt.warm_start_residual = fit_residual(target.gram(), inflate(half.matrices));
    }
    FitResult r = fit(target, opts);
    pt.residual = r.residual;
    pt.best_restart = r.best_restart;
    pt.converged = r.converged;
    curve.push_back(pt);
    results.push_back(std::move(r));
  }
  return curve;
}

// ---------------------------------------------------------------------------

double scalar_residual(const Matrix& target, std::span<const double> a) {
  const std::size_t n = a.size() + 1;
  if (target.rows() != ix(n * n)) {
    throw ShapeError("scalar_residual: scalar count does not match the target");
  }
  std::vector<double> v(n);
  v[0] = 1.0;
  std::copy(a.begin(), a.end(), v.begin() + 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          const cplx diff = v[i] * v[j] * v[k] * v[l] - target(ix(i * n + j), ix(k * n + l));
          acc += std::norm(diff);
        }
      }
    }
  }
  return acc;
}

GridResult scalar_grid_search(const CyclicStructure& target, double lo, double hi, std::size_t steps) {
  const std::size_t n = target.dim();
  if (steps < 2 || !(hi > lo)) {
    throw std::invalid_argument("scalar_grid_search: need steps >= 2 and hi > lo");
  }
  const std::size_t vars = n - 1;
  GridResult out;
  out.best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> idx(vars, 0);
  std::vector<double> a(vars, lo);
  const double h = (hi - lo) / static_cast<double>(steps - 1);
  for (;;) {
    for (std::size_t v = 0; v < vars; ++v) {
      a[v] = lo + h * static_cast<double>(idx[v]);
    }
    const double f = scalar_residual(target.gram(), a);
    ++out.points;
    if (f < out.best) {
      out.best = f;
      out.argmin = a;
    }
    std::size_t v = 0;
    while (v < vars && ++idx[v] == steps) {
      idx[v++] = 0;
    }
    if (v == vars) {
      break;
    }
  }
  return out;
}

double scalar_lower_bound(const CyclicStructure& target) {
  return target.gram().imag().squaredNorm();
}

}  // namespace chs
