#pragma once

// Moment matching: fit d x d matrix tuples (A_0 = I) to a target Gram tensor
// by minimizing sum |tr(A_i A_j A_l A_k)/d - gram[p(i,j), p(k,l)]|^2.

#include "chs/tensor_core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace chs {

// self_adjoint: A_m hermitian. positive: A_m = B_m^H B_m with B_m arbitrary.
enum class ModelClass { self_adjoint, positive };

std::string_view model_class_name(ModelClass c);

// gram_model[p(i,j), p(k,l)] = tr(A_i A_j A_l A_k) / d. Throws ShapeError when
// a matrix is not self-adjoint or A_0 is not the identity.
Matrix model_tensor(std::span<const Matrix> mats);

double fit_residual(const Matrix& target, std::span<const Matrix> mats);

// Objective over a flat real parameter vector describing A_1..A_{n-1}.
// self_adjoint: per matrix, the d diagonal entries then (Re, Im) of each
// strictly upper entry in row-major order. positive: (Re, Im) of every entry
// of B_m in row-major order.
class MomentObjective {
 public:
  MomentObjective(const Matrix& target, std::size_t n, std::size_t d, ModelClass cls = ModelClass::self_adjoint);

  std::size_t parameter_count() const noexcept { return params_per_matrix_ * (n_ - 1); }
  std::size_t n() const noexcept { return n_; }
  std::size_t d() const noexcept { return d_; }
  ModelClass model_class() const noexcept { return cls_; }

  std::vector<Matrix> unpack(const RealVector& x) const;  // includes A_0 = I
  // Inverse of unpack for self_adjoint; for positive the inputs are the B_m.
  RealVector pack(std::span<const Matrix> mats) const;

  double value(const RealVector& x) const;
  double value_and_gradient(const RealVector& x, RealVector& grad) const;

 private:
  Matrix target_;
  std::size_t n_;
  std::size_t d_;
  ModelClass cls_;
  std::size_t params_per_matrix_;
};

struct RestartTrace {
  std::size_t index = 0;
  bool warm = false;
  double initial = 0.0;
  double final_value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct FitOptions {
  std::size_t d = 1;
  std::size_t restarts = 8;
  std::uint64_t seed = 0;
  ModelClass model = ModelClass::self_adjoint;
  std::size_t max_iterations = 4000;
  // Optional warm start, tried as restart 0 (full tuple including A_0 = I;
  // for the positive class these are the factors B_m).
  std::vector<Matrix> warm_start;
};

struct FitResult {
  std::size_t d = 0;
  ModelClass model = ModelClass::self_adjoint;
  std::vector<Matrix> matrices;  // A_0 = I, A_1, ...
  double residual = 0.0;         // epsilon_d
  std::size_t restarts = 0;
  std::size_t best_restart = 0;
  bool converged = false;
  std::vector<RestartTrace> traces;
  std::vector<Matrix> factors;   // positive class only
};

FitResult fit(const CyclicStructure& target, const FitOptions& options);

// A -> A (x) I_factor: a trace-preserving unital embedding.
std::vector<Matrix> inflate(std::span<const Matrix> mats, std::size_t factor = 2);

struct CurvePoint {
  std::size_t d = 0;
  double residual = 0.0;
  bool warm_started = false;
  double warm_start_residual = 0.0;  // residual of the inflated start
  std::size_t best_restart = 0;
  bool converged = false;
};

// d = 1..d_max; d = 2k also tries the inflated d = k solution. Requires
// 1 <= d_max <= 6.
std::vector<CurvePoint> epsilon_curve(const CyclicStructure& target, std::size_t d_max, std::size_t restarts,
                                      std::uint64_t seed, ModelClass model = ModelClass::self_adjoint);

// ---------------------------------------------------------------------------
// Commutative oracle: the d = 1 residual over a grid of scalars.

// Real scalar model a_0 = 1, a_1..a_{n-1}: gram = a_i a_j a_l a_k.
double scalar_residual(const Matrix& target, std::span<const double> a);

struct GridResult {
  double best = 0.0;
  std::vector<double> argmin;
  std::size_t points = 0;
};

// Exhaustive grid over [lo, hi]^(n-1) with `steps` points per axis.
GridResult scalar_grid_search(const CyclicStructure& target, double lo, double hi, std::size_t steps);

// Any real model misses the imaginary parts entirely: sum (Im gram)^2.
double scalar_lower_bound(const CyclicStructure& target);

}  // namespace chs
