#pragma once

// Element adjunction: given a cyclic structure on V and a self-adjoint,
// norm-one, non-trivial tensor y, build an epsilon-perturbed structure on
// W = V + RY in which Y (x) 1 and 1 (x) Y both coincide with y up to a null
// vector.
//
// Pipeline: check_target -> perturb -> pinned_lambdas -> solve_one_y_block ->
// assemble. The new basis vector of W is the orthonormalized
//   x_n = (Y - sum_m c_m x_m) / r,   c_m = (Y, x_m) = <<y, x_m (x) 1>>,
// so W is stored in orthonormal coordinates like every other structure.
//
// Values of the form are functions of the cyclic word (a, b, d, c) of
// <<a (x) b, c (x) d>>; they are invariant under rotation and conjugated by
// reversal. With Y the new letter:
//   F(i,j,k) = word (Y,i,j,k)      one Y
//   M(a,b)   = word (Y,Y,a,b)      two adjacent Y, hermitian
//   N(a,b)   = word (Y,a,Y,b)      two separated Y, real symmetric
//   P(a)     = word (Y,Y,Y,a)      three Y, real
//   t        = word (Y,Y,Y,Y)

#include "chs/tensor_core.hpp"

#include <optional>
#include <vector>

namespace chs {

inline constexpr double kTargetTol = 1e-10;

struct ExtensionTarget {
  TensorElement y;
  bool self_adjoint = false;
  bool unit_norm = false;
  bool nontrivial = false;
  double adjoint_defect = 0.0;  // max |J y - y| coefficient
  double norm_sq = 0.0;         // <<y, y>>
};

// Throws TargetError listing every failed condition with its magnitude.
ExtensionTarget check_target(const CyclicStructure& s, const TensorElement& y);

struct Perturbation {
  CyclicStructure structure;
  double mix_weight = 0.0;   // epsilon'
  double deviation = 0.0;    // max entry change, < requested epsilon
  double independent_min_eigenvalue = 0.0;
  double semicircular_min_eigenvalue = 0.0;
  int halvings = 0;
};

// Mixes s with the semicircular structure of the same dimension. The weight
// starts at eps / (1 + max|delta|) and is halved until the deviation is below
// eps and the independent-pair Gram has minimum eigenvalue at least
// weight * mu_s * (1 - margin), mu_s being the semicircular value.
Perturbation perturb(const CyclicStructure& s, double eps, double margin = 1e-6);

struct LambdaTable {
  TensorElement y;
  Matrix lambda;  // lambda(k, i) = <<y, x_k (x) x_i>>
  double consistency_defect = 0.0;
};

// Throws PinningError when two pinned forms of one orbit disagree by more than
// 1e-10 * scale (a J-violating y does this).
LambdaTable pinned_lambdas(const CyclicStructure& s_eps, const TensorElement& y);

struct EtaSystem {
  std::size_t n = 0;
  TensorElement y;
  std::vector<cplx> f;        // F(i,j,k) at (i*n + j)*n + k
  std::vector<char> pinned;   // fixed by the identification with y
  Matrix eta;                 // columns: representation of <<., Y(x)x_j>> then <<., x_j(x)Y>>
  double solve_residual = 0.0;
  double range_residual = 0.0;
  double independent_min_eigenvalue = 0.0;
  std::size_t kernel_dim = 0;
  std::size_t rows = 0;
  std::size_t unknowns = 0;

  cplx at(std::size_t i, std::size_t j, std::size_t k) const { return f[(i * n + j) * n + k]; }
};

// Least-norm solution for all one-Y values under: reversal symmetry, the
// pinned values, orthogonality of every one-Y functional to the kernel of the
// pair Gram (the range condition for the completion), and reality of M(0,j).
// Throws SolverError when the independent-pair Gram is singular or the
// residual exceeds 1e-9.
EtaSystem solve_one_y_block(const CyclicStructure& s_eps, const LambdaTable& lambdas);

struct AssembleOptions {
  double delta = 1e-4;   // margin, relative to the largest diagonal entry
  int max_doublings = 8;
  // Diagnostic mode: t = t_min + t_shift, no retry and no failure.
  std::optional<double> t_shift;
};

struct ExtensionResult {
  CyclicStructure structure;      // W, orthonormal coordinates, dim n+1
  CyclicStructure perturbed;      // S_eps
  double epsilon_requested = 0.0;
  double epsilon_achieved = 0.0;  // max deviation of V-pair entries from the input
  double mix_weight = 0.0;
  double t_min = 0.0;             // minimal <<Y(x)Y, Y(x)Y>> for the chosen M
  double t = 0.0;
  double bessel_bound = 0.0;       // c^H A+ c, c = <<x_a(x)x_b, Y(x)Y>>
  double range_residual = 0.0;     // of c against the pair Gram
  double schur_min_eigenvalue = 0.0;  // Y-pair block after eliminating V pairs
  // v^H G v for the vector minimizing the form with unit Y(x)Y coefficient;
  // equals t - t_min, so a negative value certifies a negative eigenvalue.
  double witness_value = 0.0;
  double witness_rayleigh = 0.0;
  double delta = 0.0;             // absolute margin used
  int delta_doublings = 0;
  double margin_shift = 0.0;      // M = K11 + margin_shift * I
  double min_eigenvalue = 0.0;    // of the final Gram
  double natural_min_eigenvalue = 0.0;  // before orthonormalization
  double null_residual_left = 0.0;   // ||Y(x)1 - y||_W
  double null_residual_right = 0.0;  // ||1(x)Y - y||_W
  TensorElement y{};              // normalized in S_eps, embedded in W
  RealVector y_coordinates{};     // Y = sum_m c_m x_m + r x_n
  EtaSystem eta{};
  ValidationReport validation{};
};

ExtensionResult assemble(const CyclicStructure& s_eps, const TensorElement& y, const EtaSystem& sys,
                         const AssembleOptions& options = {});

struct ExtendOptions {
  double margin = 1e-6;
  AssembleOptions assemble;
  std::string label;  // for the new basis vector; default "Y<n>"
};

ExtensionResult extend(const CyclicStructure& s, const TensorElement& y, double eps, const ExtendOptions& options = {});

// Seminorm of u evaluated with extended-precision accumulation.
double seminorm(const CyclicStructure& s, const TensorElement& u);

}  // namespace chs
