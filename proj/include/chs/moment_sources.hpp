#pragma once

// Sources of valid cyclic structures: matrix algebras with normalized trace,
// free semicircular families, and convex mixtures of structures.

#include "chs/tensor_core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace chs {

// Self-adjoint d x d matrices A_0 = I, A_1, ..., orthonormal for
// tr(A_i A_j) / d.
struct MatrixFamily {
  std::size_t d = 0;
  std::vector<Matrix> matrices;

  std::size_t size() const noexcept { return matrices.size(); }
};

// Largest violation of self-adjointness and of tr(A_i A_j)/d = delta_ij.
double family_defect(const MatrixFamily& f);

// Gram-Schmidt in Re tr(ab)/d with the identity kept as element 0. Throws
// LinearDependenceError (naming the raw index) when a pivot falls below 1e-10,
// ShapeError for non-square or non-self-adjoint input.
MatrixFamily orthonormalize(std::span<const Matrix> raw, bool include_identity = true);

// {I, sigma_x, sigma_y, sigma_z} in M_2.
MatrixFamily pauli_family();

// Identity plus n-1 Gaussian self-adjoint matrices, orthonormalized.
// Requires 1 <= n <= d^2.
MatrixFamily random_family(std::size_t d, std::size_t n, std::uint64_t seed);

// Trace-moment Gram of an arbitrary tuple of square matrices:
//   gram[p(i,j), p(k,l)] = tr(A_i A_j A_l A_k) / d.
// No orthonormality or self-adjointness is assumed.
Matrix trace_moment_gram(std::span<const Matrix> mats);

CyclicStructure structure_from_matrices(const MatrixFamily& f);

// ---------------------------------------------------------------------------
// Free semicircular moments. Index 0 is the unit; indices >= 1 are standard
// (mean 0, variance 1), mutually free semicircular generators.

using Word = std::vector<std::size_t>;

// Number of non-crossing pair partitions of the non-unit letters of w in which
// every block pairs equal letters.
std::uint64_t semicircular_moment(std::span<const std::size_t> w);

// Basis {1, s_1, ..., s_{n-1}}: gram[p(i,j), p(k,l)] = tau(s_i s_j s_l s_k).
CyclicStructure semicircular_structure(std::size_t n);

// (1 - lambda) a + lambda b. Throws ShapeError on dimension mismatch and
// std::invalid_argument when lambda is outside [0, 1].
CyclicStructure mix(const CyclicStructure& a, const CyclicStructure& b, double lambda);

}  // namespace chs
