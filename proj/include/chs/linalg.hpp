#pragma once

// Small dense linear-algebra helpers on top of Eigen: hermitian spectra,
// cutoff pseudo-inverses and kernels.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>

namespace chs {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Relative cutoff below which singular values count as zero.
inline constexpr double kPinvCutoff = 1e-10;

Eigen::VectorXd hermitian_eigenvalues(const Matrix& a);
double min_eigenvalue(const Matrix& a);

struct HermitianPinv {
  Matrix pinv;
  std::size_t rank = 0;
  double largest = 0.0;  // largest |eigenvalue|
  Matrix kernel;         // orthonormal columns spanning the numerical kernel
};

// Eigenvalues with |lambda| <= rel_cutoff * max|lambda| are treated as zero.
HermitianPinv hermitian_pinv(const Matrix& a, double rel_cutoff = kPinvCutoff);

// Largest singular value.
double spectral_norm(const Matrix& a);

// Max-entry magnitude.
double max_abs(const Matrix& a);

inline Matrix hermitian_part(const Matrix& a) { return (a + a.adjoint()) * 0.5; }

}  // namespace chs
