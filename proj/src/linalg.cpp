#include "chs/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace chs {

Eigen::VectorXd hermitian_eigenvalues(const Matrix& a) {
  if (a.size() == 0) {
    return {};
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(a), Eigen::EigenvaluesOnly);
  return solver.eigenvalues();
}

double min_eigenvalue(const Matrix& a) {
  const Eigen::VectorXd ev = hermitian_eigenvalues(a);
  return ev.size() == 0 ? 0.0 : ev.minCoeff();
}

HermitianPinv hermitian_pinv(const Matrix& a, double rel_cutoff) {
  HermitianPinv out;
  const auto n = a.rows();
  out.pinv = Matrix::Zero(n, n);
  if (n == 0) {
    out.kernel = Matrix(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(a));
  const Eigen::VectorXd& ev = solver.eigenvalues();
  const Matrix& vecs = solver.eigenvectors();
  out.largest = ev.cwiseAbs().maxCoeff();
  const double cut = rel_cutoff * out.largest;
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (out.largest > 0.0 && std::abs(ev[k]) > cut) {
      out.pinv.noalias() += (vecs.col(k) / ev[k]) * vecs.col(k).adjoint();
      ++out.rank;
    } else {
      null_cols.push_back(k);
    }
  }
  out.kernel = Matrix(n, static_cast<Eigen::Index>(null_cols.size()));
  for (std::size_t c = 0; c < null_cols.size(); ++c) {
    out.kernel.col(static_cast<Eigen::Index>(c)) = vecs.col(null_cols[c]);
  }
  return out;
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) {
    return 0.0;
  }
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double max_abs(const Matrix& a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

}  // namespace chs
