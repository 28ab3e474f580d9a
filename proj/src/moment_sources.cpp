#include "chs/moment_sources.hpp"

#include "chs/error.hpp"
#include "chs/kernels.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace chs {

namespace {

constexpr double kPivotCutoff = 1e-10;

double trace_product_real(const Matrix& a, const Matrix& b) {
  // Re tr(ab) = Re sum_{ij} a_ij b_ji
  return (a.array() * b.transpose().array()).sum().real();
}

double adjoint_defect(const Matrix& a) {
  const double norm = std::max(1.0, a.norm());
  return (a - a.adjoint()).norm() / norm;
}

}  // namespace

double family_defect(const MatrixFamily& f) {
  double worst = 0.0;
  const double d = static_cast<double>(f.d);
  for (std::size_t i = 0; i < f.size(); ++i) {
    worst = std::max(worst, adjoint_defect(f.matrices[i]));
    for (std::size_t j = 0; j < f.size(); ++j) {
      const cplx t = (f.matrices[i] * f.matrices[j]).trace() / d;
      worst = std::max(worst, std::abs(t - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

MatrixFamily orthonormalize(std::span<const Matrix> raw, bool include_identity) {
  if (raw.empty() && !include_identity) {
    throw ShapeError("orthonormalize: empty family");
  }
  const Eigen::Index d = raw.empty() ? 1 : raw.front().rows();
  MatrixFamily out;
  out.d = static_cast<std::size_t>(d);
  const double dd = static_cast<double>(d);
  if (include_identity) {
    out.matrices.push_back(Matrix::Identity(d, d));
  }
  for (std::size_t r = 0; r < raw.size(); ++r) {
    const Matrix& m = raw[r];
    if (m.rows() != d || m.cols() != d) {
      throw ShapeError("orthonormalize: matrix " + std::to_string(r) + " is not " + std::to_string(d) + "x" +
                       std::to_string(d));
    }
    if ((m - m.adjoint()).norm() > 1e-12 * std::max(1.0, m.norm())) {
      throw ShapeError("orthonormalize: matrix " + std::to_string(r) + " is not self-adjoint");
    }
    Matrix v = hermitian_part(m);
    const double original = std::sqrt(std::max(0.0, trace_product_real(v, v) / dd));
    // two passes of classical Gram-Schmidt for stability
    for (int pass = 0; pass < 2; ++pass) {
      for (const Matrix& q : out.matrices) {
        v -= (trace_product_real(v, q) / dd) * q;
      }
    }
    const double norm = std::sqrt(std::max(0.0, trace_product_real(v, v) / dd));
    if (norm <= kPivotCutoff * std::max(1.0, original)) {
      throw LinearDependenceError(r, norm);
    }
    out.matrices.push_back(hermitian_part(v / norm));
  }
  return out;
}

MatrixFamily pauli_family() {
  const cplx i(0.0, 1.0);
  Matrix sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0.0, 1.0, 1.0, 0.0;
  sy << 0.0, -i, i, 0.0;
  sz << 1.0, 0.0, 0.0, -1.0;
  MatrixFamily f;
  f.d = 2;
  f.matrices = {Matrix::Identity(2, 2), sx, sy, sz};
  return f;
}

MatrixFamily random_family(std::size_t d, std::size_t n, std::uint64_t seed) {
  if (d == 0 || n == 0 || n > d * d) {
    throw std::invalid_argument("random_family: need 1 <= n <= d^2 (got d=" + std::to_string(d) +
                                ", n=" + std::to_string(n) + ")");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto k = static_cast<Eigen::Index>(d);
  std::vector<Matrix> raw;
  raw.reserve(n - 1);
  for (std::size_t r = 0; r + 1 < n; ++r) {
    Matrix m(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index b = 0; b < k; ++b) {
        m(a, b) = cplx(normal(rng), normal(rng));
      }
    }
    raw.push_back(hermitian_part(m));
  }
  return orthonormalize(raw, true);
}

Matrix trace_moment_gram(std::span<const Matrix> mats) {
  const std::size_t n = mats.size();
  if (n == 0) {
    throw ShapeError("trace_moment_gram: empty tuple");
  }
  const Eigen::Index d = mats.front().rows();
  for (const auto& m : mats) {
    if (m.rows() != d || m.cols() != d) {
      throw ShapeError("trace_moment_gram: matrices must share one square shape");
    }
  }
  // products[i*n+j] = A_i A_j, transposed[l*n+k] = (A_l A_k)^T so that
  // tr(P_ij P_lk) is a plain bilinear dot over the stored entries.
  std::vector<Matrix> products(n * n);
  std::vector<Matrix> transposed(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      products[i * n + j] = mats[i] * mats[j];
      transposed[i * n + j] = products[i * n + j].transpose();
    }
  }
  const auto np = static_cast<Eigen::Index>(n * n);
  const auto len = static_cast<std::size_t>(d * d);
  const double inv_d = 1.0 / static_cast<double>(d);
  Matrix gram(np, np);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Matrix& pij = products[i * n + j];
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          const Matrix& qlk = transposed[l * n + k];
          const cplx tr =
              kernels::dotu(std::span<const cplx>(pij.data(), len), std::span<const cplx>(qlk.data(), len));
          gram(static_cast<Eigen::Index>(i * n + j), static_cast<Eigen::Index>(k * n + l)) = tr * inv_d;
        }
      }
    }
  }
  return gram;
}

CyclicStructure structure_from_matrices(const MatrixFamily& f) {
  return CyclicStructure(f.size(), trace_moment_gram(f.matrices));
}

// ---------------------------------------------------------------------------

namespace {

// Non-crossing matchings decompose by the partner of the first letter: the
// letters strictly between them and the letters after them are matched
// independently.
std::uint64_t count_noncrossing(std::span<const std::size_t> w) {
  if (w.empty()) {
    return 1;
  }
  if (w.size() % 2 != 0) {
    return 0;
  }
  std::uint64_t total = 0;
  for (std::size_t k = 1; k < w.size(); k += 2) {
    if (w[k] != w[0]) {
      continue;
    }
    const std::uint64_t inside = count_noncrossing(w.subspan(1, k - 1));
    if (inside == 0) {
      continue;
    }
    total += inside * count_noncrossing(w.subspan(k + 1));
  }
  return total;
}

}  // namespace

std::uint64_t semicircular_moment(std::span<const std::size_t> w) {
  Word letters;
  letters.reserve(w.size());
  for (std::size_t x : w) {
    if (x != 0) {
      letters.push_back(x);
    }
  }
  return count_noncrossing(letters);
}

CyclicStructure semicircular_structure(std::size_t n) {
  if (n == 0) {
    throw std::invalid_argument("semicircular_structure: n must be >= 1");
  }
  const auto np = static_cast<Eigen::Index>(n * n);
  Matrix gram(np, np);
  std::vector<std::string> labels{"1"};
  for (std::size_t i = 1; i < n; ++i) {
    labels.push_back("s" + std::to_string(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
          const std::size_t word[4] = {i, j, l, k};
          gram(static_cast<Eigen::Index>(i * n + j), static_cast<Eigen::Index>(k * n + l)) =
              static_cast<double>(semicircular_moment(word));
        }
      }
    }
  }
  return CyclicStructure(n, std::move(gram), std::move(labels));
}

CyclicStructure mix(const CyclicStructure& a, const CyclicStructure& b, double lambda) {
  if (a.dim() != b.dim()) {
    throw ShapeError("mix: dimension mismatch (" + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("mix: weight must lie in [0, 1]");
  }
  if (lambda == 0.0) {
    return a;
  }
  if (lambda == 1.0) {
    return CyclicStructure(b.dim(), b.gram(), a.labels());
  }
  return CyclicStructure(a.dim(), (1.0 - lambda) * a.gram() + lambda * b.gram(), a.labels());
}

}  // namespace chs
