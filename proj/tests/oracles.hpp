#pragma once

// Reference computations for the tests, written without the library's
// kernels or Eigen products.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

// Row-major square matrix.
struct Mat {
  std::size_t d = 0;
  std::vector<cplx> a;

  cplx& operator()(std::size_t r, std::size_t c) { return a[r * d + c]; }
  cplx operator()(std::size_t r, std::size_t c) const { return a[r * d + c]; }
};

inline Mat identity(std::size_t d) {
  Mat m{d, std::vector<cplx>(d * d, 0.0)};
  for (std::size_t i = 0; i < d; ++i) {
    m(i, i) = 1.0;
  }
  return m;
}

inline Mat mul(const Mat& x, const Mat& y) {
  Mat m{x.d, std::vector<cplx>(x.d * x.d, 0.0)};
  for (std::size_t r = 0; r < x.d; ++r) {
    for (std::size_t c = 0; c < x.d; ++c) {
      cplx acc = 0.0;
      for (std::size_t k = 0; k < x.d; ++k) {
        acc += x(r, k) * y(k, c);
      }
      m(r, c) = acc;
    }
  }
  return m;
}

inline cplx normalized_trace(const Mat& x) {
  cplx acc = 0.0;
  for (std::size_t i = 0; i < x.d; ++i) {
    acc += x(i, i);
  }
  return acc / static_cast<double>(x.d);
}

// {I, sigma_x, sigma_y, sigma_z}
inline std::vector<Mat> pauli() {
  const cplx i(0.0, 1.0);
  Mat x{2, {0.0, 1.0, 1.0, 0.0}};
  Mat y{2, {0.0, -i, i, 0.0}};
  Mat z{2, {1.0, 0.0, 0.0, -1.0}};
  return {identity(2), x, y, z};
}

// tr(A_a A_b A_c A_d)/d, the value of the word (a, b, c, d)
inline cplx word(const std::vector<Mat>& m, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return normalized_trace(mul(mul(m[a], m[b]), mul(m[c], m[d])));
}

// << x_a (x) x_b, x_c (x) x_d >> = tau(a b d c)
inline cplx gram_entry(const std::vector<Mat>& m, std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return word(m, a, b, d, c);
}

// Enumerates every perfect matching of the positions, keeps those whose
// blocks pair equal letters and do not cross.
inline void matchings(const std::vector<std::size_t>& w, std::vector<int>& partner, std::uint64_t& count) {
  std::size_t first = 0;
  while (first < w.size() && partner[first] >= 0) {
    ++first;
  }
  if (first == w.size()) {
    for (std::size_t a = 0; a < w.size(); ++a) {
      const auto b = static_cast<std::size_t>(partner[a]);
      if (a > b) {
        continue;
      }
      for (std::size_t c = 0; c < w.size(); ++c) {
        const auto dd = static_cast<std::size_t>(partner[c]);
        if (c > dd) {
          continue;
        }
        if (a < c && c < b && b < dd) {
          return;
        }
      }
    }
    ++count;
    return;
  }
  for (std::size_t j = first + 1; j < w.size(); ++j) {
    if (partner[j] >= 0 || w[j] != w[first]) {
      continue;
    }
    partner[first] = static_cast<int>(j);
    partner[j] = static_cast<int>(first);
    matchings(w, partner, count);
    partner[first] = -1;
    partner[j] = -1;
  }
}

inline std::uint64_t semicircular_moment(const std::vector<std::size_t>& word_in) {
  std::vector<std::size_t> w;
  for (std::size_t l : word_in) {
    if (l != 0) {
      w.push_back(l);
    }
  }
  if (w.size() % 2 == 1) {
    return 0;
  }
  std::vector<int> partner(w.size(), -1);
  std::uint64_t count = 0;
  matchings(w, partner, count);
  return count;
}

}  // namespace oracle
