#pragma once

// Iterated adjunction: adjoin the real and imaginary parts of x_i (x) x_j for
// original pairs in a fixed order, spending eps/2^s at step s, so that each
// processed pair ends up (up to a null vector) in span{x_m (x) 1}. Also the
// product coefficients of a structure and a growth diagnostic for them.

#include "chs/adjunction.hpp"
#include "chs/error.hpp"

#include <optional>
#include <vector>

namespace chs {

enum class Part { re, im };

std::string_view part_name(Part p);

inline constexpr double kSkipNorm = 1e-8;

struct TargetSlot {
  std::size_t i = 0;
  std::size_t j = 0;
  Part part = Part::re;
};

// Pairs (i, j), 1 <= i <= j < original_dim, by increasing i + j and then i,
// each as Re then Im.
std::vector<TargetSlot> target_order(std::size_t original_dim);

struct PlannedTarget {
  TargetSlot slot;
  TensorElement y;    // normalized part, in the current structure's basis
  double norm = 0.0;  // seminorm of the raw part
};

struct SkipRecord {
  TargetSlot slot;
  std::string reason;
};

// Advances `cursor` through target_order(original_dim) and returns the next
// part worth adjoining in s; skipped parts are appended to `skipped`.
std::optional<PlannedTarget> next_target(const CyclicStructure& s, std::size_t original_dim, std::size_t& cursor,
                                         std::vector<SkipRecord>* skipped = nullptr);

// Seminorm distance from x_i (x) x_j to span{x_m (x) 1 : m < dim}.
double pair_distance(const CyclicStructure& s, std::size_t i, std::size_t j);

struct StepRecord {
  std::size_t step = 0;  // 1-based
  TargetSlot slot;
  double budget = 0.0;        // eps_total / 2^step
  double mix_weight = 0.0;
  double deviation = 0.0;     // pair deviation of this step
  double part_distance = 0.0;  // of the normalized part, right after the step
  std::optional<double> pair_distance;  // after the last part of the pair
  double null_residual = 0.0;  // max of the two identification residuals
  std::size_t dim_after = 0;
  double t_min = 0.0;
  double scale_after = 0.0;
};

struct IterationResult {
  CyclicStructure structure;
  std::vector<StepRecord> steps{};
  std::vector<SkipRecord> skipped{};
  Eigen::MatrixXd distances{};  // d(x_i(x)x_j, span{x_m(x)1}) for original i, j
  double total_deviation = 0.0;
  double budget_sum = 0.0;
  bool exhausted = false;  // ran out of targets before max_steps
};

class IterationError : public Error {
 public:
  IterationError(const std::string& what, IterationResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const IterationResult& partial() const noexcept { return partial_; }

 private:
  IterationResult partial_;
};

IterationResult iterate(const CyclicStructure& s, double eps_total, std::size_t max_steps,
                        const ExtendOptions& options = {});

// ---------------------------------------------------------------------------

struct ProductCoefficients {
  std::size_t n = 0;
  std::vector<cplx> alpha;      // alpha[(i*n + j)*n + m]
  Eigen::MatrixXd residual;     // squared distance of x_i(x)x_j to span{x_m(x)1}

  cplx operator()(std::size_t i, std::size_t j, std::size_t m) const { return alpha[(i * n + j) * n + m]; }
};

ProductCoefficients product_coefficients(const CyclicStructure& s);

struct GeneratorGrowth {
  std::size_t index = 0;
  Matrix left;                  // L[m, j] = alpha[index][j][m]
  double operator_norm = 0.0;
  std::vector<double> partial_sums;  // sum_{m < k} |alpha_ii^m| for k = base_dim..n
  double growth_rate = 0.0;     // geometric mean growth per added dimension
  bool growth_flag = false;     // growth_rate > 10%
};

// base_dim is the dimension before any adjoined vectors.
std::vector<GeneratorGrowth> boundedness_diagnostic(const CyclicStructure& s, std::size_t base_dim);

}  // namespace chs
