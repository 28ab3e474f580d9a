#include "chs/closure.hpp"

#include <algorithm>
#include <cmath>

namespace chs {

std::string_view part_name(Part p) { return p == Part::re ? "re" : "im"; }

std::vector<TargetSlot> target_order(std::size_t original_dim) {
  std::vector<TargetSlot> out;
  if (original_dim < 2) {
    return out;
  }
  const std::size_t top = original_dim - 1;
  for (std::size_t sum = 2; sum <= 2 * top; ++sum) {
    for (std::size_t i = 1; i <= top; ++i) {
      if (sum < i + i || sum - i > top) {
        continue;
      }
      const std::size_t j = sum - i;
      out.push_back({i, j, Part::re});
      out.push_back({i, j, Part::im});
    }
  }
  return out;
}

std::optional<PlannedTarget> next_target(const CyclicStructure& s, std::size_t original_dim, std::size_t& cursor,
                                         std::vector<SkipRecord>* skipped) {
  const std::vector<TargetSlot> order = target_order(original_dim);
  const std::size_t n = s.dim();
  while (cursor < order.size()) {
    const TargetSlot slot = order[cursor++];
    const TensorElement raw = TensorElement::basis(slot.i, slot.j, n);
    const TensorElement part = slot.part == Part::re ? real_part(raw) : imag_part(raw);
    const double norm = std::sqrt(std::max(0.0, norm_sq(s, part)));
    std::string reason;
    if (!has_nontrivial_support(part)) {
      reason = "raw support is trivial";
    } else if (norm < kSkipNorm) {
      reason = "norm below threshold";
    }
    if (!reason.empty()) {
      if (skipped) {
        skipped->push_back({slot, reason});
      }
      continue;
    }
    return PlannedTarget{slot, part * cplx(1.0 / norm), norm};
  }
  return std::nullopt;
}

double pair_distance(const CyclicStructure& s, std::size_t i, std::size_t j) {
  const std::size_t n = s.dim();
  return project_onto_span(s, TensorElement::basis(i, j, n), left_unit_span(n)).distance;
}

namespace {

Eigen::MatrixXd distance_table(const CyclicStructure& s, std::size_t original_dim) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(original_dim), static_cast<Eigen::Index>(original_dim));
  for (std::size_t i = 0; i < original_dim; ++i) {
    for (std::size_t j = 0; j < original_dim; ++j) {
      d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pair_distance(s, i, j);
    }
  }
  return d;
}

// True when no later slot of the same pair will be processed.
bool last_part_of_pair(const CyclicStructure& s, std::size_t original_dim, std::size_t cursor, const TargetSlot& slot) {
  std::size_t probe = cursor;
  std::vector<SkipRecord> ignored;
  const auto nxt = next_target(s, original_dim, probe, &ignored);
  return !nxt || nxt->slot.i != slot.i || nxt->slot.j != slot.j;
}

}  // namespace

IterationResult iterate(const CyclicStructure& s, double eps_total, std::size_t max_steps,
                        const ExtendOptions& options) {
  if (!(eps_total > 0.0)) {
    throw std::invalid_argument("iterate: total budget must be positive");
  }
  const std::size_t n0 = s.dim();
  IterationResult out{.structure = s};
  std::size_t cursor = 0;
  for (std::size_t step = 1; step <= max_steps; ++step) {
    const auto target = next_target(out.structure, n0, cursor, &out.skipped);
    if (!target) {
      break;
    }
    StepRecord rec;
    rec.step = step;
    rec.slot = target->slot;
    rec.budget = std::ldexp(eps_total, -static_cast<int>(step));
    try {
      ExtendOptions opts = options;
      opts.label = "Y" + std::to_string(out.structure.dim()) + "[" + std::to_string(rec.slot.i) + "," +
                   std::to_string(rec.slot.j) + "," + std::string(part_name(rec.slot.part)) + "]";
      ExtensionResult ext = extend(out.structure, target->y, rec.budget, opts);
      if (!ext.validation.all_pass()) {
        throw AssemblyError("extension output failed validation", ext.min_eigenvalue);
      }
      rec.mix_weight = ext.mix_weight;
      rec.deviation = ext.epsilon_achieved;
      rec.null_residual = std::max(ext.null_residual_left, ext.null_residual_right);
      rec.t_min = ext.t_min;
      out.structure = std::move(ext.structure);
    } catch (const Error& e) {
      out.budget_sum += rec.budget;
      out.total_deviation = pair_deviation(s, out.structure);
      out.distances = distance_table(out.structure, n0);
      throw IterationError("step " + std::to_string(step) + " failed: " + e.what(), std::move(out));
    }
    const std::size_t n = out.structure.dim();
    rec.dim_after = n;
    rec.scale_after = out.structure.scale();
    const TensorElement raw = TensorElement::basis(rec.slot.i, rec.slot.j, n);
    const TensorElement part = rec.slot.part == Part::re ? real_part(raw) : imag_part(raw);
    const SpanProjection proj = project_onto_span(out.structure, part, left_unit_span(n));
    rec.part_distance = proj.distance / std::max(kSkipNorm, target->norm);
    if (last_part_of_pair(out.structure, n0, cursor, rec.slot)) {
      rec.pair_distance = pair_distance(out.structure, rec.slot.i, rec.slot.j);
    }
    out.budget_sum += rec.budget;
    out.steps.push_back(rec);
  }
  std::size_t probe = cursor;
  out.exhausted = !next_target(out.structure, n0, probe);
  out.total_deviation = pair_deviation(s, out.structure);
  out.distances = distance_table(out.structure, n0);
  return out;
}

// ---------------------------------------------------------------------------

ProductCoefficients product_coefficients(const CyclicStructure& s) {
  const std::size_t n = s.dim();
  ProductCoefficients out;
  out.n = n;
  out.alpha.assign(n * n * n, 0.0);
  out.residual = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const std::vector<TensorElement> basis = left_unit_span(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const SpanProjection p = project_onto_span(s, TensorElement::basis(i, j, n), basis);
      for (std::size_t m = 0; m < n; ++m) {
        out.alpha[(i * n + j) * n + m] = p.coefficients(static_cast<Eigen::Index>(m));
      }
      out.residual(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p.distance * p.distance;
    }
  }
  return out;
}

std::vector<GeneratorGrowth> boundedness_diagnostic(const CyclicStructure& s, std::size_t base_dim) {
  const std::size_t n = s.dim();
  base_dim = std::clamp<std::size_t>(base_dim, 1, n);
  const ProductCoefficients pc = product_coefficients(s);
  std::vector<GeneratorGrowth> out;
  for (std::size_t i = 0; i < n; ++i) {
    GeneratorGrowth g;
    g.index = i;
    g.left = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t m = 0; m < n; ++m) {
      for (std::size_t j = 0; j < n; ++j) {
        g.left(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(j)) = pc(i, j, m);
      }
    }
    g.operator_norm = spectral_norm(g.left);
    for (std::size_t k = base_dim; k <= n; ++k) {
      double acc = 0.0;
      for (std::size_t m = 0; m < k; ++m) {
        acc += std::abs(pc(i, i, m));
      }
      g.partial_sums.push_back(acc);
    }
    const double first = g.partial_sums.front();
    const double last = g.partial_sums.back();
    const std::size_t added = n - base_dim;
    if (added > 0 && first > 0.0) {
      g.growth_rate = std::pow(last / first, 1.0 / static_cast<double>(added)) - 1.0;
    } else if (added > 0 && last > 0.0) {
      g.growth_rate = HUGE_VAL;
    }
    g.growth_flag = g.growth_rate > 0.1;
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace chs
