#include "chs/report.hpp"

#include "chs/error.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <memory>

namespace chs {

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("sha256 digest failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", digest[k]);
    hex += buf;
  }
  return hex;
}

namespace {

// Non-finite values have no JSON spelling; keep them visible as strings.
ReportJson num(double v) {
  if (std::isfinite(v)) {
    return v;
  }
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

ReportJson slot_json(const TargetSlot& s) {
  return ReportJson{{"i", s.i}, {"j", s.j}, {"part", std::string(part_name(s.part))}};
}

ReportJson real_matrix(const Eigen::MatrixXd& m) {
  ReportJson rows = ReportJson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ReportJson row = ReportJson::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(num(m(r, c)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

ReportJson complex_matrix(const Matrix& m) {
  ReportJson rows = ReportJson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ReportJson row = ReportJson::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(ReportJson::array({num(m(r, c).real()), num(m(r, c).imag())}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ReportJson report_envelope(std::string_view command, std::string_view input_path, std::string_view input_bytes) {
  ReportJson r;
  r["format_version"] = 1;
  r["command"] = std::string(command);
  if (!input_path.empty()) {
    r["input"] = {{"path", std::string(input_path)}, {"sha256", sha256_hex(input_bytes)}};
  }
  return r;
}

ReportJson to_report(const ValidationReport& v) {
  ReportJson r;
  r["all_pass"] = v.all_pass();
  r["tol"] = num(v.tol);
  r["scale"] = num(v.scale);
  r["min_eigenvalue"] = num(v.min_eigenvalue);
  r["kernel_dim"] = v.kernel_dim;
  ReportJson checks = ReportJson::array();
  for (const AxiomRecord& a : v.records) {
    checks.push_back({{"axiom", std::string(axiom_name(a.axiom))},
                      {"pass", a.pass},
                      {"worst", num(a.worst)},
                      {"threshold", num(a.threshold)},
                      {"witness", a.witness}});
  }
  r["checks"] = std::move(checks);
  return r;
}

ReportJson to_report(const TensorElement& u) { return complex_matrix(u.coeffs()); }

ReportJson to_report(const ExtensionResult& e) {
  ReportJson r;
  r["dim_before"] = e.perturbed.dim();
  r["dim_after"] = e.structure.dim();
  r["label"] = e.structure.labels().back();
  r["epsilon_requested"] = num(e.epsilon_requested);
  r["epsilon_achieved"] = num(e.epsilon_achieved);
  r["deviation"] = num(e.epsilon_achieved);
  r["mix_weight"] = num(e.mix_weight);
  r["t_min"] = num(e.t_min);
  r["t"] = num(e.t);
  r["bessel_bound"] = num(e.bessel_bound);
  r["witness_value"] = num(e.witness_value);
  r["witness_rayleigh"] = num(e.witness_rayleigh);
  r["schur_min_eigenvalue"] = num(e.schur_min_eigenvalue);
  r["range_residual"] = num(e.range_residual);
  r["delta"] = num(e.delta);
  r["delta_doublings"] = e.delta_doublings;
  r["margin_shift"] = num(e.margin_shift);
  r["min_eigenvalue"] = num(e.min_eigenvalue);
  r["natural_min_eigenvalue"] = num(e.natural_min_eigenvalue);
  r["null_residual_left"] = num(e.null_residual_left);
  r["null_residual_right"] = num(e.null_residual_right);
  ReportJson coords = ReportJson::array();
  for (Eigen::Index k = 0; k < e.y_coordinates.size(); ++k) {
    coords.push_back(num(e.y_coordinates(k)));
  }
  r["y_coordinates"] = std::move(coords);
  r["one_y_system"] = {{"rows", e.eta.rows},
                       {"unknowns", e.eta.unknowns},
                       {"kernel_dim", e.eta.kernel_dim},
                       {"solve_residual", num(e.eta.solve_residual)},
                       {"range_residual", num(e.eta.range_residual)},
                       {"independent_min_eigenvalue", num(e.eta.independent_min_eigenvalue)}};
  r["validation"] = to_report(e.validation);
  return r;
}

ReportJson to_report(const StepRecord& s) {
  ReportJson r;
  r["step"] = s.step;
  r["target"] = slot_json(s.slot);
  r["budget"] = num(s.budget);
  r["mix_weight"] = num(s.mix_weight);
  r["deviation"] = num(s.deviation);
  r["part_distance"] = num(s.part_distance);
  r["pair_distance"] = s.pair_distance ? num(*s.pair_distance) : ReportJson(nullptr);
  r["null_residual"] = num(s.null_residual);
  r["t_min"] = num(s.t_min);
  r["dim_after"] = s.dim_after;
  r["scale_after"] = num(s.scale_after);
  return r;
}

ReportJson to_report(const IterationResult& it) {
  ReportJson r;
  r["steps_completed"] = it.steps.size();
  r["exhausted"] = it.exhausted;
  r["total_deviation"] = num(it.total_deviation);
  r["budget_sum"] = num(it.budget_sum);
  r["dim_after"] = it.structure.dim();
  ReportJson steps = ReportJson::array();
  for (const StepRecord& s : it.steps) {
    steps.push_back(to_report(s));
  }
  r["steps"] = std::move(steps);
  ReportJson skipped = ReportJson::array();
  for (const SkipRecord& s : it.skipped) {
    ReportJson e = slot_json(s.slot);
    e["reason"] = s.reason;
    skipped.push_back(std::move(e));
  }
  r["skipped"] = std::move(skipped);
  r["distances"] = real_matrix(it.distances);
  return r;
}

ReportJson to_report(const FitResult& f) {
  ReportJson r;
  r["d"] = f.d;
  r["model"] = std::string(model_class_name(f.model));
  r["residual"] = num(f.residual);
  r["converged"] = f.converged;
  r["restarts"] = f.restarts;
  r["best_restart"] = f.best_restart;
  ReportJson traces = ReportJson::array();
  for (const RestartTrace& t : f.traces) {
    traces.push_back({{"index", t.index},
                      {"warm", t.warm},
                      {"initial", num(t.initial)},
                      {"final", num(t.final_value)},
                      {"iterations", t.iterations},
                      {"converged", t.converged}});
  }
  r["traces"] = std::move(traces);
  ReportJson mats = ReportJson::array();
  for (const Matrix& m : f.matrices) {
    mats.push_back(complex_matrix(m));
  }
  r["matrices"] = std::move(mats);
  return r;
}

ReportJson to_report(const std::vector<CurvePoint>& curve) {
  ReportJson pts = ReportJson::array();
  for (const CurvePoint& p : curve) {
    pts.push_back({{"d", p.d},
                   {"residual", num(p.residual)},
                   {"warm_started", p.warm_started},
                   {"warm_start_residual", p.warm_started ? num(p.warm_start_residual) : ReportJson(nullptr)},
                   {"best_restart", p.best_restart},
                   {"converged", p.converged}});
  }
  return pts;
}

ReportJson to_report(const ProductCoefficients& pc) {
  ReportJson r;
  r["n"] = pc.n;
  ReportJson alpha = ReportJson::array();
  for (std::size_t i = 0; i < pc.n; ++i) {
    ReportJson row = ReportJson::array();
    for (std::size_t j = 0; j < pc.n; ++j) {
      ReportJson coeffs = ReportJson::array();
      for (std::size_t m = 0; m < pc.n; ++m) {
        coeffs.push_back(ReportJson::array({num(pc(i, j, m).real()), num(pc(i, j, m).imag())}));
      }
      row.push_back(std::move(coeffs));
    }
    alpha.push_back(std::move(row));
  }
  r["alpha"] = std::move(alpha);
  r["residual"] = real_matrix(pc.residual);
  return r;
}

ReportJson to_report(const std::vector<GeneratorGrowth>& growth) {
  ReportJson out = ReportJson::array();
  for (const GeneratorGrowth& g : growth) {
    out.push_back({{"index", g.index},
                   {"operator_norm", num(g.operator_norm)},
                   {"partial_sums", g.partial_sums},
                   {"growth_rate", num(g.growth_rate)},
                   {"growth_flag", g.growth_flag}});
  }
  return out;
}

std::string render(const ReportJson& report) { return report.dump(2) + "\n"; }

}  // namespace chs
