// chs: command-line front end for cyclic structures.
//
// Exit status: 0 success, 1 module error or failed validation, 2 usage error.

#include "chs/closure.hpp"
#include "chs/embed_fit.hpp"
#include "chs/error.hpp"
#include "chs/moment_sources.hpp"
#include "chs/report.hpp"
#include "chs/structure_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>

namespace {

using namespace chs;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::uint64_t default_seed() {
  if (const char* env = std::getenv("CHS_SEED"); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(env, &used, 0);
      if (used == std::string(env).size()) {
        return v;
      }
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("CHS_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

struct Input {
  std::string path;
  std::string bytes;
  LoadedStructure loaded;
};

Input load(const std::string& path, double tol = kDefaultTol) {
  Input in{path, read_file(path), {CyclicStructure(1, Matrix::Ones(1, 1)), {}, {}}};
  in.loaded = parse_structure(in.bytes, tol);
  for (const std::string& w : in.loaded.warnings) {
    std::cerr << "warning: " << path << ": " << w << "\n";
  }
  return in;
}

void emit(const ReportJson& report, const std::string& report_path) {
  const std::string text = render(report);
  if (report_path.empty()) {
    std::cout << text;
  } else {
    write_file(report_path, text);
  }
}

void emit_structure(const CyclicStructure& s, const std::string& out) {
  const std::string text = serialize(s);
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file(out, text);
  }
}

// "i,j,re" / "i,j,im", or a coefficient file.
struct TargetSpec {
  std::optional<TargetSlot> slot;
  std::string file;
};

TargetSpec parse_target(const std::string& text) {
  TargetSpec t;
  const auto c1 = text.find(',');
  const auto c2 = c1 == std::string::npos ? c1 : text.find(',', c1 + 1);
  if (c2 == std::string::npos) {
    t.file = text;
    return t;
  }
  const std::string a = text.substr(0, c1);
  const std::string b = text.substr(c1 + 1, c2 - c1 - 1);
  const std::string part = text.substr(c2 + 1);
  const auto digits = [](const std::string& s) {
    return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
  };
  if (!digits(a) || !digits(b) || (part != "re" && part != "im")) {
    throw UsageError("--target must be i,j,re|im or a coefficient file: " + text);
  }
  t.slot = TargetSlot{std::stoul(a), std::stoul(b), part == "re" ? Part::re : Part::im};
  return t;
}

TensorElement build_target(const TargetSpec& spec, const CyclicStructure& s) {
  if (!spec.slot) {
    TensorElement y = parse_coefficients(read_file(spec.file));
    if (y.dim() != s.dim()) {
      throw ShapeError("coefficient file has dim " + std::to_string(y.dim()) + ", structure has " +
                       std::to_string(s.dim()));
    }
    return y;
  }
  const TargetSlot& slot = *spec.slot;
  if (slot.i >= s.dim() || slot.j >= s.dim()) {
    throw UsageError("--target indices must be below dim " + std::to_string(s.dim()));
  }
  const TensorElement raw = TensorElement::basis(slot.i, slot.j, s.dim());
  const TensorElement part = slot.part == Part::re ? real_part(raw) : imag_part(raw);
  const double nsq = norm_sq(s, part);
  if (!(nsq > 0.0)) {
    throw TargetError("target part has zero norm");
  }
  return part * cplx(1.0 / std::sqrt(nsq));
}

ReportJson target_json(const TargetSpec& spec) {
  if (spec.slot) {
    return {{"i", spec.slot->i}, {"j", spec.slot->j}, {"part", std::string(part_name(spec.slot->part))}};
  }
  return {{"file", spec.file}, {"sha256", sha256_hex(read_file(spec.file))}};
}

ModelClass parse_model(const std::string& m) {
  if (m == "self_adjoint") {
    return ModelClass::self_adjoint;
  }
  if (m == "positive") {
    return ModelClass::positive;
  }
  throw UsageError("--model must be self_adjoint or positive");
}

int run(int argc, char** argv) {
  CLI::App app{"Cyclic structures: validation, element adjunction, iteration and moment fitting"};
  app.require_subcommand(1);
  std::string report_path;
  app.add_option("--report", report_path, "Write the report here instead of stdout");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check the structure axioms");
  std::string v_file;
  double v_tol = kDefaultTol;
  validate_cmd->add_option("file", v_file, "Structure file")->required();
  validate_cmd->add_option("--tol", v_tol, "Tolerance")->check(CLI::PositiveNumber);

  // make
  auto* make_cmd = app.add_subcommand("make", "Generate a structure");
  make_cmd->require_subcommand(1);
  std::string m_out;
  make_cmd->add_option("--out", m_out, "Output file (default stdout)");
  auto* make_pauli = make_cmd->add_subcommand("pauli", "{I, sigma_x, sigma_y, sigma_z} in M_2");
  auto* make_matrix = make_cmd->add_subcommand("matrix", "Random self-adjoint family in M_d");
  std::size_t mm_dim = 2;
  std::size_t mm_size = 2;
  std::optional<std::uint64_t> mm_seed;
  make_matrix->add_option("--dim", mm_dim, "Matrix size d")->required()->check(CLI::PositiveNumber);
  make_matrix->add_option("--size", mm_size, "Family size n (<= d^2)")->required()->check(CLI::PositiveNumber);
  make_matrix->add_option("--seed", mm_seed, "Seed (default CHS_SEED, else 0)");
  auto* make_semi = make_cmd->add_subcommand("semicircular", "Free semicircular family");
  std::size_t ms_size = 2;
  make_semi->add_option("--size", ms_size, "Family size n")->required()->check(CLI::PositiveNumber);
  for (auto* sub : {make_pauli, make_matrix, make_semi}) {
    sub->add_option("--out", m_out, "Output file (default stdout)");
  }

  // extend
  auto* extend_cmd = app.add_subcommand("extend", "Adjoin one element");
  std::string e_file, e_target, e_out;
  double e_eps = 0.0;
  double e_delta = AssembleOptions{}.delta;
  extend_cmd->add_option("file", e_file, "Structure file")->required();
  extend_cmd->add_option("--target", e_target, "i,j,re|im or coefficient file")->required();
  extend_cmd->add_option("--eps", e_eps, "Perturbation budget")->required();
  extend_cmd->add_option("--out", e_out, "Write the extended structure here");
  extend_cmd->add_option("--delta", e_delta, "Relative positivity margin")->check(CLI::PositiveNumber);

  // iterate
  auto* iterate_cmd = app.add_subcommand("iterate", "Adjoin pair parts in sequence");
  std::string i_file, i_out, i_log;
  double i_eps = 0.0;
  std::size_t i_steps = 1;
  iterate_cmd->add_option("file", i_file, "Structure file")->required();
  iterate_cmd->add_option("--eps", i_eps, "Total budget")->required();
  iterate_cmd->add_option("--steps", i_steps, "Maximum steps")->required();
  iterate_cmd->add_option("--out", i_out, "Write the final structure here");
  iterate_cmd->add_option("--log", i_log, "Write one JSON line per step here");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit a d x d matrix model");
  std::string f_file, f_model = "self_adjoint";
  std::size_t f_d = 1;
  std::size_t f_restarts = 8;
  std::optional<std::uint64_t> f_seed;
  fit_cmd->add_option("file", f_file, "Structure file")->required();
  fit_cmd->add_option("--d", f_d, "Matrix size")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--restarts", f_restarts, "Random restarts");
  fit_cmd->add_option("--seed", f_seed, "Seed (default CHS_SEED, else 0)");
  fit_cmd->add_option("--model", f_model, "self_adjoint or positive");

  // curve
  auto* curve_cmd = app.add_subcommand("curve", "Best-found residual for d = 1..dmax");
  std::string c_file, c_model = "self_adjoint";
  std::size_t c_dmax = 4;
  std::size_t c_restarts = 4;
  std::optional<std::uint64_t> c_seed;
  curve_cmd->add_option("file", c_file, "Structure file")->required();
  curve_cmd->add_option("--dmax", c_dmax, "Largest d (<= 6)")->check(CLI::Range(1, 6));
  curve_cmd->add_option("--restarts", c_restarts, "Random restarts per d");
  curve_cmd->add_option("--seed", c_seed, "Seed (default CHS_SEED, else 0)");
  curve_cmd->add_option("--model", c_model, "self_adjoint or positive");

  // products
  auto* products_cmd = app.add_subcommand("products", "Product coefficients and growth diagnostic");
  std::string p_file;
  std::size_t p_base = 0;
  products_cmd->add_option("file", p_file, "Structure file")->required();
  products_cmd->add_option("--base-dim", p_base, "Dimension before adjunction (default: dim)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (validate_cmd->parsed()) {
    const Input in = load(v_file, v_tol);
    ReportJson r = report_envelope("validate", in.path, in.bytes);
    r["parameters"] = {{"tol", v_tol}};
    r["dim"] = in.loaded.structure.dim();
    r["result"] = to_report(in.loaded.validation);
    emit(r, report_path);
    return in.loaded.validation.all_pass() ? 0 : 1;
  }

  if (make_cmd->parsed()) {
    if (make_pauli->parsed()) {
      emit_structure(structure_from_matrices(pauli_family()), m_out);
    } else if (make_matrix->parsed()) {
      if (mm_size > mm_dim * mm_dim) {
        throw UsageError("--size must not exceed dim^2");
      }
      const std::uint64_t seed = mm_seed.value_or(default_seed());
      std::cerr << "seed " << seed << "\n";
      emit_structure(structure_from_matrices(random_family(mm_dim, mm_size, seed)), m_out);
    } else {
      emit_structure(semicircular_structure(ms_size), m_out);
    }
    return 0;
  }

  if (extend_cmd->parsed()) {
    if (!(e_eps > 0.0)) {
      throw UsageError("--eps must be positive");
    }
    const Input in = load(e_file);
    const TargetSpec spec = parse_target(e_target);
    const TensorElement y = build_target(spec, in.loaded.structure);
    ExtendOptions opts;
    opts.assemble.delta = e_delta;
    const ExtensionResult ext = extend(in.loaded.structure, y, e_eps, opts);
    ReportJson r = report_envelope("extend", in.path, in.bytes);
    r["parameters"] = {{"target", target_json(spec)}, {"eps", e_eps}, {"delta", e_delta}};
    r["result"] = to_report(ext);
    if (!e_out.empty()) {
      const std::string text = serialize(ext.structure);
      write_file(e_out, text);
      r["output"] = {{"path", e_out}, {"sha256", sha256_hex(text)}};
    }
    emit(r, report_path);
    return ext.validation.all_pass() ? 0 : 1;
  }

  if (iterate_cmd->parsed()) {
    if (!(i_eps > 0.0)) {
      throw UsageError("--eps must be positive");
    }
    const Input in = load(i_file);
    ReportJson r = report_envelope("iterate", in.path, in.bytes);
    r["parameters"] = {{"eps", i_eps}, {"steps", i_steps}};
    const auto finish = [&](const IterationResult& it) {
      r["result"] = to_report(it);
      if (!i_log.empty()) {
        std::string lines;
        for (const StepRecord& s : it.steps) {
          lines += to_report(s).dump() + "\n";
        }
        write_file(i_log, lines);
      }
      if (!i_out.empty()) {
        const std::string text = serialize(it.structure);
        write_file(i_out, text);
        r["output"] = {{"path", i_out}, {"sha256", sha256_hex(text)}};
      }
    };
    try {
      const IterationResult it = iterate(in.loaded.structure, i_eps, i_steps);
      finish(it);
      emit(r, report_path);
      return 0;
    } catch (const IterationError& e) {
      r["error"] = e.what();
      finish(e.partial());
      emit(r, report_path);
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }

  if (fit_cmd->parsed()) {
    const Input in = load(f_file);
    FitOptions opts;
    opts.d = f_d;
    opts.restarts = f_restarts;
    opts.seed = f_seed.value_or(default_seed());
    opts.model = parse_model(f_model);
    const FitResult fr = fit(in.loaded.structure, opts);
    ReportJson r = report_envelope("fit", in.path, in.bytes);
    r["parameters"] = {{"d", f_d}, {"restarts", f_restarts}, {"seed", opts.seed}, {"model", f_model}};
    r["result"] = to_report(fr);
    emit(r, report_path);
    return 0;
  }

  if (curve_cmd->parsed()) {
    const Input in = load(c_file);
    const std::uint64_t seed = c_seed.value_or(default_seed());
    const auto curve = epsilon_curve(in.loaded.structure, c_dmax, c_restarts, seed, parse_model(c_model));
    ReportJson r = report_envelope("curve", in.path, in.bytes);
    r["parameters"] = {{"dmax", c_dmax}, {"restarts", c_restarts}, {"seed", seed}, {"model", c_model}};
    r["result"] = to_report(curve);
    emit(r, report_path);
    return 0;
  }

  if (products_cmd->parsed()) {
    const Input in = load(p_file);
    const std::size_t base = p_base == 0 ? in.loaded.structure.dim() : p_base;
    ReportJson r = report_envelope("products", in.path, in.bytes);
    r["parameters"] = {{"base_dim", base}};
    r["result"] = {{"coefficients", to_report(product_coefficients(in.loaded.structure))},
                   {"growth", to_report(boundedness_diagnostic(in.loaded.structure, base))}};
    emit(r, report_path);
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const chs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
