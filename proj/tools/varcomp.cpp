// varcomp: design, sweep, multi-period search, power flow and grading from
// the command line. Exit codes: 0 ok/clean, 1 findings, 2 input error,
// 3 solver failure, 4 non-convergence.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "varcomp/grader.hpp"
#include "varcomp/io.hpp"
#include "varcomp/multiperiod.hpp"
#include "varcomp/powerflow.hpp"
#include "varcomp/report.hpp"
#include "varcomp/switched_compensation.hpp"

namespace {

using namespace varcomp;
using nlohmann::json;

enum Exit { kOk = 0, kFindings = 1, kInput = 2, kSolver = 3, kNonConvergence = 4 };

template <typename T>
struct Flag {
  T value{};
  CLI::Option* opt = nullptr;
  std::optional<T> get() const { return opt && opt->count() > 0 ? std::optional<T>(value) : std::nullopt; }
};

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    io::write_atomic(out_path, content);
  }
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);
  return buf;
}

const io::ProblemFile load_problem(const std::string& path, io::ProblemKind kind) {
  auto pf = io::read_problem(path);
  if (pf.kind != kind) {
    throw InputError("KIND_MISMATCH", "'" + path + "' is a " + std::string(io::to_string(pf.kind)) + " problem, expected " +
                                          std::string(io::to_string(kind)));
  }
  return pf;
}

// --- design ---------------------------------------------------------------

struct DesignArgs {
  std::string problem, out, agreement_out;
  Flag<std::string> method, convention;
  Flag<double> grid_step;
  Flag<unsigned> threads;
};

json agreement_json(const DesignSolution& a, const DesignSolution& b, double step) {
  auto diff = [](double x, double y) { return std::abs(x - y); };
  const double t_a = a.threshold.value_or(0.0);
  const double t_b = b.threshold.value_or(0.0);
  json fields = {{"worst_abs_qs", diff(a.worst_abs_qs, b.worst_abs_qs)},
                 {"q_l", diff(a.q_l, b.q_l)},
                 {"q_c", diff(a.q_c, b.q_c)},
                 {"threshold", diff(t_a, t_b)}};
  bool agree = a.threshold.has_value() == b.threshold.has_value();
  for (const auto& [_, v] : fields.items()) agree = agree && v.get<double>() <= step + 1e-9;
  return {{"schema_version", io::kSchemaVersion},
          {"kind", "design-agreement"},
          {"grid_step", step},
          {"analytic", {{"q_l", a.q_l}, {"q_c", a.q_c}, {"threshold", io::reactance_or_null(a.threshold)}, {"worst_abs_qs", a.worst_abs_qs}}},
          {"brute", {{"q_l", b.q_l}, {"q_c", b.q_c}, {"threshold", io::reactance_or_null(b.threshold)}, {"worst_abs_qs", b.worst_abs_qs}}},
          {"abs_diff", fields},
          {"agree", agree}};
}

int run_design(const DesignArgs& a) {
  const auto pf = load_problem(a.problem, io::ProblemKind::continuous);
  const auto& problem = pf.continuous();
  const auto method = io::resolve<std::string>(a.method.get(), "METHOD", pf.defaults, "method", "analytic");
  const auto convention = parse_convention(io::resolve<std::string>(a.convention.get(), "CONVENTION", pf.defaults, "convention", "paper"));
  const double step = io::resolve<double>(a.grid_step.get(), "GRID_STEP", pf.defaults, "grid_step", 1.0);
  const unsigned threads = io::resolve<unsigned>(a.threads.get(), "THREADS", pf.defaults, "threads", 0u);
  if (method != "analytic" && method != "brute" && method != "both") {
    throw InputError("BAD_METHOD", "method must be analytic, brute or both");
  }

  if (method == "brute") {
    const auto s = brute_force_design(problem, {step, threads});
    emit(a.out, io::dump(io::continuous_solution_json(s, problem, "varcomp design --method brute", false, convention)));
    return kOk;
  }
  const auto s = design_minimax(problem);
  emit(a.out, io::dump(io::continuous_solution_json(s, problem, "varcomp design --method analytic", true, convention)));
  if (method == "both") {
    const auto b = brute_force_design(problem, {step, threads});
    const auto report = io::dump(agreement_json(s, b, step));
    std::string path = a.agreement_out;
    if (path.empty() && !a.out.empty()) path = a.out + ".agreement.json";
    if (path.empty()) {
      std::cerr << report;
    } else {
      io::write_atomic(path, report);
    }
  }
  return kOk;
}

// --- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::string problem, solution, csv;
  Flag<long> samples;
  Flag<std::string> convention;
};

int run_sweep(const SweepArgs& a) {
  const auto pf = load_problem(a.problem, io::ProblemKind::continuous);
  const auto& problem = pf.continuous();
  const auto doc = io::read_json_file(a.solution);
  const auto cand = parse_continuous_candidate(doc);
  const long n = io::resolve<long>(a.samples.get(), "SAMPLES", pf.defaults, "samples", 97L);
  if (n < 2) throw InputError("BAD_SAMPLE_COUNT", "profile needs at least two samples");
  const auto convention = parse_convention(io::resolve<std::string>(a.convention.get(), "CONVENTION", pf.defaults, "convention", "paper"));

  std::optional<double> x_c = cand.x_c;
  if (x_c) x_c = normalize_capacitive(*x_c).value;
  const auto design = design_from_reactances(problem, cand.x_l, x_c, cand.threshold);
  if (doc.contains("v_rms") && doc.at("v_rms").is_number()) {
    DesignSolution stamped = design;
    stamped.v_rms = doc.at("v_rms").get<double>();
    check_voltage_consistency(stamped, problem);
  }
  std::ostringstream out;
  out << "q_d,switch_state,q_s,pf,label\n";
  for (const auto& r : qs_profile(design, problem, static_cast<std::size_t>(n), convention)) {
    out << fmt(r.q_d) << ',' << to_string(r.state) << ',' << fmt(r.q_s) << ',' << fmt(r.pf) << ',' << to_string(r.label)
        << '\n';
  }
  emit(a.csv, out.str());
  return kOk;
}

// --- multiperiod ----------------------------------------------------------

struct MultiArgs {
  std::string problem, out;
  Flag<double> cf_max, cf_step, cs_max, cs_step;
  Flag<std::string> convention;
  bool band = false;
};

int run_multiperiod(const MultiArgs& a) {
  const auto pf = load_problem(a.problem, io::ProblemKind::multi_period);
  const auto& problem = pf.multi_period();
  const auto d_cf = default_cf_grid();
  const auto d_cs = default_cs_grid();
  const GridSpec cf{io::resolve<double>(a.cf_max.get(), "CF_MAX", pf.defaults, "cf_max", d_cf.max),
                    io::resolve<double>(a.cf_step.get(), "CF_STEP", pf.defaults, "cf_step", d_cf.step)};
  const GridSpec cs{io::resolve<double>(a.cs_max.get(), "CS_MAX", pf.defaults, "cs_max", d_cs.max),
                    io::resolve<double>(a.cs_step.get(), "CS_STEP", pf.defaults, "cs_step", d_cs.step)};
  const auto convention = parse_convention(io::resolve<std::string>(a.convention.get(), "CONVENTION", pf.defaults, "convention", "paper"));
  try {
    (void)cf.values();
    (void)cs.values();
  } catch (const InputError& e) {
    throw SolverError(e.code(), e.what());
  }
  auto s = grid_search(problem, cf, cs);
  if (a.band) {
    try {
      attach_band(problem, s);
    } catch (const InputError& e) {
      std::cerr << "varcomp: warning: " << e.code() << ": " << e.what() << "; band omitted\n";
    }
  }
  emit(a.out, io::dump(io::multiperiod_solution_json(s, problem, "varcomp multiperiod", true, convention)));
  return kOk;
}

// --- powerflow ------------------------------------------------------------

struct PowerFlowArgs {
  std::string network, out;
  Flag<double> tol;
  Flag<int> max_iter;
  Flag<std::string> jacobian;
};

int run_powerflow(const PowerFlowArgs& a) {
  const auto pf = load_problem(a.network, io::ProblemKind::powerflow);
  const auto& net = pf.network();
  NewtonOptions opt;
  opt.tol = io::resolve<double>(a.tol.get(), "TOL", pf.defaults, "tol", opt.tol);
  opt.max_iter = io::resolve<int>(a.max_iter.get(), "MAX_ITER", pf.defaults, "max_iter", opt.max_iter);
  const auto jac = io::resolve<std::string>(a.jacobian.get(), "JACOBIAN", pf.defaults, "jacobian", "fd");
  if (jac == "analytic") {
    opt.jacobian = JacobianMethod::analytic;
  } else if (jac != "fd") {
    throw InputError("BAD_JACOBIAN", "jacobian must be fd or analytic");
  }
  const auto f = assemble_formulation(net, build_ybus(net.branches, net.size()));
  const auto s = solve_newton(f, f.flat_start(), opt);
  emit(a.out, io::dump(io::powerflow_solution_json(s)));
  if (!s.converged) {
    std::cerr << "varcomp: NON_CONVERGENCE: mismatch " << s.final_mismatch << " after " << s.iterations
              << " residual evaluations\n";
    return kNonConvergence;
  }
  return kOk;
}

// --- grade ----------------------------------------------------------------

struct GradeArgs {
  std::string candidate, problem, out;
  Flag<std::string> format, convention;
  Flag<double> rel_tol, threshold_tol, residual_tol;
};

int run_grade(const GradeArgs& a) {
  const auto pf = io::read_problem(a.problem);
  const auto doc = io::read_json_file(a.candidate);
  const auto format = io::resolve<std::string>(a.format.get(), "FORMAT", pf.defaults, "format", "json");
  if (format != "json" && format != "text") throw InputError("BAD_FORMAT", "format must be json or text");
  auto opt = make_grade_options(io::resolve<double>(a.rel_tol.get(), "REL_TOL", pf.defaults, "rel_tol", 0.005),
                                io::resolve<double>(a.threshold_tol.get(), "THRESHOLD_TOL", pf.defaults, "threshold_tol", 0.1),
                                io::resolve<double>(a.residual_tol.get(), "RESIDUAL_TOL", pf.defaults, "residual_tol", 1e-6));
  opt.convention = parse_convention(io::resolve<std::string>(a.convention.get(), "CONVENTION", pf.defaults, "convention", "paper"));

  ErrorReport report;
  switch (pf.kind) {
    case io::ProblemKind::continuous:
      report = grade_continuous(parse_continuous_candidate(doc), pf.continuous(), opt);
      break;
    case io::ProblemKind::multi_period:
      report = grade_multiperiod(parse_multiperiod_candidate(doc), pf.multi_period(), opt);
      break;
    case io::ProblemKind::powerflow:
      report = grade_powerflow(doc, pf.network(), opt);
      break;
  }
  emit(a.out, format == "json" ? io::dump(to_json(report)) : render_text(report));
  return report.clean() ? kOk : kFindings;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switched reactive compensation design, power flow and solution grading"};
  app.require_subcommand(1);

  DesignArgs design;
  auto* c_design = app.add_subcommand("design", "min-max design of a continuous-range compensation problem");
  c_design->add_option("problem", design.problem, "problem file")->required();
  design.method.opt = c_design->add_option("--method", design.method.value, "analytic, brute or both");
  design.grid_step.opt = c_design->add_option("--grid-step", design.grid_step.value, "brute-force grid step (VAr)");
  design.threads.opt = c_design->add_option("--threads", design.threads.value, "brute-force worker threads (0: all cores)");
  design.convention.opt = c_design->add_option("--convention", design.convention.value, "paper or classical labels");
  c_design->add_option("--out", design.out, "solution file (stdout if omitted)");
  c_design->add_option("--agreement-out", design.agreement_out, "agreement report for --method both");

  SweepArgs sweep;
  auto* c_sweep = app.add_subcommand("sweep", "sample Q_s and pf across the demand range as CSV");
  c_sweep->add_option("problem", sweep.problem, "problem file")->required();
  c_sweep->add_option("solution", sweep.solution, "solution file")->required();
  sweep.samples.opt = c_sweep->add_option("--samples", sweep.samples.value, "number of rows, endpoints included");
  sweep.convention.opt = c_sweep->add_option("--convention", sweep.convention.value, "paper or classical labels");
  c_sweep->add_option("--csv", sweep.csv, "CSV file (stdout if omitted)");

  MultiArgs multi;
  auto* c_multi = app.add_subcommand("multiperiod", "grid search over fixed/switched ratings and switch states");
  c_multi->add_option("problem", multi.problem, "problem file")->required();
  multi.cf_max.opt = c_multi->add_option("--cf-max", multi.cf_max.value, "fixed rating grid maximum (MVAr)");
  multi.cf_step.opt = c_multi->add_option("--cf-step", multi.cf_step.value, "fixed rating grid step (MVAr)");
  multi.cs_max.opt = c_multi->add_option("--cs-max", multi.cs_max.value, "switched rating grid maximum (MVAr)");
  multi.cs_step.opt = c_multi->add_option("--cs-step", multi.cs_step.value, "switched rating grid step (MVAr)");
  multi.convention.opt = c_multi->add_option("--convention", multi.convention.value, "paper or classical labels");
  c_multi->add_flag("--band", multi.band, "report the optimal switched-rating band");
  c_multi->add_option("--out", multi.out, "solution file (stdout if omitted)");

  PowerFlowArgs flow;
  auto* c_flow = app.add_subcommand("powerflow", "Newton power flow with distributed slack");
  c_flow->add_option("network", flow.network, "network file")->required();
  flow.tol.opt = c_flow->add_option("--tol", flow.tol.value, "mismatch tolerance (inf-norm)");
  flow.max_iter.opt = c_flow->add_option("--max-iter", flow.max_iter.value, "Newton iteration limit");
  flow.jacobian.opt = c_flow->add_option("--jacobian", flow.jacobian.value, "fd or analytic");
  c_flow->add_option("--out", flow.out, "solution file (stdout if omitted)");

  GradeArgs grade;
  auto* c_grade = app.add_subcommand("grade", "grade a candidate solution against its problem");
  c_grade->add_option("candidate", grade.candidate, "candidate file")->required();
  c_grade->add_option("problem", grade.problem, "problem or network file")->required();
  grade.format.opt = c_grade->add_option("--format", grade.format.value, "json or text");
  grade.rel_tol.opt = c_grade->add_option("--rel-tol", grade.rel_tol.value, "relative tolerance for reactances, pf, powers");
  grade.threshold_tol.opt = c_grade->add_option("--threshold-tol", grade.threshold_tol.value, "absolute threshold tolerance (VAr)");
  grade.residual_tol.opt = c_grade->add_option("--residual-tol", grade.residual_tol.value, "power-flow residual tolerance");
  grade.convention.opt = c_grade->add_option("--convention", grade.convention.value, "paper or classical labels");
  c_grade->add_option("--out", grade.out, "report file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInput;
  }

  try {
    if (*c_design) return run_design(design);
    if (*c_sweep) return run_sweep(sweep);
    if (*c_multi) return run_multiperiod(multi);
    if (*c_flow) return run_powerflow(flow);
    if (*c_grade) return run_grade(grade);
  } catch (const InputError& e) {
    std::cerr << "varcomp: " << e.code() << ": " << e.what() << '\n';
    return kInput;
  } catch (const SolverError& e) {
    std::cerr << "varcomp: " << e.code() << ": " << e.what() << '\n';
    return e.code() == "NON_CONVERGENCE" ? kNonConvergence : kSolver;
  } catch (const std::exception& e) {
    std::cerr << "varcomp: internal error: " << e.what() << '\n';
    return kSolver;
  }
  return kInput;
}
