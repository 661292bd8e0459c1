#ifndef VARCOMP_GRADER_HPP
#define VARCOMP_GRADER_HPP

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "varcomp/ac_quantities.hpp"
#include "varcomp/error.hpp"
#include "varcomp/formulation_lint.hpp"
#include "varcomp/multiperiod.hpp"
#include "varcomp/powerflow.hpp"
#include "varcomp/report.hpp"
#include "varcomp/switched_compensation.hpp"

namespace varcomp {

struct GradeOptions {
  Tolerance reactance{1e-9, 0.005};
  Tolerance pf{0.0, 0.005};
  Tolerance power{1e-9, 0.005};      // S, Z, MVA/MVAr figures
  Tolerance reactive{0.1, 0.005};    // VAr figures of the continuous problem
  Tolerance threshold{0.1, 0.0};
  double residual = 1e-6;
  LabelConvention convention = LabelConvention::paper;
  GridSpec cf_grid = default_cf_grid();
  GridSpec cs_grid = default_cs_grid();
  NewtonOptions newton{};
};

/// Relative tolerance `rel` for reactances, pf and powers; absolute
/// `threshold_abs` for switching thresholds.
inline GradeOptions make_grade_options(double rel, double threshold_abs, double residual) {
  if (!(rel >= 0.0) || !(threshold_abs >= 0.0) || !(residual > 0.0)) {
    throw InputError("BAD_TOLERANCE", "tolerances must be non-negative (residual positive)");
  }
  GradeOptions o;
  o.reactance.rel = rel;
  o.pf.rel = rel;
  o.power.rel = rel;
  o.reactive = {threshold_abs, rel};
  o.threshold.abs = threshold_abs;
  o.residual = residual;
  return o;
}

namespace detail {

inline void check_kind(const nlohmann::json& j, const std::string& kind) {
  if (!j.is_object()) throw malformed("candidate must be a JSON object");
  if (j.contains("schema_version") && j.at("schema_version") != 1) {
    throw InputError("UNSUPPORTED_SCHEMA", "unsupported candidate schema_version " + j.at("schema_version").dump());
  }
  const auto actual = optional_or<std::string>(j, "kind", "", "candidate");
  if (actual != kind) throw InputError("KIND_MISMATCH", "candidate kind '" + actual + "' where '" + kind + "' expected");
}

inline std::optional<double> optional_number(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) throw malformed(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline nlohmann::json label_json(PfLabel l) { return std::string(to_string(l)); }

struct LabelCheck {
  std::string location;
  PfLabel claimed;
  PfLabel actual;
  PfLabel other_convention;
};

/// One LABEL_CONVENTION finding when every mismatch is explained by the
/// other convention, otherwise LABEL_WRONG per point.
inline void emit_label_findings(const std::vector<LabelCheck>& checks, LabelConvention convention, ErrorReport& report) {
  std::vector<const LabelCheck*> wrong;
  for (const auto& c : checks) {
    if (c.claimed != c.actual) wrong.push_back(&c);
  }
  if (wrong.empty()) return;
  const bool convention_only =
      std::all_of(wrong.begin(), wrong.end(), [](const LabelCheck* c) { return c->claimed == c->other_convention; });
  if (convention_only) {
    const auto other = convention == LabelConvention::paper ? LabelConvention::classical : LabelConvention::paper;
    report.add({"LABEL_CONVENTION", "claims.labels", std::string(to_string(convention)), std::string(to_string(other)),
                std::nullopt, Severity::minor,
                "leading/lagging labels follow the " + std::string(to_string(other)) + " convention",
                "a source supplying Q > 0 is leading under the configured convention"});
    return;
  }
  for (const auto* c : wrong) {
    report.add({"LABEL_WRONG", c->location, label_json(c->actual), label_json(c->claimed), std::nullopt, Severity::major,
                "power factor is " + std::string(to_string(c->actual)) + ", not " + std::string(to_string(c->claimed)),
                std::nullopt});
  }
}

inline LabelConvention other(LabelConvention c) {
  return c == LabelConvention::paper ? LabelConvention::classical : LabelConvention::paper;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Continuous-range compensation

struct LabelClaim {
  double q_d = 0.0;
  PfLabel label = PfLabel::unity;
};

/// Candidate design in ohms and VAr. A null reactance means "no element".
/// Capacitive reactances may be written as positive magnitudes; they are
/// normalized (and flagged).
struct ContinuousCandidate {
  std::string provenance;
  std::optional<double> x_l;
  std::optional<double> x_c;
  std::optional<double> threshold;
  std::optional<std::vector<double>> unity_points;
  std::optional<double> worst_abs_qs;
  std::optional<double> worst_pf;
  std::optional<std::pair<double, double>> qs_range;  // range of |Q_s|
  std::optional<bool> optimal;
  std::vector<LabelClaim> labels;
};

inline ContinuousCandidate parse_continuous_candidate(const nlohmann::json& j) {
  detail::check_kind(j, "continuous-compensation");
  ContinuousCandidate c;
  c.provenance = detail::optional_or<std::string>(j, "provenance", "", "candidate");
  c.x_l = detail::optional_number(j, "x_l", "candidate");
  c.x_c = detail::optional_number(j, "x_c", "candidate");
  c.threshold = detail::optional_number(j, "threshold", "candidate");
  if (!j.contains("claims")) return c;
  const auto& cl = j.at("claims");
  if (!cl.is_object()) throw detail::malformed("claims must be an object");
  if (cl.contains("unity_points")) c.unity_points = detail::required<std::vector<double>>(cl, "unity_points", "claims");
  c.worst_abs_qs = detail::optional_number(cl, "worst_abs_qs", "claims");
  c.worst_pf = detail::optional_number(cl, "worst_pf", "claims");
  if (cl.contains("qs_range")) {
    const auto r = detail::required<std::vector<double>>(cl, "qs_range", "claims");
    if (r.size() != 2) throw detail::malformed("claims.qs_range must have two entries");
    c.qs_range = std::make_pair(r[0], r[1]);
  }
  if (cl.contains("optimal")) c.optimal = detail::required<bool>(cl, "optimal", "claims");
  if (cl.contains("labels")) {
    for (const auto& l : cl.at("labels")) {
      LabelClaim lc;
      lc.q_d = detail::required<double>(l, "q_d", "claims.labels");
      try {
        lc.label = parse_pf_label(detail::required<std::string>(l, "label", "claims.labels"));
      } catch (const InputError& e) {
        throw detail::malformed(std::string("claims.labels: ") + e.what());
      }
      c.labels.push_back(lc);
    }
  }
  return c;
}

inline ErrorReport grade_continuous(const ContinuousCandidate& cand, const CompensationProblem& problem,
                                    const GradeOptions& opt = {}) {
  problem.validate();
  ErrorReport report;
  report.kind = "continuous-compensation";
  report.provenance = cand.provenance;

  // 1. Sign normalization
  std::optional<double> x_c = cand.x_c;
  if (x_c) {
    const auto n = normalize_capacitive(*x_c);
    if (n.flipped) {
      report.add({"REACTANCE_SIGN", "x_c", n.value, *x_c, std::nullopt, Severity::minor,
                  "capacitive reactance must be negative; normalized to " + nlohmann::json(n.value).dump(),
                  "capacitors have negative reactance"});
    }
    x_c = n.value;
  }
  if (cand.x_l && *cand.x_l == 0.0) throw detail::malformed("x_l: reactance must be nonzero (use null for no element)");
  if (x_c && *x_c == 0.0) throw detail::malformed("x_c: reactance must be nonzero (use null for no element)");
  if (x_c && !cand.threshold) throw detail::malformed("threshold: a switched element needs a switching threshold");

  // 2. Exact evaluation
  const auto design = design_from_reactances(problem, cand.x_l, x_c, cand.threshold);
  const auto actual = evaluate(design, problem);
  const std::pair<double, double> abs_range{actual.min_abs_qs, actual.worst_abs_qs};

  // 3. Claimed values
  auto claim_wrong = [&](const std::string& where, const nlohmann::json& expected, const nlohmann::json& claimed,
                         double tol, const std::string& what) {
    report.add({"CLAIM_VALUE_WRONG", where, expected, claimed, tol, Severity::fatal, what, std::nullopt});
  };
  if (cand.worst_abs_qs && !opt.reactive.near(*cand.worst_abs_qs, actual.worst_abs_qs)) {
    claim_wrong("claims.worst_abs_qs", actual.worst_abs_qs, *cand.worst_abs_qs, opt.reactive.abs,
                "the design's worst |Q_s| differs from the claim");
  }
  if (cand.worst_pf && !opt.pf.near(*cand.worst_pf, actual.worst_pf)) {
    claim_wrong("claims.worst_pf", actual.worst_pf, *cand.worst_pf, opt.pf.rel, "the design's worst pf differs from the claim");
  }
  if (cand.qs_range && !(opt.reactive.near(cand.qs_range->first, abs_range.first) &&
                         opt.reactive.near(cand.qs_range->second, abs_range.second))) {
    claim_wrong("claims.qs_range", nlohmann::json::array({abs_range.first, abs_range.second}),
                nlohmann::json::array({cand.qs_range->first, cand.qs_range->second}), opt.reactive.abs,
                "|Q_s| actually ranges over the expected interval");
  }
  if (cand.unity_points) {
    auto claimed = *cand.unity_points;
    std::sort(claimed.begin(), claimed.end());
    bool same = claimed.size() == actual.zero_crossings.size();
    for (std::size_t i = 0; same && i < claimed.size(); ++i) same = opt.reactive.near(claimed[i], actual.zero_crossings[i]);
    if (!same) {
      claim_wrong("claims.unity_points", actual.zero_crossings, claimed, opt.reactive.abs,
                  "unity power factor occurs at different demands");
    }
  }

  // 4. Optimality against the min-max oracle
  const auto oracle = design_minimax(problem);
  const bool optimal = opt.pf.near(actual.worst_pf, oracle.worst_pf) || actual.worst_pf >= oracle.worst_pf;
  report.optimality_gap = optimal ? 0.0 : oracle.worst_pf - actual.worst_pf;
  if (!optimal) {
    std::vector<double> at_ends;
    for (double z : actual.zero_crossings) {
      if (opt.threshold.near(z, problem.q_min) || opt.threshold.near(z, problem.q_max)) at_ends.push_back(z);
    }
    const nlohmann::json expected = {{"unity_points", oracle.unity_points}, {"worst_pf", oracle.worst_pf}};
    if (!at_ends.empty()) {
      report.add({"UNITY_POINTS_AT_EXTREMES", "x_l", expected,
                  {{"unity_points", actual.zero_crossings}, {"worst_pf", actual.worst_pf}}, opt.pf.rel, Severity::fatal,
                  "unity-pf points at the ends of the demand range waste half of each segment's slope",
                  "spacing the unity points at the first and third quarter of the range equalizes the worst case"});
    } else {
      report.add({"SUBOPTIMAL", "worst_pf", oracle.worst_pf, actual.worst_pf, opt.pf.rel, Severity::fatal,
                  "a design with a higher worst-case pf exists", std::nullopt});
    }
  } else if (problem.width() > 0.0) {
    const auto ox_l = oracle.x_l();
    const auto ox_c = oracle.x_c();
    auto reactance_mismatch = [&](const std::optional<double>& a, const std::optional<double>& b) {
      if (a.has_value() != b.has_value()) return true;
      return a && !opt.reactance.near(*a, *b);
    };
    if (reactance_mismatch(cand.x_l, ox_l)) {
      report.add({"REACTANCE_WRONG", "x_l", ox_l ? nlohmann::json(*ox_l) : nlohmann::json(nullptr),
                  cand.x_l ? nlohmann::json(*cand.x_l) : nlohmann::json(nullptr), opt.reactance.rel, Severity::fatal,
                  "fixed element reactance differs from the min-max design", std::nullopt});
    }
    if (reactance_mismatch(x_c, ox_c)) {
      report.add({"REACTANCE_WRONG", "x_c", ox_c ? nlohmann::json(*ox_c) : nlohmann::json(nullptr),
                  x_c ? nlohmann::json(*x_c) : nlohmann::json(nullptr), opt.reactance.rel, Severity::fatal,
                  "switched element reactance differs from the min-max design", std::nullopt});
    }
    if (cand.threshold && oracle.threshold && !opt.threshold.near(*cand.threshold, *oracle.threshold)) {
      report.add({"THRESHOLD_WRONG", "threshold", *oracle.threshold, *cand.threshold, opt.threshold.abs,
                  Severity::fatal, "switching threshold differs from the min-max design", std::nullopt});
    }
  }

  // 5. Labels
  std::vector<detail::LabelCheck> checks;
  for (std::size_t i = 0; i < cand.labels.size(); ++i) {
    const auto& lc = cand.labels[i];
    const std::string where = "claims.labels[" + std::to_string(i) + "]";
    if (lc.q_d < problem.q_min || lc.q_d > problem.q_max) {
      throw detail::malformed(where + ": demand outside the problem range");
    }
    const auto row = qs_at(design, problem, lc.q_d, opt.convention);
    const auto other = qs_at(design, problem, lc.q_d, detail::other(opt.convention));
    checks.push_back({where, lc.label, row.label, other.label});
  }
  detail::emit_label_findings(checks, opt.convention, report);

  // 6. Unsupported optimality claim
  if (cand.optimal.value_or(false) && !optimal) {
    report.add({"FALSE_OPTIMALITY_CLAIM", "claims.optimal", false, true, opt.pf.rel, Severity::fatal,
                "the design is claimed optimal but the min-max design is strictly better",
                "optimality must be shown against the worst case over the whole range"});
  }
  return report;
}

// --------------------------------------------------------------------------
// Multi-period compensation

struct ImpedanceClaim {
  double r = 0.0;
  double x = 0.0;
};

struct ReactanceForQClaim {
  double q_supplied = 0.0;  // MVAr
  double x = 0.0;           // ohms
};

struct ParallelDerivationClaim {
  double x_total = 0.0;
  double x_fixed = 0.0;
  double x_switched = 0.0;
};

struct LoadPfClaim {
  bool unspecified = false;
  double value = 1.0;
  std::optional<PfLabel> label;
};

struct PeriodClaims {
  std::optional<LoadPfClaim> load_pf;
  std::optional<double> apparent_power;  // MVA
  std::optional<ImpedanceClaim> load_impedance;
  std::optional<ReactanceForQClaim> reactance_for_q;
  std::optional<ParallelDerivationClaim> x_cs_derivation;
  std::optional<double> pf;
  std::optional<PfLabel> label;
};

/// Ratings as supplied MVAr (q_cf/q_cs) or as reactances in ohms (x_cf/x_cs).
struct MultiPeriodCandidate {
  std::string provenance;
  std::optional<double> q_cf, q_cs, x_cf, x_cs;
  std::map<std::string, bool> states;
  std::optional<double> worst_pf;
  std::optional<bool> optimal;
  std::map<std::string, PeriodClaims> periods;
};

inline MultiPeriodCandidate parse_multiperiod_candidate(const nlohmann::json& j) {
  detail::check_kind(j, "multi-period");
  MultiPeriodCandidate c;
  c.provenance = detail::optional_or<std::string>(j, "provenance", "", "candidate");
  c.q_cf = detail::optional_number(j, "q_cf", "candidate");
  c.q_cs = detail::optional_number(j, "q_cs", "candidate");
  c.x_cf = detail::optional_number(j, "x_cf", "candidate");
  c.x_cs = detail::optional_number(j, "x_cs", "candidate");
  if ((c.q_cf && c.x_cf) || (c.q_cs && c.x_cs)) {
    throw detail::malformed("give each rating either as q_* (MVAr) or x_* (ohms), not both");
  }
  if (!j.contains("states") || !j.at("states").is_object()) throw detail::malformed("missing 'states' object");
  for (const auto& [name, v] : j.at("states").items()) {
    if (v.is_boolean()) {
      c.states[name] = v.get<bool>();
    } else if (v.is_number_integer() && (v == 0 || v == 1)) {
      c.states[name] = v == 1;
    } else {
      throw detail::malformed("states." + name + " must be a boolean or 0/1");
    }
  }
  if (!j.contains("claims")) return c;
  const auto& cl = j.at("claims");
  c.worst_pf = detail::optional_number(cl, "worst_pf", "claims");
  if (cl.contains("optimal")) c.optimal = detail::required<bool>(cl, "optimal", "claims");
  if (!cl.contains("periods")) return c;
  auto label_of = [](const nlohmann::json& node, const std::string& where) -> std::optional<PfLabel> {
    if (!node.contains("label")) return std::nullopt;
    try {
      return parse_pf_label(detail::required<std::string>(node, "label", where));
    } catch (const InputError& e) {
      if (std::string(e.code()) == "MALFORMED_CANDIDATE") throw;
      throw detail::malformed(where + ": " + e.what());
    }
  };
  for (const auto& [name, p] : cl.at("periods").items()) {
    const std::string where = "claims.periods." + name;
    PeriodClaims pc;
    if (p.contains("load_pf")) {
      const auto& lp = p.at("load_pf");
      LoadPfClaim claim;
      if (lp.is_string()) {
        if (lp != "unspecified") throw detail::malformed(where + ".load_pf: string form must be \"unspecified\"");
        claim.unspecified = true;
      } else {
        claim.value = detail::required<double>(lp, "value", where + ".load_pf");
        claim.label = label_of(lp, where + ".load_pf");
      }
      pc.load_pf = claim;
    }
    pc.apparent_power = detail::optional_number(p, "apparent_power", where);
    if (p.contains("load_impedance")) {
      const auto& z = p.at("load_impedance");
      pc.load_impedance = ImpedanceClaim{detail::required<double>(z, "r", where + ".load_impedance"),
                                         detail::required<double>(z, "x", where + ".load_impedance")};
    }
    if (p.contains("reactance_for_q")) {
      const auto& r = p.at("reactance_for_q");
      pc.reactance_for_q = ReactanceForQClaim{detail::required<double>(r, "q_supplied", where + ".reactance_for_q"),
                                              detail::required<double>(r, "x", where + ".reactance_for_q")};
    }
    if (p.contains("x_cs_derivation")) {
      const auto& d = p.at("x_cs_derivation");
      const std::string dw = where + ".x_cs_derivation";
      pc.x_cs_derivation = ParallelDerivationClaim{detail::required<double>(d, "x_total", dw),
                                                   detail::required<double>(d, "x_fixed", dw),
                                                   detail::required<double>(d, "x_switched", dw)};
    }
    pc.pf = detail::optional_number(p, "pf", where);
    pc.label = label_of(p, where);
    c.periods[name] = pc;
  }
  return c;
}

inline ErrorReport grade_multiperiod(const MultiPeriodCandidate& cand, const MultiPeriodProblem& problem,
                                     const GradeOptions& opt = {}) {
  problem.validate();
  ErrorReport report;
  report.kind = "multi-period";
  report.provenance = cand.provenance;
  const double v = problem.v_rms;

  // Ratings and sign normalization
  auto rating = [&](const std::optional<double>& q, const std::optional<double>& x, const char* xname) -> double {
    if (q) {
      if (*q < 0.0) throw detail::malformed(std::string(xname) + ": supplied MVAr must be >= 0");
      return *q;
    }
    if (!x) return 0.0;
    if (*x == 0.0) throw detail::malformed(std::string(xname) + ": reactance must be nonzero (use null for none)");
    const auto n = normalize_capacitive(*x);
    if (n.flipped) {
      report.add({"REACTANCE_SIGN", xname, n.value, *x, std::nullopt, Severity::minor,
                  "capacitive reactance must be negative; normalized to " + nlohmann::json(n.value).dump(),
                  "capacitors have negative reactance"});
    }
    return supplied_mvar(v, n.value);
  };
  MultiPeriodSolution sol;
  sol.q_cf = rating(cand.q_cf, cand.x_cf, "x_cf");
  sol.q_cs = rating(cand.q_cs, cand.x_cs, "x_cs");
  sol.states.assign(problem.periods.size(), false);
  for (const auto& [name, on] : cand.states) sol.states[problem.index_of(name)] = on;
  if (cand.states.size() != problem.periods.size()) {
    throw detail::malformed("states must list every period exactly once");
  }
  for (const auto& [name, _] : cand.periods) (void)problem.index_of(name);

  const auto actual = evaluate_multiperiod(problem, sol, opt.convention);
  const auto other = evaluate_multiperiod(problem, sol, detail::other(opt.convention));

  std::vector<detail::LabelCheck> labels;
  for (const auto& [name, pc] : cand.periods) {
    const std::size_t i = problem.index_of(name);
    const auto& load = problem.periods[i].load;
    const std::string where = "claims.periods." + name;

    if (pc.load_pf) {
      const auto lpf = power_factor(load);
      const auto lbl = label_pf(lpf, opt.convention);
      const nlohmann::json expected = {{"value", lpf.magnitude}, {"label", detail::label_json(lbl)}};
      const bool wrong = pc.load_pf->unspecified || !opt.pf.near(pc.load_pf->value, lpf.magnitude) ||
                         (pc.load_pf->label && *pc.load_pf->label != lbl);
      if (wrong) {
        report.add({"LOAD_PF_WRONG", where + ".load_pf", expected,
                    pc.load_pf->unspecified ? nlohmann::json("unspecified")
                                            : nlohmann::json{{"value", pc.load_pf->value},
                                                             {"label", pc.load_pf->label ? detail::label_json(*pc.load_pf->label)
                                                                                         : nlohmann::json(nullptr)}},
                    opt.pf.rel, Severity::major, "the load's power factor follows from its complex power",
                    "pf = P / |S|"});
      }
    }
    if (pc.apparent_power && !opt.power.near(*pc.apparent_power, load.apparent())) {
      report.add({"APPARENT_POWER_WRONG", where + ".apparent_power", load.apparent(), *pc.apparent_power, opt.power.rel,
                  Severity::major, "|S| = sqrt(P^2 + Q^2)", std::nullopt});
    }
    if (pc.load_impedance) {
      const auto z = load_impedance(v, load);
      if (!opt.power.near(pc.load_impedance->r, z.r) || !opt.power.near(pc.load_impedance->x, z.x)) {
        report.add({"IMPEDANCE_FORMULA_WRONG", where + ".load_impedance", {{"r", z.r}, {"x", z.x}},
                    {{"r", pc.load_impedance->r}, {"x", pc.load_impedance->x}}, opt.power.rel, Severity::major,
                    "load impedance is |V|^2 / conj(S)", "Z = |V|^2 / S*"});
      }
    }
    if (pc.reactance_for_q) {
      const double q = pc.reactance_for_q->q_supplied;
      if (q == 0.0) throw detail::malformed(where + ".reactance_for_q: q_supplied must be nonzero");
      const double expected = reactance_for_rating(v, -q * 1e6);
      if (!opt.reactance.near(pc.reactance_for_q->x, expected)) {
        report.add({"REACTANCE_FORMULA_WRONG", where + ".reactance_for_q.x", expected, pc.reactance_for_q->x,
                    opt.reactance.rel, Severity::major, "a shunt supplying Q has reactance X = -|V|^2 / Q",
                    "shunt Q = |V|^2 / X in the load convention"});
      }
    }
    if (pc.x_cs_derivation) {
      const auto& d = *pc.x_cs_derivation;
      if (d.x_total == 0.0 || d.x_fixed == 0.0) throw detail::malformed(where + ".x_cs_derivation: zero reactance");
      const double inv = 1.0 / d.x_total - 1.0 / d.x_fixed;
      const std::optional<double> parallel = inv == 0.0 ? std::nullopt : std::optional<double>(1.0 / inv);
      const bool correct = parallel && opt.reactance.near(d.x_switched, *parallel);
      if (!correct) {
        const bool subtracted = opt.reactance.near(d.x_switched, d.x_total - d.x_fixed);
        report.add({subtracted ? "PARALLEL_REACTANCE_ARITHMETIC" : "CLAIM_VALUE_WRONG", where + ".x_cs_derivation.x_switched",
                    parallel ? nlohmann::json(*parallel) : nlohmann::json(nullptr), d.x_switched, opt.reactance.rel,
                    Severity::major,
                    subtracted ? "parallel reactances combine through their reciprocals, not by subtraction"
                               : "switched reactance does not follow from the stated total and fixed reactances",
                    "1/X_total = 1/X_fixed + 1/X_switched"});
      }
    }
    bool pf_ok = true;
    if (pc.pf && !opt.pf.near(*pc.pf, actual.periods[i].pf)) {
      pf_ok = false;
      const double q_without_fixed = load.q - (sol.states[i] ? sol.q_cs : 0.0);
      const double pf_without_fixed = pf_from_ratio(std::abs(q_without_fixed) / load.p);
      if (sol.q_cf > 0.0 && opt.pf.near(*pc.pf, pf_without_fixed)) {
        report.add({"IGNORED_FIXED_ELEMENT", where + ".pf", actual.periods[i].pf, *pc.pf, opt.pf.rel, Severity::major,
                    "the claimed pf ignores the fixed capacitor, which is always connected",
                    "the fixed capacitor shifts the pf in every period"});
      } else {
        report.add({"CLAIM_VALUE_WRONG", where + ".pf", actual.periods[i].pf, *pc.pf, opt.pf.rel, Severity::fatal,
                    "the period's source pf differs from the claim", std::nullopt});
      }
    }
    if (pc.label && pf_ok) {
      labels.push_back({where + ".label", *pc.label, actual.periods[i].label, other.periods[i].label});
    }
  }

  if (cand.worst_pf && !opt.pf.near(*cand.worst_pf, actual.worst_pf)) {
    report.add({"CLAIM_VALUE_WRONG", "claims.worst_pf", actual.worst_pf, *cand.worst_pf, opt.pf.rel, Severity::fatal,
                "the smallest pf across periods differs from the claim", std::nullopt});
  }
  detail::emit_label_findings(labels, opt.convention, report);

  const auto oracle = grid_search(problem, opt.cf_grid, opt.cs_grid);
  const bool optimal = opt.pf.near(actual.worst_pf, oracle.worst_pf) || actual.worst_pf >= oracle.worst_pf;
  report.optimality_gap = optimal ? 0.0 : oracle.worst_pf - actual.worst_pf;
  if (!optimal) {
    report.add({"SUBOPTIMAL", "worst_pf", oracle.worst_pf, actual.worst_pf, opt.pf.rel, Severity::fatal,
                "ratings and switch states with a higher worst-case pf exist", std::nullopt});
  }
  if (cand.optimal.value_or(false) && !optimal) {
    report.add({"FALSE_OPTIMALITY_CLAIM", "claims.optimal", false, true, opt.pf.rel, Severity::fatal,
                "the solution is claimed optimal but a strictly better one exists", std::nullopt});
  }
  return report;
}

// --------------------------------------------------------------------------
// Power-flow formulation

inline ErrorReport grade_powerflow(const FormulationDocument& doc, const Network& network, const GradeOptions& opt = {}) {
  ErrorReport report;
  report.kind = "powerflow-formulation";
  report.provenance = doc.provenance;
  for (auto& f : lint_formulation(doc, network)) report.add(std::move(f));

  if (!doc.machine_readable()) {
    report.add({"PARTIAL_GRADE", "equations", "machine-readable equations", "free text or missing", std::nullopt,
                Severity::minor, "only structural checks were run; residuals were not evaluated", std::nullopt});
    return report;
  }

  const auto ybus = build_ybus(network.branches, network.size());
  const auto f = assemble_formulation(network, ybus);
  const auto sol = solve_newton(f, f.flat_start(), opt.newton);
  if (!sol.converged) throw SolverError("NON_CONVERGENCE", "reference power flow did not converge");
  const auto res = document_residuals(doc, sol);
  for (std::size_t n = 0; n < res.size(); ++n) {
    if (std::abs(res[n]) > opt.residual) {
      report.add({"RESIDUAL_NONZERO_AT_SOLUTION", "equations[" + std::to_string(n) + "]", 0.0, res[n], opt.residual,
                  Severity::fatal, "the equation is not satisfied at the true operating point", std::nullopt});
    }
  }
  return report;
}

inline ErrorReport grade_powerflow(const nlohmann::json& candidate, const Network& network, const GradeOptions& opt = {}) {
  detail::check_kind(candidate, "powerflow-formulation");
  return grade_powerflow(parse_formulation_document(candidate), network, opt);
}

}  // namespace varcomp

#endif  // VARCOMP_GRADER_HPP
