#ifndef VARCOMP_SWITCHED_COMPENSATION_HPP
#define VARCOMP_SWITCHED_COMPENSATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "varcomp/ac_quantities.hpp"
#include "varcomp/error.hpp"

namespace varcomp {

/// A load with constant active demand whose reactive demand sweeps
/// continuously over [q_min, q_max], fed from a fixed-voltage source.
struct CompensationProblem {
  double v_rms = 0.0;  // V
  double f = 0.0;      // Hz
  double p_d = 0.0;    // W
  double q_min = 0.0;  // VAr
  double q_max = 0.0;  // VAr

  double width() const { return q_max - q_min; }

  void validate() const {
    if (!(v_rms > 0.0)) throw InputError("BAD_VOLTAGE", "v_rms must be positive");
    if (!(f > 0.0)) throw InputError("BAD_FREQUENCY", "frequency must be positive");
    if (!(p_d > 0.0)) throw InputError("BAD_ACTIVE_POWER", "p_d must be positive");
    if (!std::isfinite(q_min) || !std::isfinite(q_max) || q_min > q_max) {
      throw InputError("BAD_RANGE", "reactive demand range must satisfy q_min <= q_max");
    }
  }
};

enum class SwitchState { open, closed };

inline std::string_view to_string(SwitchState s) { return s == SwitchState::open ? "open" : "closed"; }

/// A fixed shunt element plus a switched one. Ratings are the reactive power
/// each element draws at nominal voltage (load convention); reactances are
/// derived from them. The switch closes for demands strictly above
/// `threshold`.
struct DesignSolution {
  double v_rms = 0.0;
  double q_l = 0.0;  // fixed element rating, VAr
  double q_c = 0.0;  // switched element rating, VAr
  std::optional<double> threshold;
  std::vector<double> unity_points;
  double worst_abs_qs = 0.0;
  double worst_pf = 1.0;

  ShuntElement fixed() const { return ShuntElement::from_rating(v_rms, q_l); }
  ShuntElement switched() const { return ShuntElement::from_rating(v_rms, q_c); }
  std::optional<double> x_l() const { return fixed().reactance(); }
  std::optional<double> x_c() const { return switched().reactance(); }
};

struct SegmentExtremes {
  SwitchState state = SwitchState::open;
  double lo = 0.0;
  double hi = 0.0;
  bool lo_included = true;  // the closed segment starts just above the threshold
  double qs_lo = 0.0;
  double qs_hi = 0.0;
  double min_abs = 0.0;
  double max_abs = 0.0;
};

struct EvaluationReport {
  double worst_abs_qs = 0.0;
  double worst_pf = 1.0;
  std::vector<double> argmax_qd;
  std::vector<SegmentExtremes> segments;
  std::vector<double> zero_crossings;
  double min_abs_qs = 0.0;
  double min_qs = 0.0;
  double max_qs = 0.0;
};

namespace detail {

inline double effective_threshold(double q_c, const std::optional<double>& threshold) {
  if (std::abs(q_c) < kAbsentRating) return std::numeric_limits<double>::infinity();
  return *threshold;
}

/// Supremum of |Q_s| over the range, treating the closed segment's open end
/// at the threshold as attained (its limit value).
inline double sup_abs_qs(double q_l, double q_c, double t, double q_min, double q_max) {
  double worst = 0.0;
  if (t >= q_min) {
    worst = std::max(std::abs(q_min + q_l), std::abs(std::min(t, q_max) + q_l));
  }
  if (t < q_max) {
    const double closed_offset = q_l + q_c;
    worst = std::max({worst, std::abs(std::max(t, q_min) + closed_offset), std::abs(q_max + closed_offset)});
  }
  return worst;
}

inline void push_unique(std::vector<double>& values, double v, double tol) {
  for (double existing : values) {
    if (std::abs(existing - v) <= tol) return;
  }
  values.push_back(v);
}

}  // namespace detail

/// Exact piecewise-linear worst case of a candidate design over the
/// problem's demand range.
inline EvaluationReport evaluate(const DesignSolution& candidate, const CompensationProblem& problem) {
  problem.validate();
  const bool has_switched = std::abs(candidate.q_c) >= kAbsentRating;
  if (has_switched && !candidate.threshold) {
    throw InputError("MISSING_THRESHOLD", "a switched element needs a switching threshold");
  }
  if (candidate.threshold && !std::isfinite(*candidate.threshold)) {
    throw InputError("MISSING_THRESHOLD", "threshold must be finite");
  }
  const double t = detail::effective_threshold(candidate.q_c, candidate.threshold);

  EvaluationReport report;
  auto add_segment = [&](SwitchState state, double lo, double hi, bool lo_included) {
    const double offset = candidate.q_l + (state == SwitchState::closed ? candidate.q_c : 0.0);
    SegmentExtremes seg{state, lo, hi, lo_included, lo + offset, hi + offset, 0.0, 0.0};
    seg.max_abs = std::max(std::abs(seg.qs_lo), std::abs(seg.qs_hi));
    const double zero = -offset;
    const bool crosses = zero <= hi && (lo_included ? zero >= lo : zero > lo);
    seg.min_abs = crosses ? 0.0 : std::min(std::abs(seg.qs_lo), std::abs(seg.qs_hi));
    if (crosses) report.zero_crossings.push_back(zero);
    report.segments.push_back(seg);
  };

  if (t >= problem.q_min) add_segment(SwitchState::open, problem.q_min, std::min(t, problem.q_max), true);
  if (t < problem.q_max) {
    const bool starts_inside = t >= problem.q_min;
    add_segment(SwitchState::closed, starts_inside ? t : problem.q_min, problem.q_max, !starts_inside);
  }

  report.worst_abs_qs = 0.0;
  report.min_abs_qs = std::numeric_limits<double>::infinity();
  report.min_qs = std::numeric_limits<double>::infinity();
  report.max_qs = -std::numeric_limits<double>::infinity();
  for (const auto& seg : report.segments) {
    report.worst_abs_qs = std::max(report.worst_abs_qs, seg.max_abs);
    report.min_abs_qs = std::min(report.min_abs_qs, seg.min_abs);
    report.min_qs = std::min({report.min_qs, seg.qs_lo, seg.qs_hi});
    report.max_qs = std::max({report.max_qs, seg.qs_lo, seg.qs_hi});
  }

  const double tie = 1e-9 * std::max(1.0, report.worst_abs_qs);
  for (const auto& seg : report.segments) {
    if (std::abs(seg.qs_lo) >= report.worst_abs_qs - tie) detail::push_unique(report.argmax_qd, seg.lo, 1e-9);
    if (std::abs(seg.qs_hi) >= report.worst_abs_qs - tie) detail::push_unique(report.argmax_qd, seg.hi, 1e-9);
  }
  std::sort(report.argmax_qd.begin(), report.argmax_qd.end());
  std::sort(report.zero_crossings.begin(), report.zero_crossings.end());
  report.worst_pf = pf_from_ratio(report.worst_abs_qs / problem.p_d);
  return report;
}

/// Builds a design from element reactances (absent = no element) and fills
/// in its metrics by exact evaluation.
inline DesignSolution design_from_reactances(const CompensationProblem& problem, std::optional<double> x_l,
                                             std::optional<double> x_c, std::optional<double> threshold) {
  problem.validate();
  DesignSolution s;
  s.v_rms = problem.v_rms;
  s.q_l = x_l ? shunt_reactive_power(problem.v_rms, ShuntElement::from_reactance(*x_l)) : 0.0;
  s.q_c = x_c ? shunt_reactive_power(problem.v_rms, ShuntElement::from_reactance(*x_c)) : 0.0;
  s.threshold = threshold;
  const auto report = evaluate(s, problem);
  s.unity_points = report.zero_crossings;
  s.worst_abs_qs = report.worst_abs_qs;
  s.worst_pf = report.worst_pf;
  return s;
}

/// Min-max design: the two unity-pf points sit at the first and third
/// quarter of the demand range, the switch closes at the midpoint, and
/// |Q_s| equioscillates at W/4.
inline DesignSolution design_minimax(const CompensationProblem& problem) {
  problem.validate();
  const double w = problem.width();

  DesignSolution s;
  s.v_rms = problem.v_rms;
  if (w == 0.0) {
    s.q_l = -problem.q_min;
    if (std::abs(s.q_l) < kAbsentRating) s.q_l = 0.0;
    s.unity_points = {problem.q_min};
    s.worst_abs_qs = 0.0;
    s.worst_pf = 1.0;
    return s;
  }

  const double q1 = problem.q_min + w / 4.0;
  const double q2 = problem.q_min + 3.0 * w / 4.0;
  s.q_l = -q1;
  s.q_c = -(q2 + s.q_l);
  if (std::abs(s.q_l) < kAbsentRating) s.q_l = 0.0;
  s.threshold = (q1 + q2) / 2.0;
  s.unity_points = {q1, q2};
  s.worst_abs_qs = w / 4.0;
  s.worst_pf = pf_from_ratio(s.worst_abs_qs / problem.p_d);
  return s;
}

struct ProfileRow {
  double q_d = 0.0;
  SwitchState state = SwitchState::open;
  double q_s = 0.0;
  double pf = 1.0;
  PfLabel label = PfLabel::unity;
};

inline void check_voltage_consistency(const DesignSolution& s, const CompensationProblem& problem) {
  if (!Tolerance{0.0, 1e-9}.near(s.v_rms, problem.v_rms)) {
    throw InputError("VOLTAGE_MISMATCH", "solution ratings were computed at a different voltage");
  }
}

/// Source-side operating point at one demand value. Demands outside the
/// problem range are rejected.
inline ProfileRow qs_at(const DesignSolution& s, const CompensationProblem& problem, double q_d,
                        LabelConvention convention = LabelConvention::paper) {
  if (q_d < problem.q_min || q_d > problem.q_max) {
    throw InputError("OUT_OF_RANGE", "demand outside the problem's reactive range");
  }
  const double t = detail::effective_threshold(s.q_c, s.threshold);
  ProfileRow row;
  row.q_d = q_d;
  row.state = q_d <= t ? SwitchState::open : SwitchState::closed;
  row.q_s = q_d + s.q_l + (row.state == SwitchState::closed ? s.q_c : 0.0);
  const auto pf = power_factor({problem.p_d, row.q_s, UnitScale::base, Role::source});
  row.pf = pf.magnitude;
  row.label = label_pf(pf, convention);
  return row;
}

inline std::vector<ProfileRow> qs_profile(const DesignSolution& s, const CompensationProblem& problem,
                                          std::size_t n_samples,
                                          LabelConvention convention = LabelConvention::paper) {
  problem.validate();
  if (n_samples < 2) throw InputError("BAD_SAMPLE_COUNT", "profile needs at least two samples");
  check_voltage_consistency(s, problem);
  if (std::abs(s.q_c) >= kAbsentRating && !s.threshold) {
    throw InputError("MISSING_THRESHOLD", "a switched element needs a switching threshold");
  }
  std::vector<ProfileRow> rows;
  rows.reserve(n_samples);
  const double step = problem.width() / static_cast<double>(n_samples - 1);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double q_d = i + 1 == n_samples ? problem.q_max : problem.q_min + step * static_cast<double>(i);
    rows.push_back(qs_at(s, problem, q_d, convention));
  }
  return rows;
}

struct BruteForceOptions {
  double grid_step = 1.0;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Exhaustive grid search over fixed rating, switched (capacitive) rating
/// and threshold. The winner minimizes the worst |Q_s|; ties go to the
/// smallest (|Q_C|, |Q_L|, threshold). The result does not depend on the
/// thread count.
inline DesignSolution brute_force_design(const CompensationProblem& problem, const BruteForceOptions& options) {
  problem.validate();
  const double step = options.grid_step;
  if (!(step > 0.0) || !std::isfinite(step)) throw InputError("BAD_GRID_STEP", "grid step must be positive");

  const double w = problem.width();
  // Q_L spans [-q_max - W, -q_min + W], anchored on -q_min.
  const long ql_lo = -static_cast<long>(std::ceil(2.0 * w / step - 1e-9));
  const long ql_hi = static_cast<long>(std::floor(w / step + 1e-9));
  const long qc_n = static_cast<long>(std::floor(2.0 * w / step + 1e-9)) + 1;
  std::vector<double> thresholds;
  for (long k = 0;; ++k) {
    const double t = problem.q_min + static_cast<double>(k) * step;
    if (t > problem.q_max + 1e-9 * std::max(1.0, std::abs(problem.q_max))) break;
    thresholds.push_back(std::min(t, problem.q_max));
  }
  if (thresholds.back() < problem.q_max) thresholds.push_back(problem.q_max);

  const double points = static_cast<double>(ql_hi - ql_lo + 1) * static_cast<double>(qc_n) *
                        static_cast<double>(thresholds.size());
  if (points > 5e9) throw InputError("GRID_TOO_LARGE", "brute-force grid exceeds 5e9 points");

  using Key = std::tuple<std::int64_t, long, double, double, double>;
  struct Best {
    bool found = false;
    Key key{};
    double q_l = 0.0, q_c = 0.0, t = 0.0;
  };

  auto scan = [&](long kc_begin, long kc_end, Best& best) {
    for (long kc = kc_begin; kc < kc_end; ++kc) {
      const double q_c = -static_cast<double>(kc) * step;
      for (long kl = ql_lo; kl <= ql_hi; ++kl) {
        const double q_l = -problem.q_min + static_cast<double>(kl) * step;
        // Without a switched element the threshold is irrelevant.
        const std::size_t n_t = kc == 0 ? 1 : thresholds.size();
        for (std::size_t it = 0; it < n_t; ++it) {
          const double t = kc == 0 ? std::numeric_limits<double>::infinity() : thresholds[it];
          const double worst = detail::sup_abs_qs(q_l, q_c, t, problem.q_min, problem.q_max);
          const Key key{std::llround(worst * 1e9), kc, std::abs(q_l), kc == 0 ? 0.0 : t, q_l};
          if (!best.found || key < best.key) {
            best = {true, key, q_l, q_c, t};
          }
        }
      }
    }
  };

  unsigned n_threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  n_threads = static_cast<unsigned>(std::min<long>(n_threads, qc_n));
  std::vector<Best> partial(n_threads);
  {
    std::vector<std::jthread> workers;
    const long chunk = (qc_n + n_threads - 1) / n_threads;
    for (unsigned i = 0; i < n_threads; ++i) {
      const long begin = static_cast<long>(i) * chunk;
      const long end = std::min(qc_n, begin + chunk);
      workers.emplace_back([&, i, begin, end] { scan(begin, end, partial[i]); });
    }
  }
  Best best;
  for (const auto& b : partial) {
    if (b.found && (!best.found || b.key < best.key)) best = b;
  }

  DesignSolution s;
  s.v_rms = problem.v_rms;
  s.q_l = std::abs(best.q_l) < kAbsentRating ? 0.0 : best.q_l;
  s.q_c = std::abs(best.q_c) < kAbsentRating ? 0.0 : best.q_c;
  if (s.q_c != 0.0) s.threshold = best.t;
  const auto report = evaluate(s, problem);
  s.unity_points = report.zero_crossings;
  s.worst_abs_qs = report.worst_abs_qs;
  s.worst_pf = report.worst_pf;
  return s;
}

}  // namespace varcomp

#endif  // VARCOMP_SWITCHED_COMPENSATION_HPP
