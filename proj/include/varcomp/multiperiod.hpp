#ifndef VARCOMP_MULTIPERIOD_HPP
#define VARCOMP_MULTIPERIOD_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "varcomp/ac_quantities.hpp"
#include "varcomp/error.hpp"

namespace varcomp {

struct LoadPeriod {
  std::string name;
  ComplexPower load;  // MW / MVAr
};

/// One load per period, compensated by a fixed capacitor that is always in
/// and a switched capacitor that may be connected per period.
struct MultiPeriodProblem {
  double v_rms = 0.0;
  double f = 60.0;
  std::vector<LoadPeriod> periods;

  void validate() const {
    if (!(v_rms > 0.0)) throw InputError("BAD_VOLTAGE", "v_rms must be positive");
    if (!(f > 0.0)) throw InputError("BAD_FREQUENCY", "frequency must be positive");
    if (periods.empty()) throw InputError("NO_PERIODS", "at least one load period is required");
    std::set<std::string> names;
    for (const auto& period : periods) {
      if (!(period.load.p > 0.0)) {
        throw InputError("BAD_ACTIVE_POWER", "period '" + period.name + "' must draw positive real power");
      }
      if (!names.insert(period.name).second) {
        throw InputError("DUPLICATE_PERIOD", "duplicate period name '" + period.name + "'");
      }
    }
    if (periods.size() > 20) throw InputError("TOO_MANY_PERIODS", "state enumeration is limited to 20 periods");
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < periods.size(); ++i) {
      if (periods[i].name == name) return i;
    }
    throw InputError("UNKNOWN_PERIOD", "no period named '" + name + "'");
  }
};

/// Ratings are supplied MVAr (>= 0). `states[i]` refers to
/// `problem.periods[i]`.
struct MultiPeriodSolution {
  double q_cf = 0.0;
  double q_cs = 0.0;
  std::vector<bool> states;
  double worst_ratio = 0.0;
  double worst_pf = 1.0;
  std::optional<std::pair<double, double>> band;
  std::optional<double> midband_q_cs;  // switched rating nulling the switched period's Q
};

/// Scan range of one rating: 0, step, 2 step, ..., up to max.
struct GridSpec {
  double max = 0.0;
  double step = 0.0;

  /// Grid values are formed as i / (1/step) when 1/step is integral, which
  /// keeps decimal steps such as 0.01 exact at the grid points.
  std::vector<double> values() const {
    if (!(step > 0.0) || !std::isfinite(step) || !(max >= 0.0)) {
      throw InputError("EMPTY_GRID", "grid needs a positive step and non-negative max");
    }
    const double inv = 1.0 / step;
    const bool integral_inverse = std::abs(inv - std::round(inv)) < 1e-9 * inv;
    const long n = static_cast<long>(std::floor(max / step + 1e-9));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n + 1));
    for (long i = 0; i <= n; ++i) {
      out.push_back(integral_inverse ? static_cast<double>(i) / std::round(inv) : static_cast<double>(i) * step);
    }
    return out;
  }
};

inline GridSpec default_cf_grid() { return {5.0, 0.01}; }
inline GridSpec default_cs_grid() { return {30.0, 0.1}; }

inline void check_states(const MultiPeriodProblem& problem, const std::vector<bool>& states) {
  if (states.size() != problem.periods.size()) {
    throw InputError("STATE_COUNT", "one switch state per period is required");
  }
}

/// max_i |Q_i - q_cf - s_i q_cs| / P_i
inline double worst_ratio(const MultiPeriodProblem& problem, double q_cf, double q_cs, const std::vector<bool>& states) {
  check_states(problem, states);
  if (q_cf < 0.0 || q_cs < 0.0) throw InputError("NEGATIVE_RATING", "capacitor ratings are supplied MVAr >= 0");
  double worst = 0.0;
  for (std::size_t i = 0; i < problem.periods.size(); ++i) {
    const auto& load = problem.periods[i].load;
    const double net = load.q - q_cf - (states[i] ? q_cs : 0.0);
    worst = std::max(worst, std::abs(net) / load.p);
  }
  return worst;
}

inline std::vector<std::size_t> name_order(const MultiPeriodProblem& problem) {
  std::vector<std::size_t> order(problem.periods.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return problem.periods[a].name < problem.periods[b].name; });
  return order;
}

/// Exhaustive search over every switch-state vector and both rating grids.
/// Scan order: states as a binary counter over name-sorted periods (first
/// name is the most significant bit), then q_cf, then q_cs, all ascending;
/// only strict improvements replace the incumbent.
inline MultiPeriodSolution grid_search(const MultiPeriodProblem& problem, const GridSpec& cf_grid = default_cf_grid(),
                                       const GridSpec& cs_grid = default_cs_grid()) {
  problem.validate();
  const auto cf_values = cf_grid.values();
  const auto cs_values = cs_grid.values();
  const auto order = name_order(problem);
  const std::size_t n = problem.periods.size();

  std::vector<double> q(n), p_load(n);
  for (std::size_t i = 0; i < n; ++i) {
    q[i] = problem.periods[i].load.q;
    p_load[i] = problem.periods[i].load.p;
  }

  bool found = false;
  double best = 0.0;
  MultiPeriodSolution out;
  std::vector<bool> states(n);
  for (unsigned long counter = 0; counter < (1UL << n); ++counter) {
    for (std::size_t bit = 0; bit < n; ++bit) {
      states[order[bit]] = (counter >> (n - 1 - bit)) & 1UL;
    }
    for (double x : cf_values) {
      for (double y : cs_values) {
        double r = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          r = std::max(r, std::abs(q[i] - x - (states[i] ? y : 0.0)) / p_load[i]);
        }
        if (!found || r < best) {
          found = true;
          best = r;
          out.q_cf = x;
          out.q_cs = y;
          out.states = states;
        }
      }
    }
  }
  out.worst_ratio = best;
  out.worst_pf = pf_from_ratio(best);
  return out;
}

/// Switched ratings that keep the single switched period within
/// `target_ratio`: [Q_a - q_cf - r P_a, Q_a - q_cf + r P_a] clipped at 0.
inline std::pair<double, double> optimal_band(const MultiPeriodProblem& problem, double q_cf,
                                              const std::vector<bool>& states, double target_ratio) {
  problem.validate();
  check_states(problem, states);
  if (std::count(states.begin(), states.end(), true) != 1) {
    throw InputError("BAND_SCOPE", "band computation needs exactly one switched period");
  }
  if (!(target_ratio >= 0.0)) throw InputError("BAD_TARGET", "target ratio must be non-negative");
  const std::size_t a = static_cast<std::size_t>(std::find(states.begin(), states.end(), true) - states.begin());
  for (std::size_t i = 0; i < problem.periods.size(); ++i) {
    if (i == a) continue;
    const auto& load = problem.periods[i].load;
    if (std::abs(load.q - q_cf) / load.p > target_ratio * (1.0 + 1e-12)) {
      throw InputError("TARGET_UNREACHABLE", "an unswitched period already exceeds the target ratio");
    }
  }
  const auto& load = problem.periods[a].load;
  const double center = load.q - q_cf;
  const double lo = std::max(0.0, center - target_ratio * load.p);
  const double hi = center + target_ratio * load.p;
  if (hi < lo) throw InputError("TARGET_UNREACHABLE", "no non-negative switched rating reaches the target ratio");
  return {lo, hi};
}

/// Attaches the optimal band (at the solution's own worst ratio) and the
/// mid-band alternative when exactly one period is switched.
inline void attach_band(const MultiPeriodProblem& problem, MultiPeriodSolution& s) {
  const auto band = optimal_band(problem, s.q_cf, s.states, s.worst_ratio);
  s.band = band;
  const std::size_t a = static_cast<std::size_t>(std::find(s.states.begin(), s.states.end(), true) - s.states.begin());
  s.midband_q_cs = std::clamp(problem.periods[a].load.q - s.q_cf, band.first, band.second);
}

struct PeriodReport {
  std::string name;
  ComplexPower net;  // source side
  double pf = 1.0;
  PfLabel label = PfLabel::unity;
};

struct MultiPeriodEvaluation {
  std::vector<PeriodReport> periods;
  double worst_pf = 1.0;
  double worst_ratio = 0.0;
};

inline MultiPeriodEvaluation evaluate_multiperiod(const MultiPeriodProblem& problem, const MultiPeriodSolution& s,
                                                  LabelConvention convention = LabelConvention::paper) {
  problem.validate();
  check_states(problem, s.states);
  MultiPeriodEvaluation out;
  out.worst_pf = 1.0;
  for (std::size_t i = 0; i < problem.periods.size(); ++i) {
    const auto& period = problem.periods[i];
    PeriodReport r;
    r.name = period.name;
    r.net = {period.load.p, period.load.q - s.q_cf - (s.states[i] ? s.q_cs : 0.0), period.load.scale, Role::source};
    const auto pf = power_factor(r.net);
    r.pf = pf.magnitude;
    r.label = label_pf(pf, convention);
    out.worst_pf = std::min(out.worst_pf, r.pf);
    out.periods.push_back(r);
  }
  out.worst_ratio = worst_ratio(problem, s.q_cf, s.q_cs, s.states);
  return out;
}

/// Supplied MVAr of a capacitor with reactance `x` (ohms, negative) at `v_rms`.
inline double supplied_mvar(double v_rms, double x) { return -v_rms * v_rms / x / 1e6; }

}  // namespace varcomp

#endif  // VARCOMP_MULTIPERIOD_HPP
