#ifndef VARCOMP_POWERFLOW_HPP
#define VARCOMP_POWERFLOW_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "varcomp/error.hpp"

namespace varcomp {

// Everything in this header is per-unit. Injections follow the
// consumption-negative convention: a load drawing 1.5 pu enters as p_inj = -1.5.

enum class BusType { reference, voltage_controlled, pq, slack_member };

inline std::string_view to_string(BusType t) {
  switch (t) {
    case BusType::reference: return "reference";
    case BusType::voltage_controlled: return "voltage-controlled";
    case BusType::pq: return "pq";
    case BusType::slack_member: return "distributed-slack-member";
  }
  return "pq";
}

inline BusType parse_bus_type(std::string_view s) {
  if (s == "reference" || s == "slack") return BusType::reference;
  if (s == "voltage-controlled" || s == "pv") return BusType::voltage_controlled;
  if (s == "pq") return BusType::pq;
  if (s == "distributed-slack-member") return BusType::slack_member;
  throw InputError("BAD_BUS_TYPE", "unknown bus type '" + std::string(s) + "'");
}

struct Bus {
  int id = 0;
  BusType type = BusType::pq;
  std::optional<double> v_set;
  std::optional<double> p_inj;
  std::optional<double> q_inj;
  std::optional<double> participation;

  bool in_slack_group() const {
    return type == BusType::slack_member || (type == BusType::reference && participation.has_value());
  }
};

struct Branch {
  int from = 0;
  int to = 0;
  double r = 0.0;
  double x = 0.0;

  std::complex<double> admittance() const { return 1.0 / std::complex<double>(r, x); }
};

/// Bus ids are 1..n; `buses[i]` is bus i + 1.
struct Network {
  std::vector<Bus> buses;
  std::vector<Branch> branches;

  int size() const { return static_cast<int>(buses.size()); }
  const Bus& bus(int id) const { return buses.at(static_cast<std::size_t>(id - 1)); }

  int reference_id() const {
    for (const auto& b : buses) {
      if (b.type == BusType::reference) return b.id;
    }
    throw InputError("NO_REFERENCE", "network has no reference bus");
  }

  void validate() const {
    if (buses.empty()) throw InputError("EMPTY_NETWORK", "network has no buses");
    int references = 0;
    bool members = false;
    for (std::size_t i = 0; i < buses.size(); ++i) {
      const auto& b = buses[i];
      const std::string where = "bus " + std::to_string(b.id);
      if (b.id != static_cast<int>(i) + 1) throw InputError("BAD_BUS_ID", "bus ids must be 1..n in order");
      switch (b.type) {
        case BusType::reference:
          ++references;
          if (!b.v_set) throw InputError("MISSING_V_SET", where + ": reference bus needs v_set");
          break;
        case BusType::voltage_controlled:
          if (!b.v_set || !b.p_inj) throw InputError("MISSING_SETPOINT", where + ": voltage-controlled bus needs v_set and p_inj");
          break;
        case BusType::pq:
          if (!b.p_inj || !b.q_inj) throw InputError("PQ_MISSING_INJECTION", where + ": pq bus needs p_inj and q_inj");
          break;
        case BusType::slack_member:
          members = true;
          if (!b.v_set) throw InputError("MISSING_V_SET", where + ": distributed-slack member needs v_set");
          if (!b.participation) throw InputError("MISSING_PARTICIPATION", where + ": distributed-slack member needs a participation weight");
          break;
      }
      if (b.participation && !(*b.participation > 0.0)) {
        throw InputError("BAD_PARTICIPATION", where + ": participation weight must be positive");
      }
      if (b.v_set && !(*b.v_set > 0.0)) throw InputError("BAD_V_SET", where + ": v_set must be positive");
    }
    if (references == 0) throw InputError("NO_REFERENCE", "network has no reference bus");
    if (references > 1) throw InputError("MULTIPLE_REFERENCES", "network has more than one reference bus");
    if (members && !bus(reference_id()).participation) {
      throw InputError("SLACK_GROUP_WITHOUT_REFERENCE",
                       "the reference bus must carry a participation weight when distributed-slack members exist");
    }
    for (const auto& br : branches) {
      if (br.from < 1 || br.from > size() || br.to < 1 || br.to > size()) {
        throw InputError("BUS_OUT_OF_RANGE", "branch endpoint outside 1..n");
      }
      if (br.from == br.to) throw InputError("SELF_LOOP", "branch must join two different buses");
      if (br.r == 0.0 && br.x == 0.0) throw InputError("ZERO_IMPEDANCE", "branch impedance must be nonzero");
    }
  }
};

struct YBus {
  int n = 0;
  Eigen::MatrixXd g;
  Eigen::MatrixXd b;

  std::complex<double> at(int i, int k) const { return {g(i, k), b(i, k)}; }
};

/// Series-admittance bus matrix; indices in `branches` are 1-based.
/// Parallel branches accumulate.
inline YBus build_ybus(const std::vector<Branch>& branches, int n) {
  if (n < 1) throw InputError("EMPTY_NETWORK", "bus count must be positive");
  YBus y{n, Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (const auto& br : branches) {
    if (br.from < 1 || br.from > n || br.to < 1 || br.to > n) {
      throw InputError("BUS_OUT_OF_RANGE", "branch endpoint outside 1..n");
    }
    if (br.from == br.to) throw InputError("SELF_LOOP", "branch must join two different buses");
    if (br.r == 0.0 && br.x == 0.0) throw InputError("ZERO_IMPEDANCE", "branch impedance must be nonzero");
    const auto a = br.admittance();
    const int i = br.from - 1;
    const int k = br.to - 1;
    y.g(i, i) += a.real();
    y.b(i, i) += a.imag();
    y.g(k, k) += a.real();
    y.b(k, k) += a.imag();
    y.g(i, k) -= a.real();
    y.b(i, k) -= a.imag();
    y.g(k, i) -= a.real();
    y.b(k, i) -= a.imag();
  }
  return y;
}

/// P_i = V_i sum_k V_k (G_ik cos th_ik + B_ik sin th_ik)
/// Q_i = V_i sum_k V_k (G_ik sin th_ik - B_ik cos th_ik)
inline void bus_injections(const YBus& y, const Eigen::VectorXd& v, const Eigen::VectorXd& theta, Eigen::VectorXd& p,
                           Eigen::VectorXd& q) {
  p = Eigen::VectorXd::Zero(y.n);
  q = Eigen::VectorXd::Zero(y.n);
  for (int i = 0; i < y.n; ++i) {
    for (int k = 0; k < y.n; ++k) {
      const double d = theta(i) - theta(k);
      const double c = std::cos(d);
      const double s = std::sin(d);
      p(i) += v(i) * v(k) * (y.g(i, k) * c + y.b(i, k) * s);
      q(i) += v(i) * v(k) * (y.g(i, k) * s - y.b(i, k) * c);
    }
  }
}

enum class VariableKind { angle, magnitude, slack };

struct Variable {
  VariableKind kind = VariableKind::angle;
  int bus = 0;  // unused for the slack share

  std::string name() const {
    switch (kind) {
      case VariableKind::angle: return "theta" + std::to_string(bus);
      case VariableKind::magnitude: return "V" + std::to_string(bus);
      case VariableKind::slack: return "p";
    }
    return "?";
  }
};

enum class BalanceKind { active, reactive };

struct ResidualRow {
  BalanceKind kind = BalanceKind::active;
  int bus = 0;
};

/// Operating point decoded from a variable vector.
struct BusState {
  Eigen::VectorXd v;
  Eigen::VectorXd theta;
  double slack = 0.0;
};

/// Variables: angles of non-reference buses, magnitudes of pq buses and,
/// when a distributed-slack group exists, one shared slack power p.
/// Residuals: active balance at every bus whose P is specified or tied to
/// p, reactive balance at pq buses. Each slack-group bus injects w_i p
/// (weights normalized to sum 1) plus any local p_inj.
class Formulation {
 public:
  Network network;
  YBus ybus;
  std::vector<Variable> variables;
  std::vector<ResidualRow> residuals;
  std::vector<double> weights;  // per bus, zero outside the slack group
  bool distributed = false;

  int n_vars() const { return static_cast<int>(variables.size()); }
  int n_eqs() const { return static_cast<int>(residuals.size()); }

  BusState unpack(const Eigen::VectorXd& x) const {
    if (x.size() != n_vars()) throw InputError("BAD_STATE_LENGTH", "state vector length differs from variable count");
    for (int i = 0; i < x.size(); ++i) {
      if (!std::isfinite(x(i))) throw InputError("NON_FINITE_STATE", "state vector has non-finite entries");
    }
    BusState s;
    const int n = network.size();
    s.v = Eigen::VectorXd::Ones(n);
    s.theta = Eigen::VectorXd::Zero(n);
    for (const auto& b : network.buses) {
      if (b.v_set) s.v(b.id - 1) = *b.v_set;
    }
    for (int j = 0; j < n_vars(); ++j) {
      const auto& var = variables[static_cast<std::size_t>(j)];
      switch (var.kind) {
        case VariableKind::angle: s.theta(var.bus - 1) = x(j); break;
        case VariableKind::magnitude: s.v(var.bus - 1) = x(j); break;
        case VariableKind::slack: s.slack = x(j); break;
      }
    }
    return s;
  }

  /// Specified active injection at a bus given the slack share.
  double specified_p(int bus_id, double slack) const {
    const auto& b = network.bus(bus_id);
    return weights[static_cast<std::size_t>(bus_id - 1)] * slack + b.p_inj.value_or(0.0);
  }

  /// Total specified consumption: -sum of specified injections.
  double total_specified_load() const {
    double total = 0.0;
    for (const auto& b : network.buses) total -= b.p_inj.value_or(0.0);
    return total;
  }

  /// V = 1 (or the setpoint), theta = 0, p = total specified load.
  Eigen::VectorXd flat_start() const {
    Eigen::VectorXd x(n_vars());
    for (int j = 0; j < n_vars(); ++j) {
      switch (variables[static_cast<std::size_t>(j)].kind) {
        case VariableKind::angle: x(j) = 0.0; break;
        case VariableKind::magnitude: x(j) = 1.0; break;
        case VariableKind::slack: x(j) = total_specified_load(); break;
      }
    }
    return x;
  }
};

inline Formulation assemble_formulation(const Network& network, const YBus& ybus) {
  network.validate();
  if (ybus.n != network.size()) throw InputError("YBUS_SIZE", "Y-bus size differs from bus count");

  Formulation f;
  f.network = network;
  f.ybus = ybus;
  f.weights.assign(network.buses.size(), 0.0);

  double weight_sum = 0.0;
  int group_size = 0;
  for (const auto& b : network.buses) {
    if (b.in_slack_group()) {
      weight_sum += *b.participation;
      ++group_size;
    }
  }
  // A group of one (the reference alone) is the classic single slack.
  f.distributed = group_size > 1;
  if (f.distributed) {
    for (const auto& b : network.buses) {
      if (b.in_slack_group()) f.weights[static_cast<std::size_t>(b.id - 1)] = *b.participation / weight_sum;
    }
  }

  for (const auto& b : network.buses) {
    if (b.type != BusType::reference) f.variables.push_back({VariableKind::angle, b.id});
  }
  for (const auto& b : network.buses) {
    if (b.type == BusType::pq) f.variables.push_back({VariableKind::magnitude, b.id});
  }
  if (f.distributed) f.variables.push_back({VariableKind::slack, 0});

  for (const auto& b : network.buses) {
    const bool free_p = b.type == BusType::reference && !f.distributed;
    if (!free_p) f.residuals.push_back({BalanceKind::active, b.id});
  }
  for (const auto& b : network.buses) {
    if (b.type == BusType::pq) f.residuals.push_back({BalanceKind::reactive, b.id});
  }

  if (f.n_vars() != f.n_eqs()) {
    throw InputError("COUNT_MISMATCH", "formulation has " + std::to_string(f.n_eqs()) + " equations for " +
                                           std::to_string(f.n_vars()) + " variables");
  }
  return f;
}

/// Calculated minus specified injection for every residual row.
inline Eigen::VectorXd residual(const Formulation& f, const Eigen::VectorXd& x) {
  const auto s = f.unpack(x);
  Eigen::VectorXd p, q;
  bus_injections(f.ybus, s.v, s.theta, p, q);
  Eigen::VectorXd out(f.n_eqs());
  for (int r = 0; r < f.n_eqs(); ++r) {
    const auto& row = f.residuals[static_cast<std::size_t>(r)];
    const int i = row.bus - 1;
    if (row.kind == BalanceKind::active) {
      out(r) = p(i) - f.specified_p(row.bus, s.slack);
    } else {
      out(r) = q(i) - f.network.bus(row.bus).q_inj.value_or(0.0);
    }
  }
  return out;
}

/// Central differences, step 1e-6 * max(1, |x_j|).
inline Eigen::MatrixXd jacobian_fd(const Formulation& f, const Eigen::VectorXd& x) {
  Eigen::MatrixXd j(f.n_eqs(), f.n_vars());
  Eigen::VectorXd xp = x;
  for (int c = 0; c < f.n_vars(); ++c) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(c)));
    xp(c) = x(c) + h;
    const Eigen::VectorXd fp = residual(f, xp);
    xp(c) = x(c) - h;
    const Eigen::VectorXd fm = residual(f, xp);
    xp(c) = x(c);
    j.col(c) = (fp - fm) / (2.0 * h);
  }
  return j;
}

inline Eigen::MatrixXd jacobian_analytic(const Formulation& f, const Eigen::VectorXd& x) {
  const auto s = f.unpack(x);
  const auto& y = f.ybus;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(f.n_eqs(), f.n_vars());

  for (int r = 0; r < f.n_eqs(); ++r) {
    const auto& row = f.residuals[static_cast<std::size_t>(r)];
    const int i = row.bus - 1;
    const bool active = row.kind == BalanceKind::active;
    for (int c = 0; c < f.n_vars(); ++c) {
      const auto& var = f.variables[static_cast<std::size_t>(c)];
      if (var.kind == VariableKind::slack) {
        if (active) j(r, c) = -f.weights[static_cast<std::size_t>(i)];
        continue;
      }
      const int m = var.bus - 1;
      double d = 0.0;
      for (int k = 0; k < y.n; ++k) {
        const double a = s.theta(i) - s.theta(k);
        const double ca = std::cos(a);
        const double sa = std::sin(a);
        // term_k = V_i V_k (u cos a + w sin a), with (u, w) = (G, B) for P
        // and (-B, G) for Q.
        const double u = active ? y.g(i, k) : -y.b(i, k);
        const double w = active ? y.b(i, k) : y.g(i, k);
        if (var.kind == VariableKind::angle) {
          const double dterm = s.v(i) * s.v(k) * (-u * sa + w * ca);  // d/d(a)
          if (i == m) d += dterm;
          if (k == m) d -= dterm;
        } else {
          const double base = u * ca + w * sa;
          if (i == m) d += s.v(k) * base;
          if (k == m) d += s.v(i) * base;
        }
      }
      j(r, c) = d;
    }
  }
  return j;
}

enum class JacobianMethod { finite_difference, analytic };

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 20;
  JacobianMethod jacobian = JacobianMethod::finite_difference;
};

struct BusResult {
  int id = 0;
  double v = 0.0;
  double theta = 0.0;
  double p = 0.0;
  double q = 0.0;
};

struct BranchFlow {
  int from = 0;
  int to = 0;
  double p_from = 0.0;
  double q_from = 0.0;
  double p_to = 0.0;
  double q_to = 0.0;
  double loss_p = 0.0;  // |I|^2 r
  double loss_q = 0.0;  // |I|^2 x
};

struct PowerFlowSolution {
  bool converged = false;
  int iterations = 0;  // residual evaluations, including the converged one
  double final_mismatch = 0.0;
  Eigen::VectorXd x;
  std::optional<double> slack;
  std::vector<BusResult> buses;
  std::vector<BranchFlow> branches;
  double losses_p = 0.0;
  double losses_q = 0.0;
};

inline void fill_post_solve(const Formulation& f, PowerFlowSolution& out) {
  const auto s = f.unpack(out.x);
  Eigen::VectorXd p, q;
  bus_injections(f.ybus, s.v, s.theta, p, q);
  out.buses.clear();
  out.branches.clear();
  out.losses_p = 0.0;
  out.losses_q = 0.0;
  if (f.distributed) out.slack = s.slack;
  for (const auto& b : f.network.buses) {
    const int i = b.id - 1;
    out.buses.push_back({b.id, s.v(i), s.theta(i), p(i), q(i)});
  }
  for (const auto& br : f.network.branches) {
    const auto vi = std::polar(s.v(br.from - 1), s.theta(br.from - 1));
    const auto vk = std::polar(s.v(br.to - 1), s.theta(br.to - 1));
    const auto current = (vi - vk) * br.admittance();
    const auto s_from = vi * std::conj(current);
    const auto s_to = vk * std::conj(-current);
    const double i2 = std::norm(current);
    BranchFlow flow{br.from, br.to, s_from.real(), s_from.imag(), s_to.real(), s_to.imag(), i2 * br.r, i2 * br.x};
    out.losses_p += flow.loss_p;
    out.losses_q += flow.loss_q;
    out.branches.push_back(flow);
  }
}

/// Newton-Raphson from `x0`. Non-convergence is reported through
/// `converged == false`; a singular Jacobian throws SolverError.
inline PowerFlowSolution solve_newton(const Formulation& f, const Eigen::VectorXd& x0, const NewtonOptions& options = {}) {
  if (!(options.tol > 0.0)) throw InputError("BAD_TOLERANCE", "tolerance must be positive");
  if (options.max_iter < 1) throw InputError("BAD_MAX_ITER", "max_iter must be at least 1");

  PowerFlowSolution out;
  out.x = x0;
  for (int pass = 1;; ++pass) {
    const Eigen::VectorXd fx = residual(f, out.x);
    out.final_mismatch = fx.size() == 0 ? 0.0 : fx.lpNorm<Eigen::Infinity>();
    out.iterations = pass;
    if (out.final_mismatch < options.tol) {
      out.converged = true;
      break;
    }
    if (pass > options.max_iter) break;
    const Eigen::MatrixXd jac =
        options.jacobian == JacobianMethod::analytic ? jacobian_analytic(f, out.x) : jacobian_fd(f, out.x);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    if (!(lu.rcond() > 1e-14)) throw SolverError("SINGULAR_JACOBIAN", "Jacobian is singular at the current iterate");
    const Eigen::VectorXd dx = lu.solve(fx);
    if (!dx.allFinite()) throw SolverError("SINGULAR_JACOBIAN", "Newton step is not finite");
    out.x -= dx;
  }
  fill_post_solve(f, out);
  return out;
}

}  // namespace varcomp

#endif  // VARCOMP_POWERFLOW_HPP
