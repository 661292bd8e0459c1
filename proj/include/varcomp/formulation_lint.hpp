#ifndef VARCOMP_FORMULATION_LINT_HPP
#define VARCOMP_FORMULATION_LINT_HPP

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "varcomp/ac_quantities.hpp"
#include "varcomp/error.hpp"
#include "varcomp/powerflow.hpp"
#include "varcomp/report.hpp"

namespace varcomp {

// A power-flow formulation written out as data. Each balance equation reads
//
//   injection - V_i * sum_terms V_vb (cos * cos(th_i - th_k) + sin * sin(th_i - th_k)) = 0
//
// where vb is the term's voltage bus (normally k). The standard form has
// (cos, sin) = (G_ik, B_ik) for active and (-B_ik, G_ik) for reactive balance.

enum class QuantityKind { magnitude, angle, active, reactive, slack };

struct QuantityName {
  QuantityKind kind = QuantityKind::magnitude;
  int bus = 0;
};

inline std::optional<QuantityName> parse_quantity(const std::string& name) {
  if (name == "p") return QuantityName{QuantityKind::slack, 0};
  auto digits_after = [&](std::size_t prefix) -> std::optional<int> {
    if (name.size() <= prefix) return std::nullopt;
    for (std::size_t i = prefix; i < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) return std::nullopt;
    }
    return std::stoi(name.substr(prefix));
  };
  if (name.rfind("theta", 0) == 0) {
    if (auto id = digits_after(5)) return QuantityName{QuantityKind::angle, *id};
    return std::nullopt;
  }
  const char c = name.empty() ? '\0' : name[0];
  const QuantityKind kinds[] = {QuantityKind::magnitude, QuantityKind::active, QuantityKind::reactive};
  const char letters[] = {'V', 'P', 'Q'};
  for (int i = 0; i < 3; ++i) {
    if (c == letters[i]) {
      if (auto id = digits_after(1)) return QuantityName{kinds[i], *id};
    }
  }
  return std::nullopt;
}

struct DocTerm {
  int k = 0;
  int voltage_bus = 0;
  double cos = 0.0;
  double sin = 0.0;
};

struct DocInjection {
  double value = 0.0;
  std::optional<std::string> variable;
  double coefficient = 1.0;
};

struct DocLinear {
  std::string variable;
  double coefficient = 1.0;
};

enum class EquationKind { p_balance, q_balance, fixed_value, slack_share, text };

struct DocEquation {
  EquationKind kind = EquationKind::text;
  int bus = 0;
  DocInjection injection;
  std::vector<DocTerm> terms;
  std::string variable;  // fixed_value
  double value = 0.0;    // fixed_value
  std::vector<DocLinear> linear;  // slack_share
  std::string text;
};

struct FormulationDocument {
  std::string provenance;
  std::vector<std::string> variables;
  std::vector<DocEquation> equations;
  std::map<int, std::string> bus_types;
  nlohmann::json claims = nlohmann::json::object();

  bool machine_readable() const {
    if (equations.empty()) return false;
    for (const auto& e : equations) {
      if (e.kind == EquationKind::text) return false;
    }
    return true;
  }
};

inline std::string_view to_string(EquationKind k) {
  switch (k) {
    case EquationKind::p_balance: return "p_balance";
    case EquationKind::q_balance: return "q_balance";
    case EquationKind::fixed_value: return "fixed_value";
    case EquationKind::slack_share: return "slack_share";
    case EquationKind::text: return "text";
  }
  return "text";
}

namespace detail {

inline InputError malformed(const std::string& what) { return InputError("MALFORMED_CANDIDATE", what); }

template <typename T>
T required(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) throw malformed(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw malformed(where + ": bad type for '" + key + "'");
  }
}

template <typename T>
T optional_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw malformed(where + ": bad type for '" + key + "'");
  }
}

}  // namespace detail

inline FormulationDocument parse_formulation_document(const nlohmann::json& j) {
  if (!j.is_object()) throw detail::malformed("candidate must be a JSON object");
  FormulationDocument doc;
  doc.provenance = detail::optional_or<std::string>(j, "provenance", "", "candidate");
  doc.variables = detail::required<std::vector<std::string>>(j, "variables", "candidate");
  if (j.contains("bus_types")) {
    for (const auto& [key, value] : j.at("bus_types").items()) {
      try {
        doc.bus_types[std::stoi(key)] = value.get<std::string>();
      } catch (const std::exception&) {
        throw detail::malformed("bus_types: bad entry '" + key + "'");
      }
    }
  }
  if (j.contains("claims")) doc.claims = j.at("claims");
  if (!j.contains("equations") || !j.at("equations").is_array()) return doc;

  const auto& eqs = j.at("equations");
  for (std::size_t n = 0; n < eqs.size(); ++n) {
    const auto& e = eqs[n];
    const std::string where = "equations[" + std::to_string(n) + "]";
    DocEquation eq;
    const auto kind = detail::optional_or<std::string>(e, "kind", "text", where);
    if (kind == "p_balance" || kind == "q_balance") {
      eq.kind = kind == "p_balance" ? EquationKind::p_balance : EquationKind::q_balance;
      eq.bus = detail::required<int>(e, "bus", where);
      if (e.contains("injection")) {
        const auto& inj = e.at("injection");
        eq.injection.value = detail::optional_or<double>(inj, "value", 0.0, where + ".injection");
        if (inj.contains("variable") && !inj.at("variable").is_null()) {
          eq.injection.variable = detail::required<std::string>(inj, "variable", where + ".injection");
        }
        eq.injection.coefficient = detail::optional_or<double>(inj, "coefficient", 1.0, where + ".injection");
      }
      if (e.contains("terms")) {
        for (std::size_t t = 0; t < e.at("terms").size(); ++t) {
          const auto& term = e.at("terms")[t];
          const std::string tw = where + ".terms[" + std::to_string(t) + "]";
          DocTerm d;
          d.k = detail::required<int>(term, "k", tw);
          d.voltage_bus = detail::optional_or<int>(term, "voltage_bus", d.k, tw);
          d.cos = detail::optional_or<double>(term, "cos", 0.0, tw);
          d.sin = detail::optional_or<double>(term, "sin", 0.0, tw);
          eq.terms.push_back(d);
        }
      }
    } else if (kind == "fixed_value") {
      eq.kind = EquationKind::fixed_value;
      eq.variable = detail::required<std::string>(e, "variable", where);
      eq.value = detail::required<double>(e, "value", where);
    } else if (kind == "slack_share") {
      eq.kind = EquationKind::slack_share;
      if (!e.contains("terms") || !e.at("terms").is_array()) throw detail::malformed(where + ": missing 'terms'");
      for (const auto& term : e.at("terms")) {
        eq.linear.push_back({detail::required<std::string>(term, "variable", where),
                             detail::optional_or<double>(term, "coefficient", 1.0, where)});
      }
    } else if (kind == "text") {
      eq.kind = EquationKind::text;
      eq.text = detail::optional_or<std::string>(e, "text", "", where);
    } else {
      throw detail::malformed(where + ": unknown equation kind '" + kind + "'");
    }
    doc.equations.push_back(std::move(eq));
  }
  return doc;
}

/// The standard-form document for an assembled formulation; linting it
/// yields no findings.
inline nlohmann::json to_document(const Formulation& f, const std::string& provenance = "reference") {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "powerflow-formulation";
  j["provenance"] = provenance;
  j["variables"] = nlohmann::json::array();
  for (const auto& v : f.variables) j["variables"].push_back(v.name());
  j["bus_types"] = nlohmann::json::object();
  for (const auto& b : f.network.buses) j["bus_types"][std::to_string(b.id)] = std::string(to_string(b.type));
  j["equations"] = nlohmann::json::array();
  for (const auto& row : f.residuals) {
    const int i = row.bus - 1;
    const auto& bus = f.network.bus(row.bus);
    nlohmann::json e;
    e["bus"] = row.bus;
    nlohmann::json inj = nlohmann::json::object();
    if (row.kind == BalanceKind::active) {
      e["kind"] = "p_balance";
      inj["value"] = bus.p_inj.value_or(0.0);
      const double w = f.weights[static_cast<std::size_t>(i)];
      if (w > 0.0) {
        inj["variable"] = "p";
        inj["coefficient"] = w;
      }
    } else {
      e["kind"] = "q_balance";
      inj["value"] = bus.q_inj.value_or(0.0);
    }
    e["injection"] = inj;
    e["terms"] = nlohmann::json::array();
    for (int k = 0; k < f.ybus.n; ++k) {
      const double g = f.ybus.g(i, k);
      const double b = f.ybus.b(i, k);
      if (g == 0.0 && b == 0.0) continue;
      if (row.kind == BalanceKind::active) {
        e["terms"].push_back({{"k", k + 1}, {"cos", g}, {"sin", b}});
      } else {
        e["terms"].push_back({{"k", k + 1}, {"cos", -b}, {"sin", g}});
      }
    }
    j["equations"].push_back(e);
  }
  j["claims"] = {{"coefficient_source", "admittance"}};
  return j;
}

struct LintOptions {
  Tolerance coefficient{1e-9, 1e-6};
};

namespace detail {

inline bool bus_type_consistent(const Bus& actual, BusType declared) {
  if (declared == actual.type) return true;
  if (actual.type == BusType::slack_member && declared == BusType::voltage_controlled) return true;
  if (actual.type == BusType::reference && actual.in_slack_group() && declared == BusType::slack_member) return true;
  return false;
}

inline bool is_specified(const Network& net, const QuantityName& q) {
  const auto& b = net.bus(q.bus);
  switch (q.kind) {
    case QuantityKind::magnitude: return b.v_set.has_value();
    case QuantityKind::angle: return b.type == BusType::reference;
    case QuantityKind::active: return b.type == BusType::pq || b.type == BusType::voltage_controlled;
    case QuantityKind::reactive: return b.type == BusType::pq;
    case QuantityKind::slack: return false;
  }
  return false;
}

inline std::string describe_specified(const Network& net, const QuantityName& q) {
  const auto& b = net.bus(q.bus);
  const std::string id = std::to_string(q.bus);
  switch (q.kind) {
    case QuantityKind::magnitude: return "specified V" + id + " = " + nlohmann::json(*b.v_set).dump();
    case QuantityKind::angle: return "reference angle theta" + id + " = 0";
    case QuantityKind::active: return "specified P" + id + " = " + nlohmann::json(*b.p_inj).dump();
    case QuantityKind::reactive: return "specified Q" + id + " = " + nlohmann::json(*b.q_inj).dump();
    case QuantityKind::slack: break;
  }
  return "specified";
}

inline bool matches_impedance(const Network& net, int bus_i, int bus_k, double coef, const Tolerance& tol) {
  if (coef == 0.0) return false;
  for (const auto& br : net.branches) {
    const bool incident = br.from == bus_i || br.to == bus_i;
    const bool joins = (br.from == bus_i && br.to == bus_k) || (br.from == bus_k && br.to == bus_i);
    if (!(bus_i == bus_k ? incident : joins)) continue;
    for (double z : {br.r, br.x}) {
      if (z != 0.0 && tol.near(std::abs(coef), std::abs(z))) return true;
    }
  }
  return false;
}

}  // namespace detail

/// Structural and coefficient checks of a formulation document against the
/// network it claims to describe.
inline std::vector<Finding> lint_formulation(const FormulationDocument& doc, const Network& network,
                                             const LintOptions& options = {}) {
  network.validate();
  const auto ybus = build_ybus(network.branches, network.size());
  const auto reference = assemble_formulation(network, ybus);
  const auto& tol = options.coefficient;
  std::vector<Finding> out;

  auto check_bus = [&](int id, const std::string& where) {
    if (id < 1 || id > network.size()) throw detail::malformed(where + ": bus " + std::to_string(id) + " not in network");
  };
  auto parse_name = [&](const std::string& name, const std::string& where) {
    const auto q = parse_quantity(name);
    if (!q) throw detail::malformed(where + ": unknown variable name '" + name + "'");
    if (q->kind != QuantityKind::slack) check_bus(q->bus, where);
    return *q;
  };

  // Variables
  std::set<std::string> seen;
  for (std::size_t n = 0; n < doc.variables.size(); ++n) {
    const std::string where = "variables[" + std::to_string(n) + "]";
    const auto& name = doc.variables[n];
    if (!seen.insert(name).second) throw detail::malformed(where + ": duplicate variable '" + name + "'");
    const auto q = parse_name(name, where);
    if (q.kind != QuantityKind::slack && detail::is_specified(network, q)) {
      out.push_back({"VAR_FIXED_QUANTITY", where, detail::describe_specified(network, q), name, std::nullopt,
                     Severity::major, name + " is a specified quantity and must be substituted, not solved for",
                     "specified setpoints and injections are data, not unknowns"});
    }
  }

  // Counts
  const auto n_eqs = static_cast<int>(doc.equations.size());
  const auto n_vars = static_cast<int>(doc.variables.size());
  if (n_eqs != n_vars) {
    out.push_back({"COUNT_MISMATCH", "equations", n_vars, n_eqs, std::nullopt, Severity::fatal,
                   "the number of equations (" + std::to_string(n_eqs) + ") differs from the number of variables (" +
                       std::to_string(n_vars) + ")",
                   "a square system needs one equation per unknown"});
  }

  // Declared bus types
  for (const auto& [id, declared] : doc.bus_types) {
    const std::string where = "bus_types." + std::to_string(id);
    check_bus(id, where);
    BusType parsed;
    try {
      parsed = parse_bus_type(declared);
    } catch (const InputError&) {
      throw detail::malformed(where + ": unknown bus type '" + declared + "'");
    }
    const auto& bus = network.bus(id);
    if (!detail::bus_type_consistent(bus, parsed)) {
      out.push_back({"WRONG_BUS_TYPE", where, std::string(to_string(bus.type)), declared, std::nullopt,
                     Severity::major, "bus " + std::to_string(id) + " is declared " + declared,
                     "a bus is pq only when both P and Q are specified"});
    }
  }

  // Equations
  std::set<std::pair<int, int>> covered;  // (kind, bus)
  for (std::size_t n = 0; n < doc.equations.size(); ++n) {
    const auto& eq = doc.equations[n];
    const std::string where = "equations[" + std::to_string(n) + "]";
    if (eq.kind == EquationKind::text) continue;

    if (eq.kind == EquationKind::fixed_value) {
      const auto q = parse_name(eq.variable, where);
      if (detail::is_specified(network, q) && q.kind == QuantityKind::magnitude) {
        const double expected = *network.bus(q.bus).v_set;
        if (!tol.near(eq.value, expected)) {
          out.push_back({"SPECIFIED_VALUE_WRONG", where + ".value", expected, eq.value, tol.rel, Severity::major,
                         eq.variable + " is fixed at the wrong value", std::nullopt});
        }
      }
      continue;
    }

    if (eq.kind == EquationKind::slack_share) {
      double share = 0.0;
      double scale = 0.0;
      for (std::size_t t = 0; t < eq.linear.size(); ++t) {
        const auto q = parse_name(eq.linear[t].variable, where);
        const bool member_p = q.kind == QuantityKind::active && network.bus(q.bus).in_slack_group();
        if (!member_p) {
          out.push_back({"WRONG_COEFFICIENT", where + ".terms[" + std::to_string(t) + "]",
                         "active power of a slack-group bus", eq.linear[t].variable, std::nullopt, Severity::major,
                         "slack sharing relates generator active powers only", std::nullopt});
          continue;
        }
        const double w = reference.weights[static_cast<std::size_t>(q.bus - 1)];
        share += eq.linear[t].coefficient * w;
        scale += std::abs(eq.linear[t].coefficient * w);
      }
      if (scale > 0.0 && std::abs(share) > 1e-9 * scale) {
        out.push_back({"SPECIFIED_VALUE_WRONG", where, "shares proportional to participation weights", share,
                       std::nullopt, Severity::major, "slack sharing equation contradicts the participation weights",
                       std::nullopt});
      }
      continue;
    }

    check_bus(eq.bus, where);
    const auto& bus = network.bus(eq.bus);
    const bool active = eq.kind == EquationKind::p_balance;
    const std::string id = std::to_string(eq.bus);

    const bool required_row = [&] {
      for (const auto& row : reference.residuals) {
        if (row.bus == eq.bus && (row.kind == BalanceKind::active) == active) return true;
      }
      return false;
    }();
    if (!required_row) {
      out.push_back({"SPURIOUS_EQUATION", where, nlohmann::json(nullptr), std::string(to_string(eq.kind)) + " at bus " + id,
                     std::nullopt, Severity::major,
                     std::string(active ? "P" : "Q") + id + " is not specified, so its balance equation is not needed",
                     "balance equations belong to buses whose injection is specified"});
      continue;
    }
    covered.insert({active ? 0 : 1, eq.bus});

    // Injection side
    const std::string inj_where = where + ".injection";
    const std::string own = (active ? "P" : "Q") + id;
    if (eq.injection.variable) {
      parse_name(*eq.injection.variable, inj_where);
    }
    if (active && bus.in_slack_group() && reference.distributed) {
      const double w = reference.weights[static_cast<std::size_t>(eq.bus - 1)];
      const double local = bus.p_inj.value_or(0.0);
      const auto& var = eq.injection.variable;
      const bool own_var = var && *var == own;
      const bool share_var = var && *var == "p" && tol.near(eq.injection.coefficient, w) && tol.near(eq.injection.value, local);
      if (!own_var && !share_var) {
        out.push_back({"SPECIFIED_VALUE_WRONG", inj_where, nlohmann::json{{"value", local}, {"variable", "p"}, {"coefficient", w}},
                       nlohmann::json{{"value", eq.injection.value},
                                      {"variable", var ? nlohmann::json(*var) : nlohmann::json(nullptr)},
                                      {"coefficient", eq.injection.coefficient}},
                       tol.rel, Severity::major, "slack-group injection must be the bus's share of p", std::nullopt});
      }
    } else {
      const double expected = active ? bus.p_inj.value_or(0.0) : bus.q_inj.value_or(0.0);
      if (eq.injection.variable) {
        const bool own_var = *eq.injection.variable == own;
        out.push_back({own_var ? "SPECIFIED_VALUE_MISSING" : "SPECIFIED_VALUE_WRONG", inj_where, expected,
                       *eq.injection.variable, std::nullopt, Severity::major,
                       own + " is specified; its value belongs in the equation", std::nullopt});
      } else if (!tol.near(eq.injection.value, expected)) {
        out.push_back({"SPECIFIED_VALUE_WRONG", inj_where, expected, eq.injection.value, tol.rel, Severity::major,
                       own + " injection has the wrong value or sign (consumption enters negative)", std::nullopt});
      }
    }

    // Network side
    const int i = eq.bus - 1;
    std::set<int> present;
    for (std::size_t t = 0; t < eq.terms.size(); ++t) {
      const auto& term = eq.terms[t];
      const std::string tw = where + ".terms[" + std::to_string(t) + "]";
      check_bus(term.k, tw);
      check_bus(term.voltage_bus, tw);
      present.insert(term.k);
      const int k = term.k - 1;
      const double exp_cos = active ? ybus.g(i, k) : -ybus.b(i, k);
      const double exp_sin = active ? ybus.b(i, k) : ybus.g(i, k);
      const nlohmann::json expected = {{"cos", exp_cos}, {"sin", exp_sin}};
      const nlohmann::json actual = {{"cos", term.cos}, {"sin", term.sin}};

      if (term.voltage_bus != term.k) {
        out.push_back({"MALFORMED_BRANCH_TERM", tw, "V" + std::to_string(term.k), "V" + std::to_string(term.voltage_bus),
                       std::nullopt, Severity::major,
                       "term for bus " + std::to_string(term.k) + " must multiply V" + std::to_string(term.k),
                       std::nullopt});
      }
      const bool cos_ok = tol.near(term.cos, exp_cos);
      const bool sin_ok = tol.near(term.sin, exp_sin);
      if (cos_ok && sin_ok) continue;
      const bool impedance = (!cos_ok && detail::matches_impedance(network, eq.bus, term.k, term.cos, tol)) ||
                             (!sin_ok && detail::matches_impedance(network, eq.bus, term.k, term.sin, tol));
      if (impedance) {
        out.push_back({"IMPEDANCE_FOR_ADMITTANCE", tw, expected, actual, tol.rel, Severity::major,
                       "coefficient equals a line resistance/reactance; use Y-bus conductance and susceptance",
                       "coefficients come from Y = G + jB, not from R + jX"});
      } else {
        out.push_back({"WRONG_COEFFICIENT", tw, expected, actual, tol.rel, Severity::major,
                       "coefficient differs from the Y-bus entry", std::nullopt});
      }
    }
    for (int k = 0; k < ybus.n; ++k) {
      if (ybus.g(i, k) == 0.0 && ybus.b(i, k) == 0.0) continue;
      if (present.count(k + 1)) continue;
      const std::string what = k == i ? "self-admittance term of bus " + id
                                      : "term for branch " + id + "-" + std::to_string(k + 1);
      out.push_back({"MISSING_BRANCH_TERM", where + ".terms", k + 1, nlohmann::json(nullptr), std::nullopt,
                     Severity::major, "missing " + what, "every incident branch contributes to a bus balance"});
    }
  }

  for (const auto& row : reference.residuals) {
    const bool active = row.kind == BalanceKind::active;
    if (covered.count({active ? 0 : 1, row.bus})) continue;
    if (!doc.machine_readable()) continue;
    out.push_back({"MISSING_EQUATION", "equations", std::string(active ? "p_balance" : "q_balance") + " at bus " +
                                                        std::to_string(row.bus),
                   nlohmann::json(nullptr), std::nullopt, Severity::major,
                   std::string(active ? "active" : "reactive") + " balance at bus " + std::to_string(row.bus) +
                       " is required",
                   std::nullopt});
  }

  // Claims
  const auto& claims = doc.claims;
  if (claims.is_object()) {
    if (claims.contains("coefficient_source") && claims.at("coefficient_source") == "impedance") {
      out.push_back({"IMPEDANCE_FOR_ADMITTANCE", "claims.coefficient_source", "admittance", "impedance", std::nullopt,
                     Severity::major, "power-flow coefficients are conductances and susceptances",
                     "coefficients come from Y = G + jB, not from R + jX"});
    }
    if (claims.value("neglects_line_losses", false)) {
      bool lossy = false;
      for (const auto& br : network.branches) lossy = lossy || br.r != 0.0;
      if (lossy) {
        out.push_back({"LOSSES_NEGLECTED_CLAIM", "claims.neglects_line_losses", false, true, std::nullopt,
                       Severity::minor, "the AC power-flow equations already include I^2 R line losses", std::nullopt});
      }
    }
  }
  return out;
}

/// Value of a named quantity at a solved operating point.
inline double quantity_value(const QuantityName& q, const PowerFlowSolution& sol) {
  if (q.kind == QuantityKind::slack) {
    if (!sol.slack) throw detail::malformed("variable 'p' used but the network has no distributed slack");
    return *sol.slack;
  }
  const auto& b = sol.buses.at(static_cast<std::size_t>(q.bus - 1));
  switch (q.kind) {
    case QuantityKind::magnitude: return b.v;
    case QuantityKind::angle: return b.theta;
    case QuantityKind::active: return b.p;
    case QuantityKind::reactive: return b.q;
    case QuantityKind::slack: break;
  }
  return 0.0;
}

/// Evaluates every machine-readable equation of `doc` at a solved state.
inline std::vector<double> document_residuals(const FormulationDocument& doc, const PowerFlowSolution& sol) {
  auto value_of = [&](const std::string& name) {
    const auto q = parse_quantity(name);
    if (!q) throw detail::malformed("unknown variable name '" + name + "'");
    if (q->kind != QuantityKind::slack && (q->bus < 1 || q->bus > static_cast<int>(sol.buses.size()))) {
      throw detail::malformed("bus " + std::to_string(q->bus) + " not in network");
    }
    return quantity_value(*q, sol);
  };
  std::vector<double> out;
  for (const auto& eq : doc.equations) {
    switch (eq.kind) {
      case EquationKind::p_balance:
      case EquationKind::q_balance: {
        const auto& bi = sol.buses.at(static_cast<std::size_t>(eq.bus - 1));
        double flow = 0.0;
        for (const auto& t : eq.terms) {
          const auto& bk = sol.buses.at(static_cast<std::size_t>(t.k - 1));
          const auto& bv = sol.buses.at(static_cast<std::size_t>(t.voltage_bus - 1));
          const double a = bi.theta - bk.theta;
          flow += bv.v * (t.cos * std::cos(a) + t.sin * std::sin(a));
        }
        flow *= bi.v;
        double injection = eq.injection.value;
        if (eq.injection.variable) injection += eq.injection.coefficient * value_of(*eq.injection.variable);
        out.push_back(injection - flow);
        break;
      }
      case EquationKind::fixed_value: out.push_back(value_of(eq.variable) - eq.value); break;
      case EquationKind::slack_share: {
        double s = 0.0;
        for (const auto& l : eq.linear) s += l.coefficient * value_of(l.variable);
        out.push_back(s);
        break;
      }
      case EquationKind::text: out.push_back(std::nan("")); break;
    }
  }
  return out;
}

}  // namespace varcomp

#endif  // VARCOMP_FORMULATION_LINT_HPP
