#ifndef VARCOMP_IO_HPP
#define VARCOMP_IO_HPP

#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>

#include "varcomp/ac_quantities.hpp"
#include "varcomp/error.hpp"
#include "varcomp/multiperiod.hpp"
#include "varcomp/powerflow.hpp"
#include "varcomp/switched_compensation.hpp"

namespace varcomp::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("FILE_UNREADABLE", "cannot read '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("BAD_JSON", "'" + path + "' is not valid JSON: " + e.what());
  }
}

/// Writes through a temporary sibling and renames it over `path`, so readers
/// never observe a partial file.
inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("FILE_UNWRITABLE", "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw InputError("FILE_UNWRITABLE", "short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("FILE_UNWRITABLE", "cannot rename onto '" + path + "'");
  }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

// --------------------------------------------------------------------------
// Problem files

enum class ProblemKind { continuous, multi_period, powerflow };

inline std::string_view to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::continuous: return "continuous-compensation";
    case ProblemKind::multi_period: return "multi-period";
    case ProblemKind::powerflow: return "powerflow";
  }
  return "";
}

struct Units {
  double voltage_factor = 1.0;  // to V (1 for pu)
  double power_factor = 1.0;    // to VA (1 for pu)
  bool per_unit = false;
};

namespace detail {

inline InputError bad(const std::string& what) { return InputError("INVALID_PROBLEM", what); }

inline double number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || !j.at(key).is_number()) throw bad(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::optional<double> opt_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) throw bad(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

inline Units parse_units(const json& j, ProblemKind kind) {
  if (!j.contains("units") || !j.at("units").is_object()) throw bad("units block is mandatory");
  const auto& u = j.at("units");
  if (!u.contains("voltage") || !u.contains("power") || !u.at("voltage").is_string() || !u.at("power").is_string()) {
    throw bad("units block needs string 'voltage' and 'power'");
  }
  const auto v = u.at("voltage").get<std::string>();
  const auto p = u.at("power").get<std::string>();
  Units out;
  if (kind == ProblemKind::powerflow) {
    if (v != "pu" || p != "pu") throw bad("power-flow problems are per-unit: units must be {voltage: pu, power: pu}");
    out.per_unit = true;
    return out;
  }
  if (v == "V") {
    out.voltage_factor = 1.0;
  } else if (v == "kV") {
    out.voltage_factor = 1e3;
  } else {
    throw bad("units.voltage must be V or kV");
  }
  if (p == "VA") {
    out.power_factor = 1.0;
  } else if (p == "MVA") {
    out.power_factor = 1e6;
  } else {
    throw bad("units.power must be VA or MVA");
  }
  return out;
}

inline LoadSpec parse_load_spec(const json& j, const std::string& where) {
  if (!j.is_object()) throw bad(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "p" && key != "q" && key != "s" && key != "pf" && key != "direction") {
      throw bad(where + ": unknown field '" + key + "'");
    }
  }
  LoadSpec spec;
  spec.p = opt_number(j, "p", where);
  spec.q = opt_number(j, "q", where);
  spec.s = opt_number(j, "s", where);
  spec.pf = opt_number(j, "pf", where);
  if (j.contains("direction")) {
    const auto d = j.at("direction").is_string() ? j.at("direction").get<std::string>() : "";
    if (d == "lagging") {
      spec.direction = PfDirection::lagging;
    } else if (d == "leading") {
      spec.direction = PfDirection::leading;
    } else {
      throw bad(where + ": direction must be 'lagging' or 'leading'");
    }
  }
  return spec;
}

}  // namespace detail

struct ProblemFile {
  ProblemKind kind = ProblemKind::continuous;
  Units units;
  json defaults = json::object();
  std::variant<CompensationProblem, MultiPeriodProblem, Network> body;

  const CompensationProblem& continuous() const { return std::get<CompensationProblem>(body); }
  const MultiPeriodProblem& multi_period() const { return std::get<MultiPeriodProblem>(body); }
  const Network& network() const { return std::get<Network>(body); }
};

/// Continuous problems are stored in V, W, VAr; multi-period loads in MW,
/// MVAr with the voltage in V; networks per-unit.
inline ProblemFile parse_problem(const json& j) {
  if (!j.is_object()) throw detail::bad("problem file must be a JSON object");
  if (!j.contains("schema_version")) throw detail::bad("schema_version is mandatory");
  if (j.at("schema_version") != kSchemaVersion) {
    throw InputError("UNSUPPORTED_SCHEMA", "unsupported problem schema_version " + j.at("schema_version").dump());
  }
  const auto kind = j.value("kind", std::string());
  ProblemFile out;
  if (kind == "continuous-compensation") {
    out.kind = ProblemKind::continuous;
  } else if (kind == "multi-period") {
    out.kind = ProblemKind::multi_period;
  } else if (kind == "powerflow") {
    out.kind = ProblemKind::powerflow;
  } else {
    throw detail::bad("unknown problem kind '" + kind + "'");
  }
  out.units = detail::parse_units(j, out.kind);
  if (j.contains("defaults")) {
    if (!j.at("defaults").is_object()) throw detail::bad("defaults must be an object");
    out.defaults = j.at("defaults");
  }

  switch (out.kind) {
    case ProblemKind::continuous: {
      CompensationProblem p;
      p.v_rms = detail::number(j, "v_rms", "problem") * out.units.voltage_factor;
      p.f = detail::number(j, "f", "problem");
      p.p_d = detail::number(j, "p_d", "problem") * out.units.power_factor;
      p.q_min = detail::number(j, "q_min", "problem") * out.units.power_factor;
      p.q_max = detail::number(j, "q_max", "problem") * out.units.power_factor;
      p.validate();
      out.body = p;
      break;
    }
    case ProblemKind::multi_period: {
      MultiPeriodProblem p;
      p.v_rms = detail::number(j, "v_rms", "problem") * out.units.voltage_factor;
      p.f = detail::number(j, "f", "problem");
      if (!j.contains("periods") || !j.at("periods").is_array()) throw detail::bad("'periods' array is mandatory");
      const double to_mega = out.units.power_factor / 1e6;
      for (std::size_t i = 0; i < j.at("periods").size(); ++i) {
        const auto& e = j.at("periods")[i];
        const std::string where = "periods[" + std::to_string(i) + "]";
        if (!e.contains("name") || !e.at("name").is_string()) throw detail::bad(where + ": 'name' is mandatory");
        if (!e.contains("load")) throw detail::bad(where + ": 'load' is mandatory");
        auto spec = detail::parse_load_spec(e.at("load"), where + ".load");
        for (auto* v : {&spec.p, &spec.q, &spec.s}) {
          if (*v) **v *= to_mega;
        }
        spec.scale = UnitScale::mega;
        p.periods.push_back({e.at("name").get<std::string>(), complex_power_from_spec(spec)});
      }
      p.validate();
      out.body = p;
      break;
    }
    case ProblemKind::powerflow: {
      Network n;
      if (!j.contains("buses") || !j.at("buses").is_array()) throw detail::bad("'buses' array is mandatory");
      for (std::size_t i = 0; i < j.at("buses").size(); ++i) {
        const auto& e = j.at("buses")[i];
        const std::string where = "buses[" + std::to_string(i) + "]";
        Bus b;
        b.id = static_cast<int>(detail::number(e, "id", where));
        if (!e.contains("type") || !e.at("type").is_string()) throw detail::bad(where + ": 'type' is mandatory");
        b.type = parse_bus_type(e.at("type").get<std::string>());
        b.v_set = detail::opt_number(e, "v_set", where);
        b.p_inj = detail::opt_number(e, "p_inj", where);
        b.q_inj = detail::opt_number(e, "q_inj", where);
        b.participation = detail::opt_number(e, "participation", where);
        n.buses.push_back(b);
      }
      if (j.contains("branches")) {
        for (std::size_t i = 0; i < j.at("branches").size(); ++i) {
          const auto& e = j.at("branches")[i];
          const std::string where = "branches[" + std::to_string(i) + "]";
          n.branches.push_back({static_cast<int>(detail::number(e, "from", where)),
                                static_cast<int>(detail::number(e, "to", where)), detail::number(e, "r", where),
                                detail::number(e, "x", where)});
        }
      }
      n.validate();
      out.body = n;
      break;
    }
  }
  return out;
}

inline ProblemFile read_problem(const std::string& path) { return parse_problem(read_json_file(path)); }

// --------------------------------------------------------------------------
// Solution documents (written in the candidate schema so they re-grade clean)

inline json reactance_or_null(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

inline json element_json(const ShuntElement& e, double f) {
  if (!e.present()) return nullptr;
  const auto v = reactance_to_element(*e.reactance(), f);
  return {{"kind", std::string(to_string(v.kind))}, {"reactance", *e.reactance()}, {"value", v.value},
          {"unit", v.kind == ElementKind::inductor ? "H" : "F"}};
}

inline json continuous_solution_json(const DesignSolution& s, const CompensationProblem& problem,
                                     const std::string& provenance, bool claim_optimal,
                                     LabelConvention convention = LabelConvention::paper) {
  const auto report = evaluate(s, problem);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "continuous-compensation";
  j["provenance"] = provenance;
  j["v_rms"] = s.v_rms;
  j["x_l"] = reactance_or_null(s.x_l());
  j["x_c"] = reactance_or_null(s.x_c());
  j["threshold"] = s.threshold ? json(*s.threshold) : json(nullptr);
  j["q_l"] = s.q_l;
  j["q_c"] = s.q_c;
  j["elements"] = {{"fixed", element_json(s.fixed(), problem.f)}, {"switched", element_json(s.switched(), problem.f)}};

  json claims;
  claims["unity_points"] = report.zero_crossings;
  claims["worst_abs_qs"] = report.worst_abs_qs;
  claims["worst_pf"] = report.worst_pf;
  claims["qs_range"] = {report.min_abs_qs, report.worst_abs_qs};
  if (claim_optimal) claims["optimal"] = true;
  claims["label_convention"] = std::string(to_string(convention));
  claims["labels"] = json::array();
  std::vector<double> points{problem.q_min};
  if (s.threshold && *s.threshold > problem.q_min && *s.threshold < problem.q_max) points.push_back(*s.threshold);
  if (problem.q_max > problem.q_min) points.push_back(problem.q_max);
  for (double q : points) {
    const auto row = qs_at(s, problem, q, convention);
    claims["labels"].push_back({{"q_d", q}, {"label", std::string(to_string(row.label))}});
  }
  j["claims"] = claims;
  return j;
}

inline json multiperiod_solution_json(const MultiPeriodSolution& s, const MultiPeriodProblem& problem,
                                      const std::string& provenance, bool claim_optimal,
                                      LabelConvention convention = LabelConvention::paper) {
  const auto eval = evaluate_multiperiod(problem, s, convention);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "multi-period";
  j["provenance"] = provenance;
  j["v_rms"] = problem.v_rms;
  j["q_cf"] = s.q_cf;
  j["q_cs"] = s.q_cs;
  auto x_of = [&](double q) { return q > 0.0 ? json(reactance_for_rating(problem.v_rms, -q * 1e6)) : json(nullptr); };
  j["reactances"] = {{"x_cf", x_of(s.q_cf)}, {"x_cs", x_of(s.q_cs)}};
  j["states"] = json::object();
  for (std::size_t i = 0; i < problem.periods.size(); ++i) j["states"][problem.periods[i].name] = static_cast<bool>(s.states[i]);
  j["worst_ratio"] = s.worst_ratio;
  j["worst_pf"] = s.worst_pf;
  if (s.band) j["band"] = {s.band->first, s.band->second};
  if (s.midband_q_cs) j["midband_q_cs"] = *s.midband_q_cs;

  json claims;
  claims["worst_pf"] = eval.worst_pf;
  if (claim_optimal) claims["optimal"] = true;
  claims["label_convention"] = std::string(to_string(convention));
  claims["periods"] = json::object();
  for (const auto& r : eval.periods) {
    claims["periods"][r.name] = {{"pf", r.pf}, {"label", std::string(to_string(r.label))}, {"q_s", r.net.q}};
  }
  j["claims"] = claims;
  return j;
}

inline json powerflow_solution_json(const PowerFlowSolution& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["kind"] = "powerflow-solution";
  j["converged"] = s.converged;
  j["iterations"] = s.iterations;
  j["final_mismatch"] = s.final_mismatch;
  j["slack_p"] = s.slack ? json(*s.slack) : json(nullptr);
  j["buses"] = json::array();
  for (const auto& b : s.buses) {
    j["buses"].push_back({{"id", b.id}, {"v", b.v}, {"theta", b.theta}, {"p", b.p}, {"q", b.q}});
  }
  j["branches"] = json::array();
  for (const auto& b : s.branches) {
    j["branches"].push_back({{"from", b.from}, {"to", b.to}, {"p_from", b.p_from}, {"q_from", b.q_from}, {"p_to", b.p_to},
                             {"q_to", b.q_to}, {"loss_p", b.loss_p}, {"loss_q", b.loss_q}});
  }
  j["losses"] = {{"p", s.losses_p}, {"q", s.losses_q}};
  return j;
}

// --------------------------------------------------------------------------
// Configuration precedence: flag > VARCOMP_<NAME> > problem-file defaults > built-in

inline std::optional<std::string> env(const std::string& name) {
  const char* v = std::getenv(("VARCOMP_" + name).c_str());
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

template <typename T>
T resolve(const std::optional<T>& flag, const std::string& env_name, const json& defaults, const char* key, T builtin) {
  if (flag) return *flag;
  if (const auto e = env(env_name)) {
    std::istringstream in(*e);
    T value{};
    if (!(in >> value) || !(in >> std::ws).eof()) {
      throw InputError("BAD_ENVIRONMENT", "VARCOMP_" + env_name + " has an unparseable value '" + *e + "'");
    }
    return value;
  }
  if (defaults.contains(key)) {
    try {
      return defaults.at(key).get<T>();
    } catch (const json::exception&) {
      throw InputError("INVALID_PROBLEM", std::string("defaults.") + key + " has the wrong type");
    }
  }
  return builtin;
}

}  // namespace varcomp::io

#endif  // VARCOMP_IO_HPP
