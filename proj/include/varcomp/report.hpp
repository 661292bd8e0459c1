#ifndef VARCOMP_REPORT_HPP
#define VARCOMP_REPORT_HPP

#include <nlohmann/json.hpp>

#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace varcomp {

enum class Severity { fatal, major, minor };

inline std::string_view to_string(Severity s) {
  switch (s) {
    case Severity::fatal: return "fatal";
    case Severity::major: return "major";
    case Severity::minor: return "minor";
  }
  return "minor";
}

/// One localized problem in a candidate document. `location` is a JSON
/// path into the candidate (e.g. `equations[3].terms[0]`).
struct Finding {
  std::string code;
  std::string location;
  nlohmann::json expected;
  nlohmann::json actual;
  std::optional<double> tolerance;
  Severity severity = Severity::major;
  std::string message;
  std::optional<std::string> anchor;  // the rule the check enforces
};

inline constexpr int kReportSchemaVersion = 1;

struct ErrorReport {
  std::string kind;
  std::string provenance;
  std::vector<Finding> findings;
  std::optional<double> optimality_gap;

  void add(Finding f) { findings.push_back(std::move(f)); }

  int count(Severity s) const {
    int n = 0;
    for (const auto& f : findings) n += f.severity == s ? 1 : 0;
    return n;
  }

  bool has(std::string_view code) const {
    for (const auto& f : findings) {
      if (f.code == code) return true;
    }
    return false;
  }

  std::vector<const Finding*> with_code(std::string_view code) const {
    std::vector<const Finding*> out;
    for (const auto& f : findings) {
      if (f.code == code) out.push_back(&f);
    }
    return out;
  }

  bool clean() const { return findings.empty(); }
};

inline constexpr std::string_view kSeverityFooter =
    "severity classes (fatal/major/minor) are this tool's own grading construction";

inline nlohmann::json to_json(const Finding& f) {
  nlohmann::json j;
  j["code"] = f.code;
  j["location"] = f.location;
  j["expected"] = f.expected;
  j["actual"] = f.actual;
  j["tolerance"] = f.tolerance ? nlohmann::json(*f.tolerance) : nlohmann::json(nullptr);
  j["severity"] = std::string(to_string(f.severity));
  j["message"] = f.message;
  if (f.anchor) j["anchor"] = *f.anchor;
  return j;
}

inline nlohmann::json to_json(const ErrorReport& r) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = r.kind;
  j["provenance"] = r.provenance;
  j["findings"] = nlohmann::json::array();
  for (const auto& f : r.findings) j["findings"].push_back(to_json(f));
  j["summary"] = {{"n_fatal", r.count(Severity::fatal)},
                  {"n_major", r.count(Severity::major)},
                  {"n_minor", r.count(Severity::minor)}};
  j["optimality_gap"] = r.optimality_gap ? nlohmann::json(*r.optimality_gap) : nlohmann::json(nullptr);
  j["note"] = std::string(kSeverityFooter);
  return j;
}

/// `CODE path expected actual`, one finding per line, then a summary line.
inline std::string render_text(const ErrorReport& r) {
  std::ostringstream out;
  for (const auto& f : r.findings) {
    out << f.code << ' ' << (f.location.empty() ? "-" : f.location) << ' ' << f.expected.dump() << ' '
        << f.actual.dump() << '\n';
  }
  out << "# " << r.findings.size() << " finding(s): " << r.count(Severity::fatal) << " fatal, "
      << r.count(Severity::major) << " major, " << r.count(Severity::minor) << " minor";
  if (r.optimality_gap) out << "; optimality gap " << nlohmann::json(*r.optimality_gap).dump();
  out << '\n' << "# " << kSeverityFooter << '\n';
  return out.str();
}

}  // namespace varcomp

#endif  // VARCOMP_REPORT_HPP
