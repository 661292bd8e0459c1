#ifndef VARCOMP_AC_QUANTITIES_HPP
#define VARCOMP_AC_QUANTITIES_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "varcomp/error.hpp"

namespace varcomp {

/// Absolute + relative tolerance pair. `near(a, b)` holds when
/// |a - b| <= max(abs, rel * max(|a|, |b|)).
struct Tolerance {
  double abs = 0.0;
  double rel = 1e-9;

  bool near(double a, double b) const {
    const double scale = std::max(std::abs(a), std::abs(b));
    return std::abs(a - b) <= std::max(abs, rel * scale);
  }
};

enum class UnitScale { base, mega };

/// Which side of the terminals the power is measured from.
enum class Role { source, load };

inline double scale_factor(UnitScale s) { return s == UnitScale::mega ? 1e6 : 1.0; }

inline std::string_view to_string(UnitScale s) { return s == UnitScale::mega ? "mega" : "base"; }
inline std::string_view to_string(Role r) { return r == Role::source ? "source" : "load"; }

struct ComplexPower {
  double p = 0.0;
  double q = 0.0;
  UnitScale scale = UnitScale::base;
  Role role = Role::load;

  double apparent() const { return std::hypot(p, q); }

  /// Power in W / VAr regardless of `scale`.
  std::complex<double> in_base_units() const { return {p * scale_factor(scale), q * scale_factor(scale)}; }

  ComplexPower operator+(const ComplexPower& other) const {
    if (scale != other.scale) {
      throw InputError("UNIT_SCALE_MISMATCH", "cannot add powers with different unit scales");
    }
    return {p + other.p, q + other.q, scale, role};
  }
  ComplexPower operator-(const ComplexPower& other) const {
    return *this + ComplexPower{-other.p, -other.q, other.scale, other.role};
  }
};

enum class QSign { positive, negative, zero };

struct PowerFactor {
  double magnitude = 1.0;
  QSign q_sign = QSign::zero;
  Role role = Role::load;
};

enum class PfLabel { leading, lagging, unity };

/// `paper`: a source delivering Q > 0 is leading, a load absorbing Q > 0 is
/// lagging. `classical` swaps the source labels (generator convention).
enum class LabelConvention { paper, classical };

inline std::string_view to_string(PfLabel l) {
  switch (l) {
    case PfLabel::leading: return "leading";
    case PfLabel::lagging: return "lagging";
    case PfLabel::unity: return "unity";
  }
  return "unity";
}

inline PfLabel parse_pf_label(std::string_view s) {
  if (s == "leading") return PfLabel::leading;
  if (s == "lagging") return PfLabel::lagging;
  if (s == "unity") return PfLabel::unity;
  throw InputError("BAD_LABEL", "unknown power factor label '" + std::string(s) + "'");
}

inline LabelConvention parse_convention(std::string_view s) {
  if (s == "paper") return LabelConvention::paper;
  if (s == "classical") return LabelConvention::classical;
  throw InputError("BAD_CONVENTION", "unknown labeling convention '" + std::string(s) + "'");
}

inline std::string_view to_string(LabelConvention c) { return c == LabelConvention::paper ? "paper" : "classical"; }

// --------------------------------------------------------------------------
// Load specifications

enum class PfDirection { lagging, leading };

/// A load as written in a problem statement. Exactly one of these forms must
/// be present:
///   - explicit:  p and q
///   - apparent:  s, pf and (unless pf == 1) direction
///   - unity:     p with pf == 1
struct LoadSpec {
  std::optional<double> p;
  std::optional<double> q;
  std::optional<double> s;
  std::optional<double> pf;
  std::optional<PfDirection> direction;
  UnitScale scale = UnitScale::mega;
};

inline ComplexPower complex_power_from_spec(const LoadSpec& spec) {
  if (spec.pf && !(*spec.pf > 0.0 && *spec.pf <= 1.0)) {
    throw InputError("BAD_POWER_FACTOR", "power factor must lie in (0, 1]");
  }
  if (spec.s && *spec.s < 0.0) {
    throw InputError("NEGATIVE_APPARENT_POWER", "apparent power must be non-negative");
  }

  if (spec.p && spec.q) {
    if (spec.s) throw InputError("CONTRADICTORY_LOAD_SPEC", "give either p+q or s+pf, not both");
    if (spec.pf) {
      const double implied = std::abs(*spec.p) / std::hypot(*spec.p, *spec.q);
      if (std::abs(implied - *spec.pf) > 1e-9) {
        throw InputError("CONTRADICTORY_LOAD_SPEC", "stated power factor disagrees with p and q");
      }
    }
    return {*spec.p, *spec.q, spec.scale, Role::load};
  }

  if (spec.s && spec.pf) {
    if (spec.p || spec.q) throw InputError("CONTRADICTORY_LOAD_SPEC", "give either p+q or s+pf, not both");
    if (*spec.s == 0.0) throw InputError("NEGATIVE_APPARENT_POWER", "apparent power must be positive");
    const double p = *spec.s * *spec.pf;
    double q = *spec.s * std::sqrt(std::max(0.0, 1.0 - *spec.pf * *spec.pf));
    if (q != 0.0) {
      if (!spec.direction) throw InputError("MISSING_PF_DIRECTION", "non-unity power factor needs lagging/leading");
      if (*spec.direction == PfDirection::leading) q = -q;
    }
    return {p, q, spec.scale, Role::load};
  }

  if (spec.p && spec.pf) {
    if (*spec.pf != 1.0) throw InputError("INCOMPLETE_LOAD_SPEC", "real power with non-unity pf needs q or s");
    return {*spec.p, 0.0, spec.scale, Role::load};
  }

  if (spec.q && spec.pf && *spec.pf == 1.0 && *spec.q != 0.0) {
    throw InputError("CONTRADICTORY_LOAD_SPEC", "unity power factor with nonzero reactive power");
  }
  throw InputError("INCOMPLETE_LOAD_SPEC", "load spec must be p+q, s+pf(+direction) or p at unity pf");
}

// --------------------------------------------------------------------------
// Power factor

inline PowerFactor power_factor(const ComplexPower& s) {
  if (s.p == 0.0 && s.q == 0.0) {
    throw InputError("UNDEFINED_POWER_FACTOR", "power factor of zero complex power is undefined");
  }
  const double magnitude = std::abs(s.p) / std::hypot(s.p, s.q);
  // Sign is zero exactly when q is negligible against p in double precision.
  QSign sign = QSign::zero;
  if (magnitude != 1.0) sign = s.q > 0.0 ? QSign::positive : QSign::negative;
  return {magnitude, sign, s.role};
}

inline PfLabel label_pf(const PowerFactor& pf, LabelConvention convention = LabelConvention::paper) {
  if (pf.q_sign == QSign::zero) return PfLabel::unity;
  const bool positive = pf.q_sign == QSign::positive;
  bool leading = pf.role == Role::source ? positive : !positive;
  if (convention == LabelConvention::classical && pf.role == Role::source) leading = !leading;
  return leading ? PfLabel::leading : PfLabel::lagging;
}

/// pf magnitude for a real power and a |Q| deviation; the closed form used by
/// worst-case metrics.
inline double pf_from_ratio(double abs_q_over_p) { return 1.0 / std::sqrt(1.0 + abs_q_over_p * abs_q_over_p); }

// --------------------------------------------------------------------------
// Impedances and shunt elements

struct Impedance {
  double r = 0.0;
  double x = 0.0;

  std::complex<double> value() const { return {r, x}; }
  std::complex<double> admittance() const { return 1.0 / value(); }
  static Impedance from_admittance(std::complex<double> y) {
    const auto z = 1.0 / y;
    return {z.real(), z.imag()};
  }
};

/// Z = |V|^2 / conj(S), with S converted to base units.
inline Impedance load_impedance(double v_rms, const ComplexPower& s) {
  if (!(v_rms > 0.0)) throw InputError("BAD_VOLTAGE", "v_rms must be positive");
  const auto sb = s.in_base_units();
  if (sb == std::complex<double>{}) throw InputError("ZERO_POWER", "load impedance of zero power is undefined");
  const auto z = v_rms * v_rms / std::conj(sb);
  return {z.real(), z.imag()};
}

enum class ElementKind { inductor, capacitor, none };

inline std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::inductor: return "inductor";
    case ElementKind::capacitor: return "capacitor";
    case ElementKind::none: return "none";
  }
  return "none";
}

/// Reactive ratings below this magnitude are treated as "no element".
inline constexpr double kAbsentRating = 1e-9;

/// A shunt reactance, signed: inductive > 0, capacitive < 0.
class ShuntElement {
 public:
  ShuntElement() = default;

  static ShuntElement from_reactance(double x) {
    if (x == 0.0 || !std::isfinite(x)) throw InputError("ZERO_REACTANCE", "shunt reactance must be finite and nonzero");
    ShuntElement e;
    e.reactance_ = x;
    return e;
  }

  /// Element drawing `q` (VAr, load convention) at `v_rms`; absent when |q| is negligible.
  static ShuntElement from_rating(double v_rms, double q) {
    if (std::abs(q) < kAbsentRating) return {};
    return from_reactance(v_rms * v_rms / q);
  }

  bool present() const { return reactance_.has_value(); }
  const std::optional<double>& reactance() const { return reactance_; }

  ElementKind kind() const {
    if (!reactance_) return ElementKind::none;
    return *reactance_ > 0.0 ? ElementKind::inductor : ElementKind::capacitor;
  }

 private:
  std::optional<double> reactance_;
};

/// Q = V^2 / X: positive (consumed) for inductors, negative (supplied) for capacitors.
inline double shunt_reactive_power(double v_rms, const ShuntElement& element) {
  if (!(v_rms > 0.0)) throw InputError("BAD_VOLTAGE", "v_rms must be positive");
  if (!element.present()) return 0.0;
  return v_rms * v_rms / *element.reactance();
}

/// Reactance that draws `q` at `v_rms` (the inverse of shunt_reactive_power).
inline double reactance_for_rating(double v_rms, double q) {
  if (!(v_rms > 0.0)) throw InputError("BAD_VOLTAGE", "v_rms must be positive");
  if (q == 0.0) throw InputError("ZERO_REACTIVE_POWER", "no finite reactance draws zero reactive power");
  return v_rms * v_rms / q;
}

struct ElementValue {
  ElementKind kind = ElementKind::none;
  double value = 0.0;  // henries for inductors, farads for capacitors
};

inline ElementValue reactance_to_element(double x, double f) {
  if (!(f > 0.0)) throw InputError("BAD_FREQUENCY", "frequency must be positive");
  if (x == 0.0) throw InputError("ZERO_REACTANCE", "reactance must be nonzero");
  const double omega = 2.0 * std::numbers::pi * f;
  if (x > 0.0) return {ElementKind::inductor, x / omega};
  return {ElementKind::capacitor, 1.0 / (omega * std::abs(x))};
}

inline double element_to_reactance(const ElementValue& e, double f) {
  if (!(f > 0.0)) throw InputError("BAD_FREQUENCY", "frequency must be positive");
  const double omega = 2.0 * std::numbers::pi * f;
  switch (e.kind) {
    case ElementKind::inductor: return omega * e.value;
    case ElementKind::capacitor: return -1.0 / (omega * e.value);
    case ElementKind::none: break;
  }
  throw InputError("NO_ELEMENT", "absent element has no reactance");
}

/// Capacitive reactances written as positive magnitudes are flipped negative.
struct NormalizedReactance {
  double value = 0.0;
  bool flipped = false;
};

inline NormalizedReactance normalize_capacitive(double x) {
  if (x > 0.0) return {-x, true};
  return {x, false};
}

}  // namespace varcomp

#endif  // VARCOMP_AC_QUANTITIES_HPP
