#include "qcomp/types.hpp"

#include <cmath>
#include <numbers>

namespace qcomp {

std::string_view to_string(Advisory a) {
  switch (a) {
    case Advisory::COC: return "COC";
    case Advisory::WL: return "WL";
    case Advisory::WR: return "WR";
    case Advisory::SL: return "SL";
    case Advisory::SR: return "SR";
  }
  return "?";
}

std::optional<Advisory> parse_advisory(std::string_view s) {
  for (Advisory a : kAllAdvisories) {
    if (to_string(a) == s) return a;
  }
  if (s.size() == 1 && s[0] >= '0' && s[0] <= '4') return static_cast<Advisory>(s[0] - '0');
  return std::nullopt;
}

double wrap_angle(double rad) {
  constexpr double pi = std::numbers::pi;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (rad > -pi && rad <= pi) return rad;
  double r = std::fmod(rad + pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - pi;
}

StateVector wrapped(StateVector s) {
  s.theta = wrap_angle(s.theta);
  s.psi = wrap_angle(s.psi);
  return s;
}

void validate_state(const StateVector& s) {
  auto fail = [](const char* what) { throw std::invalid_argument(std::string("state: ") + what); };
  if (!(s.rho >= 0.0) || !std::isfinite(s.rho)) fail("rho must be finite and >= 0");
  if (!std::isfinite(s.theta) || !std::isfinite(s.psi)) fail("angles must be finite");
  if (!(s.v_own > 0.0) || !std::isfinite(s.v_own)) fail("v_own must be > 0");
  if (!(s.v_int > 0.0) || !std::isfinite(s.v_int)) fail("v_int must be > 0");
  if (!(s.tau >= 0.0) || !std::isfinite(s.tau)) fail("tau must be >= 0");
  if (index_of(s.a_prev) >= kNumAdvisories) fail("a_prev out of range");
}

}  // namespace qcomp
