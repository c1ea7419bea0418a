#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qcomp {

/// Horizontal advisory. Enum order is also the argmax tie-break order.
enum class Advisory : std::uint8_t { COC = 0, WL = 1, WR = 2, SL = 3, SR = 4 };

inline constexpr std::size_t kNumAdvisories = 5;
inline constexpr std::array<Advisory, kNumAdvisories> kAllAdvisories = {
    Advisory::COC, Advisory::WL, Advisory::WR, Advisory::SL, Advisory::SR};

/// One score per advisory, indexed by the advisory's enum value.
using ActionScores = std::array<double, kNumAdvisories>;

constexpr std::size_t index_of(Advisory a) { return static_cast<std::size_t>(a); }

inline Advisory advisory_from_index(std::size_t i) {
  if (i >= kNumAdvisories) throw std::out_of_range("advisory index out of range");
  return static_cast<Advisory>(i);
}

/// Commanded heading rate in deg/s; left turns are positive.
constexpr double turn_rate_deg(Advisory a) {
  switch (a) {
    case Advisory::COC: return 0.0;
    case Advisory::WL: return 1.5;
    case Advisory::WR: return -1.5;
    case Advisory::SL: return 3.0;
    case Advisory::SR: return -3.0;
  }
  return 0.0;
}

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

constexpr bool is_alert(Advisory a) { return a != Advisory::COC; }
constexpr bool is_left(Advisory a) { return a == Advisory::WL || a == Advisory::SL; }
constexpr bool is_right(Advisory a) { return a == Advisory::WR || a == Advisory::SR; }
constexpr bool is_strong(Advisory a) { return a == Advisory::SL || a == Advisory::SR; }

/// True when the two advisories turn in opposite directions.
constexpr bool is_reversal(Advisory from, Advisory to) {
  return (is_left(from) && is_right(to)) || (is_right(from) && is_left(to));
}

std::string_view to_string(Advisory a);
std::optional<Advisory> parse_advisory(std::string_view s);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double rad);

/// One encounter state in the ownship frame. Angles are counter-clockwise
/// from the ownship heading.
struct StateVector {
  double rho = 0.0;    // ft
  double theta = 0.0;  // bearing to intruder, rad
  double psi = 0.0;    // intruder heading relative to ownship, rad
  double v_own = 1.0;  // ft/s
  double v_int = 1.0;  // ft/s
  double tau = 0.0;    // s until loss of vertical separation
  Advisory a_prev = Advisory::COC;

  bool operator==(const StateVector&) const = default;
};

/// Returns s with angles wrapped into (-pi, pi].
StateVector wrapped(StateVector s);

/// Throws std::invalid_argument when a range bound is violated.
void validate_state(const StateVector& s);

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qcomp
