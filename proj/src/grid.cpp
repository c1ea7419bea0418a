#include "qcomp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace qcomp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double angular_distance(double a, double b) { return std::abs(wrap_angle(a - b)); }

}  // namespace

const char* dim_name(Dim d) {
  switch (d) {
    case Dim::Rho: return "rho";
    case Dim::Theta: return "theta";
    case Dim::Psi: return "psi";
    case Dim::VOwn: return "v_own";
    case Dim::VInt: return "v_int";
    case Dim::Tau: return "tau";
  }
  return "?";
}

GridSpec::GridSpec(std::array<std::vector<double>, kNumContinuousDims> cuts) : cuts_(std::move(cuts)) {}

void GridSpec::validate() const {
  for (std::size_t k = 0; k < kNumContinuousDims; ++k) {
    const Dim d = static_cast<Dim>(k);
    const auto& c = cuts_[k];
    const std::string name = dim_name(d);
    const std::size_t min_size = d == Dim::Tau ? 1 : 2;
    if (c.size() < min_size) {
      throw std::invalid_argument("grid: dimension " + name + " needs at least " +
                                  std::to_string(min_size) + " cutpoints, has " + std::to_string(c.size()));
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!std::isfinite(c[i])) throw std::invalid_argument("grid: non-finite cutpoint in " + name);
      if (i > 0 && !(c[i] > c[i - 1])) throw std::invalid_argument("grid: cutpoints of " + name + " not strictly increasing");
    }
    if (is_angular(d) && (c.front() <= -kPi || c.back() > kPi)) {
      throw std::invalid_argument("grid: angular cutpoints of " + name + " must lie in (-pi, pi]");
    }
    if ((d == Dim::VOwn || d == Dim::VInt) && c.front() <= 0.0) {
      throw std::invalid_argument("grid: speeds in " + name + " must be positive");
    }
    if ((d == Dim::Rho || d == Dim::Tau) && c.front() < 0.0) {
      throw std::invalid_argument("grid: " + name + " cutpoints must be non-negative");
    }
  }
}

std::size_t GridSpec::num_points() const {
  std::size_t n = 1;
  for (const auto& c : cuts_) n *= c.size();
  return n;
}

std::size_t snap_linear(const std::vector<double>& c, double value) {
  const std::size_t n = c.size();
  if (n <= 1 || value <= c.front()) return 0;
  if (value >= c.back()) return n - 1;
  const std::size_t hi = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), value) - c.begin());
  const std::size_t lo = hi - 1;
  return (c[hi] - value) < (value - c[lo]) ? hi : lo;
}

std::size_t GridSpec::snap(Dim d, double value) const {
  const auto& c = cuts(d);
  const std::size_t n = c.size();
  if (n == 1) return 0;
  if (!is_angular(d)) return snap_linear(c, value);
  const double v = wrap_angle(value);
  const std::size_t ub = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), v) - c.begin());
  const std::size_t lo = ub == 0 ? n - 1 : ub - 1;
  const std::size_t hi = ub == n ? 0 : ub;
  const double d_lo = angular_distance(v, c[lo]);
  const double d_hi = angular_distance(v, c[hi]);
  if (d_lo < d_hi) return lo;
  if (d_hi < d_lo) return hi;
  return std::min(lo, hi);
}

Bracket GridSpec::bracket(Dim d, double value) const {
  const auto& c = cuts(d);
  const std::size_t n = c.size();
  if (n == 1) return {0, 0, 0.0};
  if (!is_angular(d)) {
    if (value <= c.front()) return {0, 0, 0.0};
    if (value >= c.back()) return {n - 1, n - 1, 0.0};
    const std::size_t hi = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), value) - c.begin());
    const std::size_t lo = hi - 1;
    return {lo, hi, (value - c[lo]) / (c[hi] - c[lo])};
  }
  const double v = wrap_angle(value);
  const std::size_t ub = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), v) - c.begin());
  const std::size_t lo = ub == 0 ? n - 1 : ub - 1;
  const std::size_t hi = ub == n ? 0 : ub;
  double gap = c[hi] - c[lo];
  if (gap <= 0.0) gap += kTwoPi;
  double offset = v - c[lo];
  if (offset < 0.0) offset += kTwoPi;
  const double w = std::clamp(offset / gap, 0.0, 1.0);
  return {lo, hi, w};
}

GridIndex GridSpec::nearest(const StateVector& s) const {
  GridIndex idx;
  idx.cont[0] = snap(Dim::Rho, s.rho);
  idx.cont[1] = snap(Dim::Theta, s.theta);
  idx.cont[2] = snap(Dim::Psi, s.psi);
  idx.cont[3] = snap(Dim::VOwn, s.v_own);
  idx.cont[4] = snap(Dim::VInt, s.v_int);
  idx.cont[5] = snap(Dim::Tau, s.tau);
  idx.a_prev = s.a_prev;
  return idx;
}

std::size_t GridSpec::point_index(const std::array<std::size_t, kNumContinuousDims>& cont) const {
  std::size_t i = 0;
  for (std::size_t k = 0; k < kNumContinuousDims; ++k) i = i * cuts_[k].size() + cont[k];
  return i;
}

std::size_t GridSpec::state_index(const GridIndex& idx) const {
  return point_index(idx.cont) * kNumAdvisories + index_of(idx.a_prev);
}

GridIndex GridSpec::unravel(std::size_t state_index) const {
  GridIndex idx;
  idx.a_prev = advisory_from_index(state_index % kNumAdvisories);
  std::size_t rest = state_index / kNumAdvisories;
  for (std::size_t k = kNumContinuousDims; k-- > 0;) {
    idx.cont[k] = rest % cuts_[k].size();
    rest /= cuts_[k].size();
  }
  return idx;
}

StateVector GridSpec::state_at(std::size_t state_index) const {
  const GridIndex idx = unravel(state_index);
  StateVector s;
  s.rho = cuts_[0][idx.cont[0]];
  s.theta = cuts_[1][idx.cont[1]];
  s.psi = cuts_[2][idx.cont[2]];
  s.v_own = cuts_[3][idx.cont[3]];
  s.v_int = cuts_[4][idx.cont[4]];
  s.tau = cuts_[5][idx.cont[5]];
  s.a_prev = idx.a_prev;
  return s;
}

double to_f32_cut(double v, bool angular) {
  float f = static_cast<float>(v);
  if (angular) {
    while (static_cast<double>(f) > kPi) f = std::nextafter(f, 0.0f);
    while (static_cast<double>(f) <= -kPi) f = std::nextafter(f, 0.0f);
  }
  return static_cast<double>(f);
}

std::vector<double> uniform_angles(std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    out.push_back(to_f32_cut(-kPi + kTwoPi * static_cast<double>(k) / static_cast<double>(n), true));
  }
  return out;
}

std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = n == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(n - 1);
    out.push_back(to_f32_cut(lo * std::pow(hi / lo, t), false));
  }
  return out;
}

GridSpec default_grid() {
  return GridSpec({
      log_spaced(500.0, 60000.0, 12),
      uniform_angles(9),
      uniform_angles(9),
      {100.0, 300.0, 600.0},
      {100.0, 300.0, 600.0},
      {0.0, 1.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0},
  });
}

}  // namespace qcomp
