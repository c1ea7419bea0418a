#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "qcomp/types.hpp"

namespace qcomp {

/// Continuous state dimensions, in table storage order.
enum class Dim : std::size_t { Rho = 0, Theta, Psi, VOwn, VInt, Tau };
inline constexpr std::size_t kNumContinuousDims = 6;

constexpr bool is_angular(Dim d) { return d == Dim::Theta || d == Dim::Psi; }
const char* dim_name(Dim d);

/// Index of a grid point: one cutpoint index per continuous dimension plus
/// the previous advisory.
struct GridIndex {
  std::array<std::size_t, kNumContinuousDims> cont{};
  Advisory a_prev = Advisory::COC;
};

/// Bracketing cutpoints of a value along one dimension with the linear weight
/// of the upper one. Angular dimensions wrap from the last cutpoint to the
/// first.
struct Bracket {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double w_hi = 0.0;
};

/// Cutpoints for the six continuous dimensions. Cutpoints are stored as
/// values representable in f32 so the binary table format round-trips.
class GridSpec {
 public:
  GridSpec() = default;
  explicit GridSpec(std::array<std::vector<double>, kNumContinuousDims> cuts);

  const std::vector<double>& cuts(Dim d) const { return cuts_[static_cast<std::size_t>(d)]; }
  const std::array<std::vector<double>, kNumContinuousDims>& all_cuts() const { return cuts_; }
  std::size_t size(Dim d) const { return cuts(d).size(); }

  /// Throws std::invalid_argument naming the first offending dimension.
  void validate() const;

  /// Number of continuous grid points (excludes a_prev).
  std::size_t num_points() const;
  /// Number of table states: num_points() * 5.
  std::size_t num_states() const { return num_points() * kNumAdvisories; }

  /// Nearest cutpoint index. Ties go to the lower index; values off the grid
  /// clamp to the boundary; angular dimensions use wrapped distance.
  std::size_t snap(Dim d, double value) const;
  Bracket bracket(Dim d, double value) const;

  GridIndex nearest(const StateVector& s) const;

  /// Row-major state index: [rho][theta][psi][v_own][v_int][tau][a_prev].
  std::size_t state_index(const GridIndex& idx) const;
  std::size_t point_index(const std::array<std::size_t, kNumContinuousDims>& cont) const;
  GridIndex unravel(std::size_t state_index) const;
  StateVector state_at(std::size_t state_index) const;

  bool operator==(const GridSpec&) const = default;

 private:
  std::array<std::vector<double>, kNumContinuousDims> cuts_{};
};

/// Nearest cutpoint in a sorted non-angular list; ties go low, off-grid clamps.
std::size_t snap_linear(const std::vector<double>& cuts, double value);

/// Rounds to the nearest f32, nudged toward zero when that would leave
/// (-pi, pi] for an angular value.
double to_f32_cut(double v, bool angular);

/// Desk-scale default grid: 12 log-spaced ranges 500-60000 ft, 9 angles,
/// 3 speeds each, 9 tau values. 78,732 points, 393,660 states.
GridSpec default_grid();

/// n evenly spaced angles covering (-pi, pi], ending at pi.
std::vector<double> uniform_angles(std::size_t n);
std::vector<double> log_spaced(double lo, double hi, std::size_t n);

}  // namespace qcomp
