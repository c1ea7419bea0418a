#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "oracles.hpp"
#include "qcomp/grid.hpp"
#include "qcomp/score_table.hpp"

using namespace qcomp;
using qcomp::testing::brute_nearest_point;
using qcomp::testing::random_state;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("default grid sizes") {
  const GridSpec g = default_grid();
  CHECK(g.size(Dim::Rho) == 12);
  CHECK(g.size(Dim::Theta) == 9);
  CHECK(g.size(Dim::Psi) == 9);
  CHECK(g.size(Dim::VOwn) == 3);
  CHECK(g.size(Dim::VInt) == 3);
  CHECK(g.size(Dim::Tau) == 9);
  CHECK(g.size(Dim::Tau) * kNumAdvisories == 45);
  CHECK(g.num_points() == 78732);
  CHECK(g.num_states() == 393660);
  CHECK(g.cuts(Dim::Rho).front() == doctest::Approx(500.0));
  CHECK(g.cuts(Dim::Rho).back() == doctest::Approx(60000.0));
  for (double c : g.cuts(Dim::Theta)) {
    CHECK(c > -kPi);
    CHECK(c <= kPi);
    CHECK(static_cast<double>(static_cast<float>(c)) == c);
  }
}

TEST_CASE("grid validation rejects bad cutpoints") {
  auto cuts = default_grid().all_cuts();
  cuts[0] = {1000.0};
  CHECK_THROWS_AS(GridSpec(cuts).validate(), std::invalid_argument);
  cuts = default_grid().all_cuts();
  cuts[3] = {300.0, 100.0};
  CHECK_THROWS_AS(GridSpec(cuts).validate(), std::invalid_argument);
  cuts = default_grid().all_cuts();
  cuts[5] = {0.0};
  CHECK_NOTHROW(GridSpec(cuts).validate());
}

TEST_CASE("snap: ties go low, off-grid clamps") {
  const std::vector<double> cuts = {1000.0, 2000.0, 4000.0};
  CHECK(snap_linear(cuts, 1500.0) == 0);
  CHECK(snap_linear(cuts, 1500.001) == 1);
  CHECK(snap_linear(cuts, 3000.0) == 1);
  CHECK(snap_linear(cuts, -5.0) == 0);
  CHECK(snap_linear(cuts, 1e9) == 2);
}

TEST_CASE("snap: angles use wrapped distance") {
  const GridSpec g = default_grid();
  const auto& th = g.cuts(Dim::Theta);
  // Just above -pi is closest to the cut just below +pi.
  CHECK(g.snap(Dim::Theta, -kPi + 1e-3) == th.size() - 1);
  // Nine cuts ending at pi put 0 exactly between -pi/9 and pi/9; ties go low.
  CHECK(g.snap(Dim::Theta, 0.0) == 3);
  CHECK(g.snap(Dim::Theta, 1e-6) == 4);
}

TEST_CASE("lookup on a grid point returns its stored row") {
  const GridSpec g = qcomp::testing::small_grid();
  const ScoreTable t = qcomp::testing::random_table(g, 3);
  for (std::size_t i = 0; i < t.num_states(); i += 7) {
    const StateVector s = g.state_at(i);
    CHECK(t.nearest_index(s) == i);
    CHECK(t.lookup_nearest(s) == t.row(i));
  }
}

TEST_CASE("lookup at a midpoint takes the lower cutpoint") {
  const GridSpec g = qcomp::testing::make_grid({1000.0, 2000.0}, uniform_angles(3), uniform_angles(3), {100.0, 400.0}, {100.0, 400.0}, {0.0});
  const ScoreTable t = qcomp::testing::random_table(g, 4);
  StateVector s = g.state_at(0);
  s.rho = 1500.0;
  CHECK(g.nearest(s).cont[0] == 0);
  CHECK(t.lookup_nearest(s) == t.row(0));
}

TEST_CASE("nearest lookup matches an exhaustive scan") {
  const GridSpec g = default_grid();
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const StateVector s = random_state(rng);
    const GridIndex idx = g.nearest(s);
    CHECK(g.point_index(idx.cont) == brute_nearest_point(g, s));
    CHECK(idx.a_prev == s.a_prev);
  }
}

TEST_CASE("state index round trip") {
  const GridSpec g = default_grid();
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = rng() % g.num_states();
    CHECK(g.state_index(g.unravel(k)) == k);
    CHECK(g.state_index(g.nearest(g.state_at(k))) == k);
  }
}

TEST_CASE("bracket weights interpolate linearly and wrap angles") {
  const GridSpec g = default_grid();
  const auto& rho = g.cuts(Dim::Rho);
  const double v = 0.25 * rho[2] + 0.75 * rho[3];
  const Bracket b = g.bracket(Dim::Rho, v);
  CHECK(b.lo == 2);
  CHECK(b.hi == 3);
  CHECK(b.w_hi == doctest::Approx(0.75));
  const Bracket below = g.bracket(Dim::Rho, 10.0);
  CHECK(below.lo == 0);
  CHECK(below.w_hi * (rho[below.hi] - rho[below.lo]) == doctest::Approx(0.0));
  const auto& th = g.cuts(Dim::Theta);
  const double mid = wrap_angle(0.5 * (th.back() + th.front() + 2.0 * kPi));
  const Bracket w = g.bracket(Dim::Theta, mid);
  CHECK(((w.lo == th.size() - 1 && w.hi == 0) || (w.lo == 0 && w.hi == th.size() - 1)));
  CHECK(w.w_hi == doctest::Approx(0.5));
}

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(0.5) == 0.5);
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double a = uniform(rng, -50.0, 50.0);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(std::abs(std::remainder(a - w, 2.0 * kPi)) < 1e-9);
  }
}
