#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "qcomp/grid.hpp"
#include "qcomp/rng.hpp"
#include "qcomp/score_table.hpp"

namespace qcomp::testing {

inline GridSpec make_grid(std::vector<double> rho, std::vector<double> theta, std::vector<double> psi,
                          std::vector<double> v_own, std::vector<double> v_int, std::vector<double> tau) {
  return GridSpec({std::move(rho), std::move(theta), std::move(psi), std::move(v_own), std::move(v_int), std::move(tau)});
}

// 3 ranges, 3 angles each way, 2 speeds each, 2 taus: 216 points.
inline GridSpec small_grid() {
  return make_grid({500.0, 2000.0, 8000.0}, uniform_angles(3), uniform_angles(3), {100.0, 400.0}, {100.0, 400.0}, {0.0, 10.0});
}

// Random table whose values are exact on the quantization lattice.
inline ScoreTable random_table(const GridSpec& grid, std::uint64_t seed, double lo = -20.0, double hi = 0.0) {
  Rng rng(seed);
  std::vector<float> s(grid.num_states() * kNumAdvisories);
  for (float& v : s) v = quantize_score(uniform(rng, lo, hi));
  return ScoreTable(grid, std::move(s));
}

inline StateVector random_state(Rng& rng, double rho_max = 70000.0) {
  StateVector s;
  s.rho = uniform(rng, 0.0, rho_max);
  s.theta = wrap_angle(uniform(rng, -4.0, 4.0));
  s.psi = wrap_angle(uniform(rng, -4.0, 4.0));
  s.v_own = uniform(rng, 50.0, 700.0);
  s.v_int = uniform(rng, 50.0, 700.0);
  s.tau = uniform(rng, 0.0, 120.0);
  s.a_prev = advisory_from_index(rng() % kNumAdvisories);
  return s;
}

inline ActionScores random_row(Rng& rng, double lo = -50.0, double hi = 0.0) {
  ActionScores r;
  for (double& v : r) v = uniform(rng, lo, hi);
  return r;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("qcomp_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace qcomp::testing
