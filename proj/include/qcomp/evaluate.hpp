#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qcomp/score_table.hpp"

namespace qcomp {

/// Table-level fidelity of a predictor.
struct FidelityReport {
  std::string name;
  double rmse = 0.0;
  double policy_error_pct = 0.0;
  /// Row = table advisory, column = predicted advisory; rows sum to 100
  /// (an advisory the table never selects has an all-zero row).
  std::array<std::array<double, kNumAdvisories>, kNumAdvisories> confusion{};
  std::array<std::array<std::size_t, kNumAdvisories>, kNumAdvisories> counts{};
  std::size_t states = 0;
  std::size_t storage_bytes = 0;
  std::size_t params = 0;

  /// Share of states whose table advisory is a, in percent.
  double table_share_pct(Advisory a) const;
  std::string to_kv() const;
  static std::string csv_header();
  std::string csv_row() const;
};

/// Evaluates pred at every grid state. Throws Error naming the state on a
/// non-finite prediction. Deterministic for any thread count.
FidelityReport evaluate_predictor(const ScoreSource& pred, const ScoreTable& table, std::size_t threads = 0);

// ---------------------------------------------------------------------------
// Policy slices
// ---------------------------------------------------------------------------

/// A downrange/crossrange plane with the remaining state variables fixed.
/// x is along the ownship heading, y to its left.
struct SliceSpec {
  double psi = std::numbers::pi;
  double v_own = 300.0;
  double v_int = 300.0;
  double tau = 0.0;
  Advisory a_prev = Advisory::COC;
  double x_min = -4000.0;
  double x_max = 12000.0;
  double y_min = -8000.0;
  double y_max = 8000.0;
  std::size_t res_x = 120;
  std::size_t res_y = 120;
};

struct PolicySlice {
  SliceSpec spec;
  std::vector<Advisory> cells;  // row-major, y index outer

  double x_at(std::size_t i) const;
  double y_at(std::size_t j) const;
  Advisory at(std::size_t i, std::size_t j) const { return cells[j * spec.res_x + i]; }
};

/// State queried for cell (i, j) of a slice.
StateVector slice_state(const SliceSpec& spec, std::size_t i, std::size_t j);

/// Queries pred at every cell center. Throws std::invalid_argument when a
/// resolution is below 2.
PolicySlice policy_slice(const ScoreSource& pred, const SliceSpec& spec, const PolicyAdjustments& adj = {});

/// CSV of advisory indices (one line per y row) and a key=value sidecar with
/// the fixed state values.
void write_slice(const PolicySlice& slice, const std::filesystem::path& csv, const std::filesystem::path& sidecar);

// ---------------------------------------------------------------------------
// Runtime benchmark
// ---------------------------------------------------------------------------

struct BenchResult {
  std::string name;
  double mean_ns = 0.0;
  double p99_ns = 0.0;
  double rel_mean = 0.0;  // normalized to the first predictor
  double rel_p99 = 0.0;
};

/// Uniform random in-grid query states (a_prev uniform over advisories).
std::vector<StateVector> bench_queries(const GridSpec& grid, std::size_t n, std::uint64_t seed);

/// Runs the same query stream through every predictor on the calling thread.
/// The first 10% of queries warm up and are not timed. The mean comes from
/// one timed loop; p99 from a second, per-query timed loop. The first
/// predictor is the reference for the relative figures. queries >= 1000.
std::vector<BenchResult> bench_runtime(std::span<const ScoreSource* const> preds, std::span<const StateVector> queries);

}  // namespace qcomp
