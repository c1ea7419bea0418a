#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qcomp/rng.hpp"
#include "qcomp/score_table.hpp"

namespace qcomp {

/// Sensor noise standard deviations.
struct NoiseConfig {
  double range = 0.0;    // ft
  double bearing = 0.0;  // rad
  double heading = 0.0;  // rad, relative intruder heading
  double speed = 0.0;    // ft/s, both aircraft

  bool zero() const { return range == 0.0 && bearing == 0.0 && heading == 0.0 && speed == 0.0; }
  bool operator==(const NoiseConfig&) const = default;
};

enum class FusionMode { WorstCase, Sum };

struct EncounterConfig {
  double r_min = 3000.0;  // ft
  double r_max = 15000.0;
  double v_min = 100.0;   // ft/s
  double v_max = 600.0;
  double tau_min = 20.0;  // s, whole seconds
  double tau_max = 60.0;
  double hold = 20.0;             // s flown at tau = 0 after the countdown
  double maneuver_period = 10.0;  // s between intruder turn-rate draws
  std::vector<double> maneuver_turns = {-3.0, -1.5, 0.0, 1.5, 3.0};  // deg/s
  std::size_t intruders = 1;
  NoiseConfig noise = {50.0, 0.01, 0.02, 5.0};

  void validate() const;
};

struct Aircraft {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // rad, counter-clockwise from +x
  double speed = 1.0;    // ft/s

  bool operator==(const Aircraft&) const = default;
};

struct Encounter {
  Aircraft own;
  std::vector<Aircraft> intruders;
  std::vector<std::vector<double>> intruder_turns;  // [intruder][step], deg/s
  std::vector<double> tau;                          // per step, s; ends with zeros
  NoiseConfig noise;
  std::uint64_t seed = 0;  // sensor-noise stream

  std::size_t steps() const { return tau.size(); }
  void validate() const;
  bool operator==(const Encounter&) const = default;
};

/// Initial range uniform in [r_min, r_max], relative bearing and both
/// headings uniform, speeds uniform in [v_min, v_max], tau counting down by
/// one per step from a whole-second start in [tau_min, tau_max] to 0, then
/// held at 0 for `hold` more steps.
Encounter sample_encounter(Rng& rng, const EncounterConfig& cfg);

/// Relative state of an intruder in the ownship frame.
StateVector relative_state(const Aircraft& own, const Aircraft& intruder, double tau, Advisory a_prev);

/// Unscented sigma points for a diagonal Gaussian over (rho, theta, psi,
/// v_own, v_int): 2n + 1 points with kappa = 1, so the center weighs 1/6 and
/// every other point 1/12. Zero noise returns the measurement alone.
std::vector<BeliefSample> belief_samples(const StateVector& measured, const NoiseConfig& noise);

/// worst_case: per-action minimum over intruders, then argmax.
/// sum: per-action sum, then argmax. Throws on an empty list.
Advisory fuse_intruders(std::span<const ActionScores> rows, FusionMode mode);
ActionScores fuse_scores(std::span<const ActionScores> rows, FusionMode mode);

struct RunFlags {
  PolicyAdjustments adjustments;
  FusionMode fusion = FusionMode::WorstCase;
  double nmac_range = 500.0;
  bool record = true;  // keep per-step records
  bool time_queries = true;
};

struct TrajectoryStep {
  std::size_t step = 0;
  double tau = 0.0;
  Aircraft own;
  std::vector<Aircraft> intruders;
  std::vector<StateVector> truth;     // per intruder
  std::vector<StateVector> measured;  // per intruder, the belief center
  Advisory advisory = Advisory::COC;

  bool operator==(const TrajectoryStep&) const = default;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  std::vector<Advisory> advisories;
  bool nmac = false;
  bool alert = false;
  bool reversal = false;
  bool split = false;
  double min_separation = 0.0;
  std::uint64_t digest = 0;    // hash of every advisory and position, bit-exact
  double query_seconds = 0.0;  // wall time spent in policy queries

  /// Equality of everything except timing.
  bool same_outcome(const Trajectory& o) const;
};

/// Simulates one encounter at 1 s steps. Each step measures every intruder
/// with noise, selects the belief-weighted advisory per intruder, fuses, and
/// then advances the ownship along an arc at the advisory's turn rate and
/// each intruder at its scripted rate. NMAC: separation below nmac_range at a
/// step with tau = 0.
Trajectory run_encounter(const ScoreSource& policy, const Encounter& enc, const RunFlags& flags);

struct SimMetrics {
  std::size_t encounters = 0;
  std::size_t nmac = 0;
  std::size_t alert = 0;
  std::size_t reversal = 0;
  std::size_t split = 0;
  double p_nmac = 0.0;
  double p_alert = 0.0;
  double p_reversal = 0.0;
  double p_split = 0.0;
  double query_seconds = 0.0;
  double relative_runtime = 1.0;

  std::string to_kv(bool with_runtime) const;
  static std::string csv_header(bool with_runtime);
  std::string csv_row(const std::string& name, bool with_runtime) const;
};

/// Exact event ratios. relative_runtime = query_seconds / reference_seconds
/// (1 when reference_seconds is 0).
SimMetrics aggregate_metrics(std::span<const Trajectory> trajectories, double reference_seconds = 0.0);

struct SimConfig {
  std::size_t encounters = 10000;
  EncounterConfig encounter;
  RunFlags flags;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  std::size_t keep_trajectories = 10;  // full step records kept for the first N
};

struct SimResult {
  SimMetrics metrics;
  std::vector<Trajectory> trajectories;  // steps recorded only for the first keep_trajectories
};

/// Encounter i draws from stream ("encounter", i), so results do not depend
/// on the worker count.
SimResult run_simulation(const ScoreSource& policy, const SimConfig& cfg, double reference_seconds = 0.0);

/// step,tau,own_x,own_y,own_heading,intruder,int_x,int_y,int_heading,advisory,... per encounter.
void write_trajectories_csv(std::span<const Trajectory> trajectories, const std::filesystem::path& path);

}  // namespace qcomp
