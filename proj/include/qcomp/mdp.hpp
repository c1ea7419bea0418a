#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qcomp/grid.hpp"
#include "qcomp/score_table.hpp"

namespace qcomp {

struct RewardWeights {
  double nmac_penalty = -100.0;
  double alert_cost = -0.5;
  double strong_alert_cost = -0.5;  // added on top of alert_cost for SL/SR
  double reversal_cost = -2.0;
  double coc_band_penalty = kDefaultCocPenalty;
};

/// Relative-geometry MDP used to generate a desk-scale score table.
struct MdpConfig {
  GridSpec grid = default_grid();
  double discount = 0.97;
  RewardWeights rewards;
  double nmac_range = 500.0;                             // ft
  std::vector<double> intruder_turns = {-1.5, 0.0, 1.5};  // deg/s
  std::vector<double> intruder_probs = {0.25, 0.5, 0.25};
  double dt = 1.0;  // s
  double tol = 1e-6;
  std::size_t max_sweeps = 5000;

  /// Throws std::invalid_argument on the first violated constraint.
  void validate() const;
};

/// Advances the relative geometry by dt with both aircraft flying constant
/// speed along circular arcs; the ownship turns at the advisory rate.
StateVector step_dynamics(const StateVector& s, Advisory a, double intruder_turn_deg, double dt);

/// rho inside nmac_range while tau is 0.
bool is_nmac(const MdpConfig& cfg, const StateVector& s);

/// Immediate reward of taking a in s.
double reward(const MdpConfig& cfg, const StateVector& s, Advisory a);

/// Largest possible |reward| per step; bounds every Q by this / (1 - discount).
double reward_bound(const RewardWeights& w);

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(std::size_t sweeps, double residual);
  std::size_t sweeps() const { return sweeps_; }
  double residual() const { return residual_; }

 private:
  std::size_t sweeps_;
  double residual_;
};

/// Precomputed rewards and successor distributions for one MdpConfig.
/// Successors are projected onto the grid with linear weights along rho,
/// theta, psi and tau; speeds are constant and a_prev is the action taken.
/// A successor that is an NMAC is terminal and worth nmac_penalty, so
///   Q(s,a) = r(s,a) + sum_j p_j * (nmac(s'_j) ? nmac_penalty : discount * V(s'_j)).
class BellmanOperator {
 public:
  explicit BellmanOperator(const MdpConfig& cfg, std::size_t threads = 0);

  /// One Jacobi sweep: returns T(q). q is indexed [state][action].
  std::vector<double> apply(const std::vector<double>& q) const;
  /// max |T(q) - q|.
  double residual(const std::vector<double>& q) const;

  const MdpConfig& config() const { return cfg_; }
  std::size_t num_states() const { return cfg_.grid.num_states(); }

 private:
  struct AxisWeight {
    std::uint16_t lo;
    std::uint16_t hi;
    double w_hi;
  };
  // Per (point, action, intruder turn): brackets along rho, theta, psi, tau.
  struct Successor {
    std::array<AxisWeight, 4> axes;
    bool nmac = false;
  };

  MdpConfig cfg_;
  std::size_t threads_;
  std::vector<double> rewards_;      // [state][action]
  std::vector<Successor> succ_;      // [point][action][turn]
  std::array<std::size_t, kNumContinuousDims> strides_{};
};

struct ValueIterationResult {
  ScoreTable table;
  std::vector<double> q;  // unquantized values the table was rounded from
  std::size_t sweeps = 0;
  double residual = 0.0;
  std::vector<double> residual_history;
};

/// Jacobi value iteration from Q = 0 until max |dQ| <= cfg.tol. Table values
/// are rounded with quantize_score. Throws NonConvergenceError when
/// cfg.max_sweeps is exhausted.
ValueIterationResult value_iterate(const MdpConfig& cfg, std::size_t threads = 0);

}  // namespace qcomp
