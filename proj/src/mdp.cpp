#include "qcomp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "qcomp/parallel.hpp"

namespace qcomp {

namespace {

struct Kinematic {
  double x, y, heading;
};

Kinematic advance(Kinematic k, double speed, double turn_rad_s, double dt) {
  if (std::abs(turn_rad_s) < 1e-12) {
    k.x += speed * dt * std::cos(k.heading);
    k.y += speed * dt * std::sin(k.heading);
    return k;
  }
  const double h1 = k.heading + turn_rad_s * dt;
  const double radius = speed / turn_rad_s;
  k.x += radius * (std::sin(h1) - std::sin(k.heading));
  k.y += radius * (std::cos(k.heading) - std::cos(h1));
  k.heading = h1;
  return k;
}

}  // namespace

void MdpConfig::validate() const {
  grid.validate();
  if (!(discount >= 0.0 && discount < 1.0)) throw std::invalid_argument("mdp.discount must lie in [0, 1)");
  if (!(tol > 0.0)) throw std::invalid_argument("mdp.tol must be > 0");
  if (!(dt > 0.0)) throw std::invalid_argument("mdp.dt must be > 0");
  if (!(nmac_range >= 0.0)) throw std::invalid_argument("mdp.nmac_range must be >= 0");
  if (intruder_turns.empty() || intruder_turns.size() != intruder_probs.size()) {
    throw std::invalid_argument("mdp.intruder_turns and mdp.intruder_probs must be non-empty and equal length");
  }
  double total = 0.0;
  for (double p : intruder_probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("mdp.intruder_probs must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("mdp.intruder_probs must sum to 1");
  if (max_sweeps == 0) throw std::invalid_argument("mdp.max_sweeps must be >= 1");
}

StateVector step_dynamics(const StateVector& s, Advisory a, double intruder_turn_deg, double dt) {
  const Kinematic own = advance({0.0, 0.0, 0.0}, s.v_own, deg2rad(turn_rate_deg(a)), dt);
  const Kinematic intruder = advance({s.rho * std::cos(s.theta), s.rho * std::sin(s.theta), s.psi}, s.v_int,
                                     deg2rad(intruder_turn_deg), dt);
  const double dx = intruder.x - own.x;
  const double dy = intruder.y - own.y;
  const double c = std::cos(own.heading);
  const double sn = std::sin(own.heading);
  const double rx = c * dx + sn * dy;
  const double ry = -sn * dx + c * dy;

  StateVector next = s;
  next.rho = std::hypot(rx, ry);
  next.theta = wrap_angle(std::atan2(ry, rx));
  next.psi = wrap_angle(intruder.heading - own.heading);
  next.tau = std::max(0.0, s.tau - dt);
  next.a_prev = a;
  return next;
}

bool is_nmac(const MdpConfig& cfg, const StateVector& s) { return s.tau <= 0.0 && s.rho < cfg.nmac_range; }

double reward(const MdpConfig& cfg, const StateVector& s, Advisory a) {
  const RewardWeights& w = cfg.rewards;
  double r = 0.0;
  if (is_nmac(cfg, s)) r += w.nmac_penalty;
  if (is_alert(a)) {
    r += w.alert_cost;
    if (is_strong(a)) r += w.strong_alert_cost;
  }
  if (is_reversal(s.a_prev, a)) r += w.reversal_cost;
  if (a == Advisory::COC && in_coc_band(s)) r += w.coc_band_penalty;
  return r;
}

double reward_bound(const RewardWeights& w) {
  return std::abs(w.nmac_penalty) + std::abs(w.alert_cost) + std::abs(w.strong_alert_cost) +
         std::abs(w.reversal_cost) + std::abs(w.coc_band_penalty);
}

NonConvergenceError::NonConvergenceError(std::size_t sweeps, double residual)
    : Error([&] {
        std::ostringstream os;
        os << "value iteration did not converge after " << sweeps << " sweeps (residual " << residual << ")";
        return os.str();
      }()),
      sweeps_(sweeps),
      residual_(residual) {}

BellmanOperator::BellmanOperator(const MdpConfig& cfg, std::size_t threads) : cfg_(cfg), threads_(threads) {
  cfg_.validate();
  const GridSpec& grid = cfg_.grid;
  for (std::size_t k = 0; k < kNumContinuousDims; ++k) {
    if (grid.all_cuts()[k].size() > std::numeric_limits<std::uint16_t>::max()) {
      throw std::invalid_argument("mdp: too many cutpoints");
    }
  }
  std::size_t stride = 1;
  for (std::size_t k = kNumContinuousDims; k-- > 0;) {
    strides_[k] = stride;
    stride *= grid.all_cuts()[k].size();
  }

  const std::size_t n_states = grid.num_states();
  rewards_.resize(n_states * kNumAdvisories);
  parallel_for(n_states, threads_, [&](std::size_t i) {
    const StateVector s = grid.state_at(i);
    for (Advisory a : kAllAdvisories) rewards_[i * kNumAdvisories + index_of(a)] = reward(cfg_, s, a);
  });

  const std::size_t n_turns = cfg_.intruder_turns.size();
  const std::size_t n_points = grid.num_points();
  succ_.resize(n_points * kNumAdvisories * n_turns);
  parallel_for(n_points, threads_, [&](std::size_t p) {
    // a_prev does not influence the dynamics; use the COC state of the point.
    const StateVector s = grid.state_at(p * kNumAdvisories);
    for (Advisory a : kAllAdvisories) {
      for (std::size_t j = 0; j < n_turns; ++j) {
        const StateVector next = step_dynamics(s, a, cfg_.intruder_turns[j], cfg_.dt);
        Successor& out = succ_[(p * kNumAdvisories + index_of(a)) * n_turns + j];
        out.nmac = is_nmac(cfg_, next);
        const std::array<std::pair<Dim, double>, 4> axes = {
            {{Dim::Rho, next.rho}, {Dim::Theta, next.theta}, {Dim::Psi, next.psi}, {Dim::Tau, next.tau}}};
        for (std::size_t k = 0; k < 4; ++k) {
          const Bracket b = grid.bracket(axes[k].first, axes[k].second);
          out.axes[k] = {static_cast<std::uint16_t>(b.lo), static_cast<std::uint16_t>(b.hi), b.w_hi};
        }
      }
    }
  });
}

std::vector<double> BellmanOperator::apply(const std::vector<double>& q) const {
  const GridSpec& grid = cfg_.grid;
  const std::size_t n_states = grid.num_states();
  if (q.size() != n_states * kNumAdvisories) throw std::invalid_argument("bellman: q has wrong size");

  std::vector<double> v(n_states);
  for (std::size_t i = 0; i < n_states; ++i) {
    const double* row = q.data() + i * kNumAdvisories;
    v[i] = *std::max_element(row, row + kNumAdvisories);
  }

  const std::size_t n_turns = cfg_.intruder_turns.size();
  const std::size_t n_vint = grid.size(Dim::VInt);
  const std::size_t n_vown = grid.size(Dim::VOwn);
  const std::array<std::size_t, 4> axis_dim = {0, 1, 2, 5};
  std::vector<double> out(q.size());
  // Entering an NMAC ends the episode; the penalty is collected on arrival.
  const double nmac_value = cfg_.rewards.nmac_penalty;

  parallel_for(grid.num_points(), threads_, [&](std::size_t p) {
    // Speeds are preserved; recover their indices from the point index.
    const std::size_t i_vint = (p / strides_[4]) % n_vint;
    const std::size_t i_vown = (p / strides_[3]) % n_vown;
    const std::size_t speed_base = i_vown * strides_[3] + i_vint * strides_[4];

    std::array<double, kNumAdvisories> expected{};
    for (Advisory a : kAllAdvisories) {
      double e = 0.0;
      for (std::size_t j = 0; j < n_turns; ++j) {
        const Successor& sc = succ_[(p * kNumAdvisories + index_of(a)) * n_turns + j];
        if (sc.nmac) {
          e += cfg_.intruder_probs[j] * nmac_value;
          continue;
        }
        double acc = 0.0;
        for (unsigned corner = 0; corner < 16; ++corner) {
          double w = 1.0;
          std::size_t point = speed_base;
          for (std::size_t k = 0; k < 4; ++k) {
            const AxisWeight& ax = sc.axes[k];
            const bool upper = (corner >> k) & 1u;
            const double wk = upper ? ax.w_hi : 1.0 - ax.w_hi;
            if (wk == 0.0) {
              w = 0.0;
              break;
            }
            w *= wk;
            point += (upper ? ax.hi : ax.lo) * strides_[axis_dim[k]];
          }
          if (w == 0.0) continue;
          acc += w * v[point * kNumAdvisories + index_of(a)];
        }
        e += cfg_.intruder_probs[j] * cfg_.discount * acc;
      }
      expected[index_of(a)] = e;
    }
    for (std::size_t ap = 0; ap < kNumAdvisories; ++ap) {
      const std::size_t base = (p * kNumAdvisories + ap) * kNumAdvisories;
      for (std::size_t a = 0; a < kNumAdvisories; ++a) {
        out[base + a] = rewards_[base + a] + expected[a];
      }
    }
  });
  return out;
}

double BellmanOperator::residual(const std::vector<double>& q) const {
  const std::vector<double> next = apply(q);
  double r = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) r = std::max(r, std::abs(next[i] - q[i]));
  return r;
}

ValueIterationResult value_iterate(const MdpConfig& cfg, std::size_t threads) {
  const BellmanOperator op(cfg, threads);
  std::vector<double> q(op.num_states() * kNumAdvisories, 0.0);
  std::vector<double> history;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t sweeps = 0;
  while (sweeps < cfg.max_sweeps) {
    std::vector<double> next = op.apply(q);
    residual = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) residual = std::max(residual, std::abs(next[i] - q[i]));
    q = std::move(next);
    ++sweeps;
    history.push_back(residual);
    if (residual <= cfg.tol) break;
  }
  if (residual > cfg.tol) throw NonConvergenceError(sweeps, residual);

  std::vector<float> scores(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) scores[i] = quantize_score(q[i]);
  return {ScoreTable(cfg.grid, std::move(scores)), std::move(q), sweeps, residual, std::move(history)};
}

}  // namespace qcomp
