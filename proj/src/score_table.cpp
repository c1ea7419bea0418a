#include "qcomp/score_table.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qcomp {

ScoreTable::ScoreTable(GridSpec grid, std::vector<float> scores)
    : grid_(std::move(grid)), scores_(std::move(scores)) {
  grid_.validate();
  if (scores_.size() != grid_.num_states() * kNumAdvisories) {
    throw std::invalid_argument("score table: expected " + std::to_string(grid_.num_states() * kNumAdvisories) +
                                " scores, got " + std::to_string(scores_.size()));
  }
  for (std::size_t i = 0; i < scores_.size(); ++i) {
    if (!std::isfinite(scores_[i])) {
      throw std::invalid_argument("score table: non-finite score at flat index " + std::to_string(i));
    }
  }
}

ActionScores ScoreTable::row(std::size_t state_index) const {
  const float* p = scores_.data() + state_index * kNumAdvisories;
  return {p[0], p[1], p[2], p[3], p[4]};
}

ActionScores ScoreTable::lookup_nearest(const StateVector& s) const { return row(nearest_index(s)); }

Advisory optimal_action(const ActionScores& scores) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < kNumAdvisories; ++a) {
    if (scores[a] > scores[best]) best = a;
  }
  return static_cast<Advisory>(best);
}

ActionScores belief_scores(const ScoreSource& source, std::span<const BeliefSample> samples) {
  if (samples.empty()) throw std::invalid_argument("belief: empty sample set");
  ActionScores total{};
  for (const auto& sample : samples) {
    if (sample.weight == 0.0) continue;
    const ActionScores q = source.scores(sample.state);
    for (std::size_t a = 0; a < kNumAdvisories; ++a) total[a] += sample.weight * q[a];
  }
  return total;
}

Advisory belief_action(const ScoreSource& source, std::span<const BeliefSample> samples) {
  return optimal_action(belief_scores(source, samples));
}

CpaResult cpa_geometry(const StateVector& s) {
  CpaResult r;
  r.dx = s.v_int * std::cos(s.psi) - s.v_own;
  r.dy = s.v_int * std::sin(s.psi);
  const double x0 = s.rho * std::cos(s.theta);
  const double y0 = s.rho * std::sin(s.theta);
  const double speed2 = r.dx * r.dx + r.dy * r.dy;
  if (speed2 == 0.0) {
    r.degenerate = true;
    r.t_cpa = 0.0;
    r.x_cpa = x0;
    r.y_cpa = y0;
    r.d_cpa = s.rho;
    return r;
  }
  r.t_cpa = (-x0 * r.dx - y0 * r.dy) / speed2;
  r.x_cpa = x0 + r.t_cpa * r.dx;
  r.y_cpa = y0 + r.t_cpa * r.dy;
  r.d_cpa = std::sqrt(r.x_cpa * r.x_cpa + r.y_cpa * r.y_cpa);
  return r;
}

bool in_coc_band(const StateVector& s) {
  if (s.a_prev == Advisory::COC) return false;
  const CpaResult cpa = cpa_geometry(s);
  return cpa.t_cpa >= 0.0 && cpa.d_cpa < kCocBandDistance;
}

ActionScores coc_penalty(ActionScores scores, const StateVector& s, PenaltyMode mode, double penalty) {
  if (!in_coc_band(s)) return scores;
  if (mode == PenaltyMode::Apply) {
    scores[0] += penalty;
  } else {
    scores[0] -= penalty;
  }
  return scores;
}

ActionScores online_costs(ActionScores scores, Advisory a_prev, double c) {
  if (!is_strong(a_prev)) return scores;
  scores[index_of(Advisory::COC)] -= c;
  scores[index_of(Advisory::WL)] -= c;
  scores[index_of(Advisory::WR)] -= c;
  return scores;
}

ActionScores PolicyAdjustments::apply(ActionScores scores, const StateVector& s) const {
  if (reapply_coc_penalty) scores = qcomp::coc_penalty(scores, s, PenaltyMode::Apply, coc_penalty);
  if (online_costs) scores = qcomp::online_costs(scores, s.a_prev, online_cost);
  return scores;
}

float quantize_score(double v) {
  constexpr double kQuantum = 65536.0;  // 2^16
  return static_cast<float>(std::nearbyint(v * kQuantum) / kQuantum);
}

ScoreTable transform_coc_penalty(const ScoreTable& table, PenaltyMode mode, double penalty) {
  const GridSpec& grid = table.grid();
  std::vector<float> out(table.scores().begin(), table.scores().end());
  for (std::size_t i = 0; i < grid.num_states(); ++i) {
    const StateVector s = grid.state_at(i);
    if (!in_coc_band(s)) continue;
    const ActionScores row = coc_penalty(table.row(i), s, mode, penalty);
    out[i * kNumAdvisories] = static_cast<float>(row[0]);
  }
  return ScoreTable(grid, std::move(out));
}

ScoreStats score_stats(const ScoreTable& table) {
  ScoreStats st;
  const auto v = table.scores();
  if (v.empty()) return st;
  double sum = 0.0;
  for (float x : v) sum += x;
  st.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (float x : v) ss += (x - st.mean) * (x - st.mean);
  st.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  st.min = *mn;
  st.max = *mx;
  return st;
}

}  // namespace qcomp
