#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "qcomp/grid.hpp"
#include "qcomp/types.hpp"

namespace qcomp {

/// Anything that maps a state to five advisory scores: the table itself or a
/// compressed stand-in for it.
class ScoreSource {
 public:
  virtual ~ScoreSource() = default;
  virtual ActionScores scores(const StateVector& s) const = 0;
  virtual std::string name() const = 0;
};

/// Dense f32 score table over a GridSpec. Immutable after construction.
class ScoreTable {
 public:
  /// Throws std::invalid_argument on a bad grid, a size mismatch or a
  /// non-finite score.
  ScoreTable(GridSpec grid, std::vector<float> scores);

  const GridSpec& grid() const { return grid_; }
  std::span<const float> scores() const { return scores_; }
  std::size_t num_states() const { return grid_.num_states(); }

  ActionScores row(std::size_t state_index) const;
  ActionScores lookup_nearest(const StateVector& s) const;
  std::size_t nearest_index(const StateVector& s) const { return grid_.state_index(grid_.nearest(s)); }

  bool operator==(const ScoreTable&) const = default;

 private:
  GridSpec grid_;
  std::vector<float> scores_;
};

/// Nearest-neighbour lookup into a table.
class TableSource final : public ScoreSource {
 public:
  explicit TableSource(const ScoreTable& table) : table_(&table) {}
  ActionScores scores(const StateVector& s) const override { return table_->lookup_nearest(s); }
  std::string name() const override { return "table"; }

 private:
  const ScoreTable* table_;
};

/// argmax with ties going to the lowest advisory index.
Advisory optimal_action(const ActionScores& scores);

struct BeliefSample {
  StateVector state;
  double weight = 0.0;
};

/// Belief-weighted score vector: sum_i w_i * Q(s_i, .). Throws on an empty set.
ActionScores belief_scores(const ScoreSource& source, std::span<const BeliefSample> samples);
Advisory belief_action(const ScoreSource& source, std::span<const BeliefSample> samples);

/// Closest point of approach of straight-line relative motion.
struct CpaResult {
  double dx = 0.0;
  double dy = 0.0;
  double t_cpa = 0.0;
  double x_cpa = 0.0;
  double y_cpa = 0.0;
  double d_cpa = 0.0;
  bool degenerate = false;  // zero relative velocity; t_cpa = 0, d_cpa = rho
};

CpaResult cpa_geometry(const StateVector& s);

inline constexpr double kCocBandDistance = 4000.0;  // ft
inline constexpr double kDefaultCocPenalty = -15.0;
inline constexpr double kDefaultOnlineCost = 1.0;

/// a_prev != COC, t_cpa >= 0 and d_cpa < 4000 ft. Shared by table generation
/// and by penalty removal/reapplication.
bool in_coc_band(const StateVector& s);

enum class PenaltyMode { Apply, Strip };

/// Adds (Apply) or subtracts (Strip) `penalty` on the COC score inside the
/// band. Strip(Apply(x)) == x whenever x + penalty is exact in double, which
/// holds for every table value (see quantize_score).
ActionScores coc_penalty(ActionScores scores, const StateVector& s, PenaltyMode mode,
                         double penalty = kDefaultCocPenalty);

/// After a strong turn, lowers COC, WL and WR by c.
ActionScores online_costs(ActionScores scores, Advisory a_prev, double c = kDefaultOnlineCost);

/// Query-time score adjustments applied on top of any source.
struct PolicyAdjustments {
  bool reapply_coc_penalty = false;
  double coc_penalty = kDefaultCocPenalty;
  bool online_costs = false;
  double online_cost = kDefaultOnlineCost;

  ActionScores apply(ActionScores scores, const StateVector& s) const;
  bool any() const { return reapply_coc_penalty || online_costs; }
};

/// Wraps a source with PolicyAdjustments. Does not own the inner source.
class AdjustedSource final : public ScoreSource {
 public:
  AdjustedSource(const ScoreSource& inner, PolicyAdjustments adj) : inner_(&inner), adj_(adj) {}
  ActionScores scores(const StateVector& s) const override { return adj_.apply(inner_->scores(s), s); }
  std::string name() const override { return inner_->name(); }

 private:
  const ScoreSource* inner_;
  PolicyAdjustments adj_;
};

/// Rounds a score to a multiple of 2^-16 and then to f32. Any such value
/// plus or minus a penalty with at most 16 fractional bits is exact in double.
float quantize_score(double v);

/// Returns a copy of the table with the COC penalty stripped (or applied) on
/// every band state.
ScoreTable transform_coc_penalty(const ScoreTable& table, PenaltyMode mode, double penalty = kDefaultCocPenalty);

/// Mean and population standard deviation over all stored scores.
struct ScoreStats {
  double mean = 0.0;
  double stddev = 0.0;
  float min = 0.0f;
  float max = 0.0f;
};
ScoreStats score_stats(const ScoreTable& table);

}  // namespace qcomp
