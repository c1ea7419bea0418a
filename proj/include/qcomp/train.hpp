#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qcomp/mlp.hpp"
#include "qcomp/score_table.hpp"

namespace qcomp {

enum class LossKind { Asymmetric, Mse };

struct TrainConfig {
  std::vector<int> hidden = {32, 32, 32, 32};
  std::size_t epochs = 200;
  std::size_t batch = 4096;
  AdaMaxConfig optimizer;
  LossKind loss = LossKind::Asymmetric;
  LossConfig factors;
  bool strip_coc_penalty = true;  // train on the table with the band penalty removed
  double coc_penalty = kDefaultCocPenalty;
  bool online_cost_targets = false;  // optimal index from table + online costs
  double online_cost = kDefaultOnlineCost;
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  void validate() const;
  LossConfig effective_loss() const { return loss == LossKind::Mse ? LossConfig::symmetric() : factors; }
};

/// Training data for one network: raw inputs and targets stored
/// column-per-sample, plus the advisory the loss treats as optimal.
struct Dataset {
  std::size_t num_inputs = 0;
  std::vector<double> x;           // num_inputs x n
  std::vector<double> y;           // 5 x n, training targets
  std::vector<std::uint8_t> opt;   // n
  std::vector<std::size_t> states; // table state index per sample

  std::size_t size() const { return opt.size(); }
};

/// Dataset of the (tau index, a_prev) slice: inputs rho, theta, psi, v_own,
/// v_int; targets optionally stripped of the COC penalty.
Dataset slice_dataset(const ScoreTable& table, std::size_t tau_index, Advisory a_prev, const TrainConfig& cfg);

/// Sets input normalization to zero mean and unit range per input and a
/// single output mean/range shared by all five outputs. Constants are rounded
/// to f32 so the text format stores them exactly.
void fit_normalization(Mlp& net, const Dataset& data);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
};

/// Trains net in place with AdaMax on `data`. When `mask` is non-empty,
/// parameters whose mask entry is false are held at zero. Deterministic for
/// a given rng state.
std::vector<EpochStats> train_mlp(Mlp& net, const Dataset& data, const TrainConfig& cfg, std::size_t epochs, Rng& rng,
                                  const std::vector<bool>& mask = {});

/// One network per (tau, a_prev) pair; member selection snaps tau to the
/// nearest cutpoint. Scores are raw network outputs; wrap the array in an
/// AdjustedSource to reapply the COC penalty when it was stripped.
class NetworkArray final : public ScoreSource {
 public:
  NetworkArray() = default;
  NetworkArray(std::vector<double> tau_cuts, std::vector<Mlp> members, bool coc_penalty_stripped);

  ActionScores scores(const StateVector& s) const override;
  std::string name() const override { return "array"; }

  const std::vector<double>& tau_cuts() const { return tau_cuts_; }
  const std::vector<Mlp>& members() const { return members_; }
  std::vector<Mlp>& members() { return members_; }
  const Mlp& member(std::size_t tau_index, Advisory a_prev) const { return members_[member_index(tau_index, a_prev)]; }
  static std::size_t member_index(std::size_t tau_index, Advisory a) { return tau_index * kNumAdvisories + index_of(a); }
  bool coc_penalty_stripped() const { return stripped_; }
  std::size_t num_params() const;

  /// Adjustments that restore the table's semantics (COC penalty reapplied
  /// when the members were trained without it).
  PolicyAdjustments restore_adjustments(double penalty = kDefaultCocPenalty) const;

 private:
  std::vector<double> tau_cuts_;
  std::vector<Mlp> members_;
  bool stripped_ = false;
};

using TrainProgress = std::function<void(std::size_t member, const std::vector<EpochStats>&)>;

/// Trains every (tau, a_prev) member independently with seed streams
/// ("train", member index). Throws on an empty slice or non-finite loss.
NetworkArray train_array(const ScoreTable& table, const TrainConfig& cfg, const TrainProgress& progress = {});

/// Builds and trains a single member; used by train_array and pruning.
Mlp train_member(const ScoreTable& table, std::size_t tau_index, Advisory a_prev, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Pruning
// ---------------------------------------------------------------------------

/// Zeroes floor(step * nonzero) of the nonzero weights with the smallest
/// magnitude, ranked globally across layers; biases are exempt. Ties go to
/// the lower parameter index.
Mlp prune_smallest(const Mlp& net, double step);

struct PruneResult {
  Mlp net;
  double sparsity = 0.0;
  std::size_t removed = 0;
};

/// prune_smallest followed by masked retraining for `retrain_epochs`.
PruneResult prune_iteration(const Mlp& net, double step, const Dataset& data, const TrainConfig& retrain,
                            std::size_t retrain_epochs, Rng& rng);

/// Raw-unit fit of one member on its dataset, judged against the table
/// policy (COC penalty reapplied when the data was stripped).
struct MemberFit {
  double rmse = 0.0;
  double policy_error_pct = 0.0;
};
MemberFit evaluate_member(const Mlp& net, const ScoreTable& table, const Dataset& data, const TrainConfig& cfg);

struct PrunePoint {
  std::size_t iteration = 0;
  double sparsity = 0.0;
  double rmse = 0.0;
  double policy_error_pct = 0.0;
};

/// Iterates prune_iteration until sparsity >= target; point 0 is the input net.
std::vector<PrunePoint> prune_curve(Mlp& net, const ScoreTable& table, const Dataset& data, const TrainConfig& retrain,
                                    double step, double target, std::size_t retrain_epochs, Rng& rng);

/// Prunes every member of the array in place with prune_curve, using seed
/// streams ("prune", member index). Point k aggregates iteration k over all
/// members: sparsity is the mean, RMSE and policy error are pooled over all
/// member datasets.
std::vector<PrunePoint> prune_array(NetworkArray& array, const ScoreTable& table, const TrainConfig& retrain, double step,
                                    double target, std::size_t retrain_epochs);

}  // namespace qcomp
