#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qcomp/score_table.hpp"

namespace qcomp {

inline constexpr std::size_t kNumFeatures = 7;
using Features = std::array<double, kNumFeatures>;

/// rho, theta, psi, v_own, v_int, tau, a_prev index.
Features state_features(const StateVector& s);
const char* feature_name(std::size_t i);

// ---------------------------------------------------------------------------
// Linear regression
// ---------------------------------------------------------------------------

/// y = [x_norm, 1] * W with features normalized to zero mean and unit range.
class LinearModel final : public ScoreSource {
 public:
  using Weights = Eigen::Matrix<double, kNumFeatures + 1, static_cast<int>(kNumAdvisories)>;

  Weights weights = Weights::Zero();  // rows 0..6 features, row 7 bias
  Features feature_mean{};
  Features feature_scale{};
  bool used_ridge = false;
  double ridge_lambda = 0.0;

  ActionScores predict(const Features& x) const;
  ActionScores scores(const StateVector& s) const override { return predict(state_features(s)); }
  std::string name() const override { return "linear"; }
  std::size_t storage_bytes() const { return 4 * (static_cast<std::size_t>(weights.size()) + 2 * kNumFeatures); }
};

class RankDeficientError : public Error {
 public:
  RankDeficientError(std::size_t feature, const std::string& what) : Error(what), feature_(feature) {}
  /// Offending feature index, or kNumFeatures for the bias column.
  std::size_t feature() const { return feature_; }

 private:
  std::size_t feature_;
};

struct LinearFitOptions {
  bool allow_ridge = true;
};

/// Normal-equation least squares over (X, Y). When the Gram matrix is
/// singular, adds 1e-8 * trace to its diagonal if allowed, otherwise throws
/// RankDeficientError naming the first dependent feature.
LinearModel fit_linear(std::span<const Features> x, std::span<const ActionScores> y, LinearFitOptions opts = {});
LinearModel fit_linear(const ScoreTable& table, LinearFitOptions opts = {});

/// Text form: feature means, feature scales, then the 8 weight rows, one
/// comma-separated line each, 17 significant digits.
std::string encode_linear(const LinearModel& m);
LinearModel decode_linear(std::string_view text);

// ---------------------------------------------------------------------------
// Regression tree
// ---------------------------------------------------------------------------

struct TreeNode {
  bool leaf = true;
  std::uint8_t dim = 0;
  float threshold = 0.0f;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  ActionScores value{};  // leaf means
};

inline constexpr std::size_t kTreeDecisionBytes = 12;
inline constexpr std::size_t kTreeLeafBytes = 20;

class RegressionTree final : public ScoreSource {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<TreeNode> nodes, int max_depth);

  /// Routes x down the tree; x[dim] <= threshold goes left.
  ActionScores predict(const Features& x) const;
  ActionScores scores(const StateVector& s) const override { return predict(state_features(s)); }
  std::string name() const override { return "tree"; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int max_depth() const { return max_depth_; }
  std::size_t num_leaves() const;
  std::size_t num_decisions() const { return nodes_.size() - num_leaves(); }
  int depth() const;
  std::size_t storage_bytes() const { return num_decisions() * kTreeDecisionBytes + num_leaves() * kTreeLeafBytes; }

 private:
  std::vector<TreeNode> nodes_;
  int max_depth_ = 0;
};

struct TreeFitOptions {
  int max_depth = 8;
  std::size_t max_candidates = 32;  // thresholds per dimension per node
  std::size_t min_leaf = 1;
  std::size_t threads = 0;
};

/// Greedy top-down CART: each split minimizes the summed per-action squared
/// error of the two children. Ties go to the lowest (dim, threshold).
RegressionTree fit_tree(std::span<const Features> x, std::span<const ActionScores> y, const TreeFitOptions& opts);
RegressionTree fit_tree(const ScoreTable& table, const TreeFitOptions& opts);

/// "ACDT" | u32 version | u32 max_depth | u32 node count | nodes.
/// Decision: u8 1, u8 dim, f32 threshold, u32 left, u32 right.
/// Leaf: u8 0, 5 x f32. Leaf values are stored as f32.
std::vector<std::uint8_t> encode_tree(const RegressionTree& tree);
RegressionTree decode_tree(std::span<const std::uint8_t> bytes);

/// Features and score rows of every table state, in state order.
void table_dataset(const ScoreTable& table, std::vector<Features>& x, std::vector<ActionScores>& y);

}  // namespace qcomp
