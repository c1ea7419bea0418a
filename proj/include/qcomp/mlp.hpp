#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qcomp/rng.hpp"
#include "qcomp/score_table.hpp"

namespace qcomp {

/// Fully connected ReLU network with a linear output layer and stored
/// input/output normalization. All parameters live in one flat vector:
/// per layer, the row-major (out x in) weight matrix followed by the bias.
template <typename T>
class MlpT {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;
  using VectorMap = Eigen::Map<Vector>;
  using ConstVectorMap = Eigen::Map<const Vector>;

  MlpT() = default;
  /// Zero parameters and identity normalization.
  explicit MlpT(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  int num_inputs() const { return sizes_.front(); }
  int num_outputs() const { return sizes_.back(); }
  std::size_t num_params() const { return params_.size(); }
  std::size_t num_weights() const;
  std::size_t nonzero_weights() const;
  double sparsity() const;

  MatrixMap weight(std::size_t l) { return {params_.data() + w_off_[l], sizes_[l + 1], sizes_[l]}; }
  ConstMatrixMap weight(std::size_t l) const { return {params_.data() + w_off_[l], sizes_[l + 1], sizes_[l]}; }
  VectorMap bias(std::size_t l) { return {params_.data() + b_off_[l], sizes_[l + 1]}; }
  ConstVectorMap bias(std::size_t l) const { return {params_.data() + b_off_[l], sizes_[l + 1]}; }
  std::size_t weight_offset(std::size_t l) const { return w_off_[l]; }
  std::size_t bias_offset(std::size_t l) const { return b_off_[l]; }

  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  /// True for weight entries, false for biases.
  std::vector<bool> weight_mask() const;

  std::vector<double> input_mean;
  std::vector<double> input_range;
  double output_mean = 0.0;
  double output_range = 1.0;

  /// Raw inputs in, denormalized outputs out. Throws on a size mismatch.
  std::vector<double> forward(std::span<const double> raw) const;
  /// Same as forward without allocation; out must hold num_outputs() values.
  void forward_into(std::span<const double> raw, std::span<double> out) const;

  template <typename U>
  MlpT<U> cast() const;

  bool operator==(const MlpT&) const = default;

 private:
  std::vector<int> sizes_;
  std::vector<std::size_t> w_off_;
  std::vector<std::size_t> b_off_;
  std::vector<T> params_;
};

using Mlp = MlpT<float>;

/// Parameter count of a network with these layer sizes.
std::size_t mlp_param_count(const std::vector<int>& sizes);

/// Layer sizes with `inputs` inputs, the hidden depth and output width of
/// `sizes`, and the narrowest uniform hidden width whose parameter count is
/// at least factor * mlp_param_count(sizes).
std::vector<int> widened_architecture(const std::vector<int>& sizes, double factor, int inputs);

/// Weights uniform in +-sqrt(6 / (fan_in + fan_out)), biases zero.
template <typename T>
void init_glorot(MlpT<T>& net, Rng& rng);

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

/// Penalty multipliers for under-estimating the optimal advisory and
/// over-estimating a suboptimal one.
struct LossConfig {
  double factor_opt = 20.0;
  double factor_sub = 5.0;

  /// Throws unless factor_opt == 4 * factor_sub and both >= 1.
  void validate() const;
  static LossConfig symmetric() { return {1.0, 1.0}; }
  bool is_symmetric() const { return factor_opt == 1.0 && factor_sub == 1.0; }
};

struct LossResult {
  double loss = 0.0;
  ActionScores grad{};
};

/// Mean over the five outputs of factor * (pred - target)^2, where the
/// factor depends on the error sign and on whether the output is optimal.
LossResult asymmetric_loss(const ActionScores& pred, const ActionScores& target, std::size_t opt, const LossConfig& cfg);

/// Per-element factor used by asymmetric_loss.
inline double loss_factor(double err, bool optimal, const LossConfig& cfg) {
  if (optimal) return err < 0.0 ? cfg.factor_opt : 1.0;
  return err > 0.0 ? cfg.factor_sub : 1.0;
}

// ---------------------------------------------------------------------------
// AdaMax
// ---------------------------------------------------------------------------

struct AdaMaxConfig {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
};

/// m <- b1 m + (1 - b1) g;  u <- max(b2 u, |g|);
/// p <- p - alpha / (1 - b1^t) * m / max(u, 1e-12).
template <typename T>
class AdaMax {
 public:
  AdaMax(std::size_t n, AdaMaxConfig cfg) : cfg_(cfg), m_(n, T(0)), u_(n, T(0)) {}

  void step(std::span<T> params, std::span<const T> grads);

  std::size_t t() const { return t_; }
  std::span<const T> m() const { return m_; }
  std::span<const T> u() const { return u_; }
  const AdaMaxConfig& config() const { return cfg_; }

 private:
  AdaMaxConfig cfg_;
  std::vector<T> m_;
  std::vector<T> u_;
  std::size_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Batched forward/backward
// ---------------------------------------------------------------------------

/// Activations of one batch; columns are samples.
template <typename T>
struct ForwardCache {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  std::vector<Matrix> act;  // act[0] = input, act[l+1] = output of layer l
};

/// Forward pass in normalized units; in is (inputs x batch).
template <typename T>
void forward_batch(const MlpT<T>& net, const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& in, ForwardCache<T>& cache);

/// Backpropagates d(loss)/d(output) (outputs x batch) into grads, laid out
/// like net.params().
template <typename T>
void backward_batch(const MlpT<T>& net, const ForwardCache<T>& cache,
                    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& d_out, std::span<T> grads);

/// Single-network score source with seven inputs (rho, theta, psi, v_own,
/// v_int, tau, a_prev index) or five (tau and a_prev fixed by the caller).
class MlpSource final : public ScoreSource {
 public:
  explicit MlpSource(const Mlp& net) : net_(&net) {}
  ActionScores scores(const StateVector& s) const override;
  std::string name() const override { return "mlp"; }

 private:
  const Mlp* net_;
};

}  // namespace qcomp
