#include "qcomp/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qcomp {

template <typename T>
MlpT<T>::MlpT(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("mlp: need at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw std::invalid_argument("mlp: layer sizes must be positive");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(off);
    off += static_cast<std::size_t>(sizes_[l]) * static_cast<std::size_t>(sizes_[l + 1]);
    b_off_.push_back(off);
    off += static_cast<std::size_t>(sizes_[l + 1]);
  }
  params_.assign(off, T(0));
  input_mean.assign(static_cast<std::size_t>(sizes_.front()), 0.0);
  input_range.assign(static_cast<std::size_t>(sizes_.front()), 1.0);
}

template <typename T>
std::size_t MlpT<T>::num_weights() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) n += static_cast<std::size_t>(sizes_[l]) * static_cast<std::size_t>(sizes_[l + 1]);
  return n;
}

template <typename T>
std::size_t MlpT<T>::nonzero_weights() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    const std::size_t count = static_cast<std::size_t>(sizes_[l]) * static_cast<std::size_t>(sizes_[l + 1]);
    for (std::size_t i = 0; i < count; ++i) n += params_[w_off_[l] + i] != T(0);
  }
  return n;
}

template <typename T>
double MlpT<T>::sparsity() const {
  const std::size_t total = num_weights();
  return total == 0 ? 0.0 : 1.0 - static_cast<double>(nonzero_weights()) / static_cast<double>(total);
}

template <typename T>
std::vector<bool> MlpT<T>::weight_mask() const {
  std::vector<bool> mask(params_.size(), false);
  for (std::size_t l = 0; l < num_layers(); ++l) {
    std::fill(mask.begin() + static_cast<std::ptrdiff_t>(w_off_[l]), mask.begin() + static_cast<std::ptrdiff_t>(b_off_[l]), true);
  }
  return mask;
}

template <typename T>
void MlpT<T>::forward_into(std::span<const double> raw, std::span<double> out) const {
  if (raw.size() != static_cast<std::size_t>(num_inputs())) {
    throw std::invalid_argument("mlp: expected " + std::to_string(num_inputs()) + " inputs, got " + std::to_string(raw.size()));
  }
  if (out.size() != static_cast<std::size_t>(num_outputs())) throw std::invalid_argument("mlp: output size mismatch");
  thread_local std::vector<T> a;
  thread_local std::vector<T> b;
  int widest = 0;
  for (int s : sizes_) widest = std::max(widest, s);
  if (a.size() < static_cast<std::size_t>(widest)) {
    a.resize(static_cast<std::size_t>(widest));
    b.resize(static_cast<std::size_t>(widest));
  }
  for (std::size_t i = 0; i < raw.size(); ++i) a[i] = static_cast<T>((raw[i] - input_mean[i]) / input_range[i]);

  const std::size_t layers = num_layers();
  for (std::size_t l = 0; l < layers; ++l) {
    const int n_in = sizes_[l];
    const int n_out = sizes_[l + 1];
    const T* w = params_.data() + w_off_[l];
    const T* bias = params_.data() + b_off_[l];
    const bool hidden = l + 1 < layers;
    for (int o = 0; o < n_out; ++o) {
      const T* row = w + static_cast<std::size_t>(o) * static_cast<std::size_t>(n_in);
      T acc = bias[o];
      for (int i = 0; i < n_in; ++i) acc += row[i] * a[static_cast<std::size_t>(i)];
      b[static_cast<std::size_t>(o)] = hidden && acc < T(0) ? T(0) : acc;
    }
    std::swap(a, b);
  }
  for (std::size_t o = 0; o < out.size(); ++o) out[o] = static_cast<double>(a[o]) * output_range + output_mean;
}

template <typename T>
std::vector<double> MlpT<T>::forward(std::span<const double> raw) const {
  std::vector<double> out(static_cast<std::size_t>(num_outputs()));
  forward_into(raw, out);
  return out;
}

template <typename T>
template <typename U>
MlpT<U> MlpT<T>::cast() const {
  MlpT<U> out(sizes_);
  auto dst = out.params();
  for (std::size_t i = 0; i < params_.size(); ++i) dst[i] = static_cast<U>(params_[i]);
  out.input_mean = input_mean;
  out.input_range = input_range;
  out.output_mean = output_mean;
  out.output_range = output_range;
  return out;
}

std::size_t mlp_param_count(const std::vector<int>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    n += static_cast<std::size_t>(sizes[l]) * static_cast<std::size_t>(sizes[l + 1]) + static_cast<std::size_t>(sizes[l + 1]);
  }
  return n;
}

std::vector<int> widened_architecture(const std::vector<int>& sizes, double factor, int inputs) {
  if (sizes.size() < 3) throw std::invalid_argument("widened_architecture: need at least one hidden layer");
  const double target = factor * static_cast<double>(mlp_param_count(sizes));
  std::vector<int> out(sizes.size(), 1);
  out.front() = inputs;
  out.back() = sizes.back();
  for (int w = 1;; ++w) {
    for (std::size_t l = 1; l + 1 < out.size(); ++l) out[l] = w;
    if (static_cast<double>(mlp_param_count(out)) >= target) return out;
  }
}

template <typename T>
void init_glorot(MlpT<T>& net, Rng& rng) {
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const auto& sizes = net.layer_sizes();
    const double limit = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
    auto w = net.weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = static_cast<T>(uniform(rng, -limit, limit));
    }
    net.bias(l).setZero();
  }
}

void LossConfig::validate() const {
  if (!(factor_opt >= 1.0 && factor_sub >= 1.0)) throw std::invalid_argument("loss factors must be >= 1");
  if (factor_opt != 4.0 * factor_sub) throw std::invalid_argument("loss: factor_opt must equal 4 * factor_sub");
}

LossResult asymmetric_loss(const ActionScores& pred, const ActionScores& target, std::size_t opt, const LossConfig& cfg) {
  if (opt >= kNumAdvisories) throw std::out_of_range("loss: optimal index out of range");
  LossResult r;
  constexpr double n = static_cast<double>(kNumAdvisories);
  for (std::size_t a = 0; a < kNumAdvisories; ++a) {
    const double e = pred[a] - target[a];
    const double f = loss_factor(e, a == opt, cfg);
    r.loss += f * e * e / n;
    r.grad[a] = 2.0 * f * e / n;
  }
  return r;
}

template <typename T>
void AdaMax<T>::step(std::span<T> params, std::span<const T> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) throw std::invalid_argument("adamax: shape mismatch");
  ++t_;
  const T b1 = static_cast<T>(cfg_.beta1);
  const T b2 = static_cast<T>(cfg_.beta2);
  const T lr = static_cast<T>(cfg_.alpha / (1.0 - std::pow(cfg_.beta1, static_cast<double>(t_))));
  const T floor = static_cast<T>(1e-12);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    m_[i] = b1 * m_[i] + (T(1) - b1) * g;
    u_[i] = std::max(b2 * u_[i], std::abs(g));
    params[i] -= lr * m_[i] / std::max(u_[i], floor);
  }
}

template <typename T>
void forward_batch(const MlpT<T>& net, const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& in, ForwardCache<T>& cache) {
  const std::size_t layers = net.num_layers();
  cache.act.resize(layers + 1);
  cache.act[0] = in;
  for (std::size_t l = 0; l < layers; ++l) {
    auto& next = cache.act[l + 1];
    next.noalias() = net.weight(l) * cache.act[l];
    next.colwise() += net.bias(l);
    if (l + 1 < layers) next = next.cwiseMax(T(0));
  }
}

template <typename T>
void backward_batch(const MlpT<T>& net, const ForwardCache<T>& cache,
                    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>& d_out, std::span<T> grads) {
  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  if (grads.size() != net.num_params()) throw std::invalid_argument("backward: gradient buffer size mismatch");
  const auto& sizes = net.layer_sizes();
  Mat delta = d_out;
  for (std::size_t l = net.num_layers(); l-- > 0;) {
    typename MlpT<T>::MatrixMap dw(grads.data() + net.weight_offset(l), sizes[l + 1], sizes[l]);
    typename MlpT<T>::VectorMap db(grads.data() + net.bias_offset(l), sizes[l + 1]);
    dw.noalias() = delta * cache.act[l].transpose();
    db = delta.rowwise().sum();
    if (l > 0) {
      Mat prev = net.weight(l).transpose() * delta;
      // ReLU derivative: the stored activation is positive exactly where the
      // pre-activation was.
      prev = prev.cwiseProduct((cache.act[l].array() > T(0)).template cast<T>().matrix());
      delta = std::move(prev);
    }
  }
}

ActionScores MlpSource::scores(const StateVector& s) const {
  ActionScores out{};
  if (net_->num_inputs() == 7) {
    const std::array<double, 7> x = {s.rho, s.theta, s.psi, s.v_own, s.v_int, s.tau, static_cast<double>(index_of(s.a_prev))};
    net_->forward_into(x, out);
  } else {
    const std::array<double, 5> x = {s.rho, s.theta, s.psi, s.v_own, s.v_int};
    net_->forward_into(x, out);
  }
  return out;
}

template class MlpT<float>;
template class MlpT<double>;
template MlpT<double> MlpT<float>::cast<double>() const;
template MlpT<float> MlpT<double>::cast<float>() const;
template MlpT<float> MlpT<float>::cast<float>() const;
template MlpT<double> MlpT<double>::cast<double>() const;
template void init_glorot<float>(MlpT<float>&, Rng&);
template void init_glorot<double>(MlpT<double>&, Rng&);
template class AdaMax<float>;
template class AdaMax<double>;
template void forward_batch<float>(const MlpT<float>&, const Eigen::MatrixXf&, ForwardCache<float>&);
template void forward_batch<double>(const MlpT<double>&, const Eigen::MatrixXd&, ForwardCache<double>&);
template void backward_batch<float>(const MlpT<float>&, const ForwardCache<float>&, const Eigen::MatrixXf&, std::span<float>);
template void backward_batch<double>(const MlpT<double>&, const ForwardCache<double>&, const Eigen::MatrixXd&, std::span<double>);

}  // namespace qcomp
