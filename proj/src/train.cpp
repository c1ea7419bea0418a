#include "qcomp/train.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "qcomp/parallel.hpp"

namespace qcomp {

void TrainConfig::validate() const {
  if (hidden.empty()) throw std::invalid_argument("train.hidden must list at least one layer");
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("train.hidden sizes must be positive");
  }
  if (batch == 0) throw std::invalid_argument("train.batch must be >= 1");
  if (!(optimizer.alpha > 0.0)) throw std::invalid_argument("train.alpha must be > 0");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) throw std::invalid_argument("train.beta1 must lie in [0, 1)");
  if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) throw std::invalid_argument("train.beta2 must lie in [0, 1)");
  if (loss == LossKind::Asymmetric) factors.validate();
  if (!(online_cost >= 0.0)) throw std::invalid_argument("train.online_cost must be >= 0");
}

Dataset slice_dataset(const ScoreTable& table, std::size_t tau_index, Advisory a_prev, const TrainConfig& cfg) {
  const GridSpec& grid = table.grid();
  if (tau_index >= grid.size(Dim::Tau)) throw std::out_of_range("slice: tau index out of range");
  Dataset d;
  d.num_inputs = 5;
  const std::size_t n_points = grid.num_points();
  for (std::size_t p = 0; p < n_points; ++p) {
    const std::size_t state = p * kNumAdvisories + index_of(a_prev);
    const GridIndex idx = grid.unravel(state);
    if (idx.cont[5] != tau_index) continue;
    const StateVector s = grid.state_at(state);
    const ActionScores row = table.row(state);
    const ActionScores target = cfg.strip_coc_penalty ? coc_penalty(row, s, PenaltyMode::Strip, cfg.coc_penalty) : row;
    const ActionScores policy_row = cfg.online_cost_targets ? online_costs(row, s.a_prev, cfg.online_cost) : row;
    d.x.insert(d.x.end(), {s.rho, s.theta, s.psi, s.v_own, s.v_int});
    d.y.insert(d.y.end(), target.begin(), target.end());
    d.opt.push_back(static_cast<std::uint8_t>(index_of(optimal_action(policy_row))));
    d.states.push_back(state);
  }
  return d;
}

void fit_normalization(Mlp& net, const Dataset& data) {
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("normalization: empty dataset");
  const std::size_t k = data.num_inputs;
  for (std::size_t j = 0; j < k; ++j) {
    double sum = 0.0;
    double lo = data.x[j];
    double hi = data.x[j];
    for (std::size_t i = 0; i < n; ++i) {
      const double v = data.x[i * k + j];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    net.input_mean[j] = static_cast<float>(sum / static_cast<double>(n));
    net.input_range[j] = hi > lo ? static_cast<float>(hi - lo) : 1.0f;
  }
  double sum = 0.0;
  double lo = data.y.front();
  double hi = data.y.front();
  for (double v : data.y) {
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  net.output_mean = static_cast<float>(sum / static_cast<double>(data.y.size()));
  net.output_range = hi > lo ? static_cast<float>(hi - lo) : 1.0f;
}

std::vector<EpochStats> train_mlp(Mlp& net, const Dataset& data, const TrainConfig& cfg, std::size_t epochs, Rng& rng,
                                  const std::vector<bool>& mask) {
  using Mat = Eigen::MatrixXf;
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("train: empty dataset");
  const std::size_t k = data.num_inputs;
  if (static_cast<std::size_t>(net.num_inputs()) != k || net.num_outputs() != static_cast<int>(kNumAdvisories)) {
    throw std::invalid_argument("train: network shape does not match dataset");
  }
  if (!mask.empty() && mask.size() != net.num_params()) throw std::invalid_argument("train: mask size mismatch");

  Mat xn(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  Mat yn(static_cast<Eigen::Index>(kNumAdvisories), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      xn(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          static_cast<float>((data.x[i * k + j] - net.input_mean[j]) / net.input_range[j]);
    }
    for (std::size_t a = 0; a < kNumAdvisories; ++a) {
      yn(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) =
          static_cast<float>((data.y[i * kNumAdvisories + a] - net.output_mean) / net.output_range);
    }
  }

  const LossConfig loss_cfg = cfg.effective_loss();
  AdaMax<float> opt(net.num_params(), cfg.optimizer);
  std::vector<float> grads(net.num_params());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  ForwardCache<float> cache;
  Mat xb;
  Mat yb;
  Mat d_out;
  std::vector<EpochStats> history;
  history.reserve(epochs);

  auto apply_mask = [&](std::span<float> v) {
    if (mask.empty()) return;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!mask[i]) v[i] = 0.0f;
    }
  };
  apply_mask(net.params());

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch, ++batch_index) {
      const std::size_t b = std::min(cfg.batch, n - start);
      const auto bi = static_cast<Eigen::Index>(b);
      xb.resize(static_cast<Eigen::Index>(k), bi);
      yb.resize(static_cast<Eigen::Index>(kNumAdvisories), bi);
      for (std::size_t c = 0; c < b; ++c) {
        xb.col(static_cast<Eigen::Index>(c)) = xn.col(static_cast<Eigen::Index>(order[start + c]));
        yb.col(static_cast<Eigen::Index>(c)) = yn.col(static_cast<Eigen::Index>(order[start + c]));
      }
      forward_batch(net, xb, cache);
      const Mat& out = cache.act.back();
      d_out.resize(static_cast<Eigen::Index>(kNumAdvisories), bi);
      double batch_loss = 0.0;
      const double scale = 1.0 / (static_cast<double>(kNumAdvisories) * static_cast<double>(b));
      for (std::size_t c = 0; c < b; ++c) {
        const std::size_t opt_a = data.opt[order[start + c]];
        for (std::size_t a = 0; a < kNumAdvisories; ++a) {
          const auto r = static_cast<Eigen::Index>(a);
          const auto cc = static_cast<Eigen::Index>(c);
          const double e = static_cast<double>(out(r, cc)) - static_cast<double>(yb(r, cc));
          const double f = loss_factor(e, a == opt_a, loss_cfg);
          batch_loss += f * e * e * scale;
          d_out(r, cc) = static_cast<float>(2.0 * f * e * scale);
        }
      }
      if (!std::isfinite(batch_loss)) {
        std::ostringstream os;
        os << "train: non-finite loss at epoch " << epoch << ", batch " << batch_index;
        throw Error(os.str());
      }
      epoch_loss += batch_loss * static_cast<double>(b);
      backward_batch(net, cache, d_out, std::span<float>(grads));
      apply_mask(grads);
      opt.step(net.params(), grads);
      apply_mask(net.params());
    }
    history.push_back({epoch, epoch_loss / static_cast<double>(n)});
  }
  return history;
}

NetworkArray::NetworkArray(std::vector<double> tau_cuts, std::vector<Mlp> members, bool coc_penalty_stripped)
    : tau_cuts_(std::move(tau_cuts)), members_(std::move(members)), stripped_(coc_penalty_stripped) {
  if (tau_cuts_.empty()) throw std::invalid_argument("array: empty tau grid");
  if (members_.size() != tau_cuts_.size() * kNumAdvisories) {
    throw std::invalid_argument("array: expected " + std::to_string(tau_cuts_.size() * kNumAdvisories) + " members, got " +
                                std::to_string(members_.size()));
  }
  for (const Mlp& m : members_) {
    if (m.layer_sizes() != members_.front().layer_sizes()) throw std::invalid_argument("array: members differ in architecture");
    if (m.num_inputs() != 5 || m.num_outputs() != static_cast<int>(kNumAdvisories)) {
      throw std::invalid_argument("array: members must map 5 inputs to 5 scores");
    }
  }
}

ActionScores NetworkArray::scores(const StateVector& s) const {
  const std::size_t t = snap_linear(tau_cuts_, s.tau);
  const Mlp& net = members_[member_index(t, s.a_prev)];
  const std::array<double, 5> x = {s.rho, s.theta, s.psi, s.v_own, s.v_int};
  ActionScores out{};
  net.forward_into(x, out);
  return out;
}

std::size_t NetworkArray::num_params() const {
  std::size_t n = 0;
  for (const Mlp& m : members_) n += m.num_params();
  return n;
}

PolicyAdjustments NetworkArray::restore_adjustments(double penalty) const {
  PolicyAdjustments adj;
  adj.reapply_coc_penalty = stripped_;
  adj.coc_penalty = penalty;
  return adj;
}

namespace {

std::vector<int> member_layers(const TrainConfig& cfg) {
  std::vector<int> sizes = {5};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(static_cast<int>(kNumAdvisories));
  return sizes;
}

}  // namespace

Mlp train_member(const ScoreTable& table, std::size_t tau_index, Advisory a_prev, const TrainConfig& cfg) {
  const Dataset data = slice_dataset(table, tau_index, a_prev, cfg);
  if (data.size() == 0) throw Error("train: empty slice for tau index " + std::to_string(tau_index));
  Rng rng = make_rng(cfg.seed, "train", NetworkArray::member_index(tau_index, a_prev));
  Mlp net(member_layers(cfg));
  init_glorot(net, rng);
  fit_normalization(net, data);
  train_mlp(net, data, cfg, cfg.epochs, rng);
  return net;
}

NetworkArray train_array(const ScoreTable& table, const TrainConfig& cfg, const TrainProgress& progress) {
  cfg.validate();
  const std::size_t n_tau = table.grid().size(Dim::Tau);
  const std::size_t n_members = n_tau * kNumAdvisories;
  std::vector<Mlp> members(n_members);
  std::mutex mu;
  parallel_for(n_members, cfg.threads, [&](std::size_t m) {
    const std::size_t t = m / kNumAdvisories;
    const Advisory a = advisory_from_index(m % kNumAdvisories);
    const Dataset data = slice_dataset(table, t, a, cfg);
    if (data.size() == 0) throw Error("train: empty slice for member " + std::to_string(m));
    Rng rng = make_rng(cfg.seed, "train", m);
    Mlp net(member_layers(cfg));
    init_glorot(net, rng);
    fit_normalization(net, data);
    const auto history = train_mlp(net, data, cfg, cfg.epochs, rng);
    members[m] = std::move(net);
    if (progress) {
      std::lock_guard lock(mu);
      progress(m, history);
    }
  });
  return NetworkArray(table.grid().cuts(Dim::Tau), std::move(members), cfg.strip_coc_penalty);
}

Mlp prune_smallest(const Mlp& net, double step) {
  if (!(step > 0.0 && step < 1.0)) throw std::invalid_argument("prune: step must lie in (0, 1)");
  Mlp out = net;
  const std::vector<bool> is_weight = net.weight_mask();
  auto p = out.params();
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (is_weight[i] && p[i] != 0.0f) live.push_back(i);
  }
  const auto k = static_cast<std::size_t>(std::floor(step * static_cast<double>(live.size()) + 1e-9));
  if (k == 0) return out;
  std::partial_sort(live.begin(), live.begin() + static_cast<std::ptrdiff_t>(k), live.end(), [&](std::size_t a, std::size_t b) {
    const float ma = std::abs(p[a]);
    const float mb = std::abs(p[b]);
    return ma < mb || (ma == mb && a < b);
  });
  for (std::size_t i = 0; i < k; ++i) p[live[i]] = 0.0f;
  return out;
}

PruneResult prune_iteration(const Mlp& net, double step, const Dataset& data, const TrainConfig& retrain,
                            std::size_t retrain_epochs, Rng& rng) {
  PruneResult r;
  r.net = prune_smallest(net, step);
  r.removed = net.nonzero_weights() - r.net.nonzero_weights();
  if (r.removed > 0 && retrain_epochs > 0) {
    std::vector<bool> mask = r.net.weight_mask();
    const auto p = r.net.params();
    for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = !mask[i] || p[i] != 0.0f;
    train_mlp(r.net, data, retrain, retrain_epochs, rng, mask);
  }
  r.sparsity = r.net.sparsity();
  return r;
}

MemberFit evaluate_member(const Mlp& net, const ScoreTable& table, const Dataset& data, const TrainConfig& cfg) {
  MemberFit fit;
  const GridSpec& grid = table.grid();
  double se = 0.0;
  std::size_t wrong = 0;
  const std::size_t k = data.num_inputs;
  ActionScores pred{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    net.forward_into(std::span<const double>(data.x.data() + i * k, k), pred);
    const StateVector s = grid.state_at(data.states[i]);
    if (cfg.strip_coc_penalty) pred = coc_penalty(pred, s, PenaltyMode::Apply, cfg.coc_penalty);
    const ActionScores truth = table.row(data.states[i]);
    for (std::size_t a = 0; a < kNumAdvisories; ++a) se += (pred[a] - truth[a]) * (pred[a] - truth[a]);
    wrong += optimal_action(pred) != optimal_action(truth);
  }
  fit.rmse = std::sqrt(se / static_cast<double>(data.size() * kNumAdvisories));
  fit.policy_error_pct = 100.0 * static_cast<double>(wrong) / static_cast<double>(data.size());
  return fit;
}

std::vector<PrunePoint> prune_curve(Mlp& net, const ScoreTable& table, const Dataset& data, const TrainConfig& retrain,
                                    double step, double target, std::size_t retrain_epochs, Rng& rng) {
  std::vector<PrunePoint> curve;
  MemberFit fit = evaluate_member(net, table, data, retrain);
  curve.push_back({0, net.sparsity(), fit.rmse, fit.policy_error_pct});
  for (std::size_t it = 1; net.sparsity() < target; ++it) {
    PruneResult r = prune_iteration(net, step, data, retrain, retrain_epochs, rng);
    if (r.removed == 0) break;
    net = std::move(r.net);
    fit = evaluate_member(net, table, data, retrain);
    curve.push_back({it, r.sparsity, fit.rmse, fit.policy_error_pct});
  }
  return curve;
}

std::vector<PrunePoint> prune_array(NetworkArray& array, const ScoreTable& table, const TrainConfig& retrain, double step,
                                    double target, std::size_t retrain_epochs) {
  if (!(step > 0.0 && step < 1.0)) throw std::invalid_argument("prune: step must lie in (0, 1)");
  const std::size_t n_members = array.members().size();
  std::vector<std::vector<PrunePoint>> curves(n_members);
  std::vector<std::size_t> sizes(n_members);
  parallel_for(n_members, retrain.threads, [&](std::size_t m) {
    const Dataset data = slice_dataset(table, m / kNumAdvisories, advisory_from_index(m % kNumAdvisories), retrain);
    Rng rng = make_rng(retrain.seed, "prune", m);
    curves[m] = prune_curve(array.members()[m], table, data, retrain, step, target, retrain_epochs, rng);
    sizes[m] = data.size();
  });
  std::size_t points = 0;
  for (const auto& c : curves) points = std::max(points, c.size());
  std::vector<PrunePoint> out;
  for (std::size_t k = 0; k < points; ++k) {
    double sparsity = 0.0;
    double se = 0.0;
    double wrong = 0.0;
    double total = 0.0;
    for (std::size_t m = 0; m < n_members; ++m) {
      // A member that stopped early keeps its last point.
      const PrunePoint& p = curves[m][std::min(k, curves[m].size() - 1)];
      const auto n = static_cast<double>(sizes[m]);
      sparsity += p.sparsity;
      se += p.rmse * p.rmse * n;
      wrong += p.policy_error_pct * n;
      total += n;
    }
    out.push_back({k, sparsity / static_cast<double>(n_members), std::sqrt(se / total), wrong / total});
  }
  return out;
}

}  // namespace qcomp
