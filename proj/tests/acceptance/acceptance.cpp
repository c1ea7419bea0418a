// End-to-end acceptance run. Builds the default-scale artifacts through the
// command-line pipeline, checks each criterion against them, then reruns
// every stage from its manifest and compares bytes.
//
//   qcomp_acceptance --workdir DIR [--only N]...

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "../helpers.hpp"
#include "../oracles.hpp"
#include "qcomp/cli.hpp"
#include "qcomp/config.hpp"
#include "qcomp/evaluate.hpp"
#include "qcomp/mdp.hpp"
#include "qcomp/mlp.hpp"
#include "qcomp/net_io.hpp"
#include "qcomp/simulate.hpp"
#include "qcomp/table_io.hpp"
#include "qcomp/train.hpp"

namespace fs = std::filesystem;
using namespace qcomp;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

using KeyValues = std::map<std::string, std::string>;

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  return {std::istreambuf_iterator<char>(f), {}};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

// Runs one CLI command in-process; throws with its stderr on failure.
std::string cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  if (code != 0) {
    std::string joined;
    for (const auto& a : args) joined += a + " ";
    throw std::runtime_error("qcomp " + joined + "exited " + std::to_string(code) + ": " + err.str());
  }
  return out.str();
}

// Relative path -> bytes for every file under a directory, or "." -> bytes
// for a single file.
std::map<std::string, std::string> snapshot(const fs::path& p) {
  std::map<std::string, std::string> files;
  if (fs::is_directory(p)) {
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (e.is_regular_file()) files[fs::relative(e.path(), p).string()] = slurp(e.path());
    }
  } else {
    files["."] = slurp(p);
  }
  return files;
}

// ---------------------------------------------------------------------------
// Shared default-scale artifacts
// ---------------------------------------------------------------------------

struct Workspace {
  fs::path dir;
  fs::path table() const { return dir / "table.bin"; }
  fs::path array() const { return dir / "array"; }
  fs::path array_mse() const { return dir / "array_mse"; }
  fs::path pruned() const { return dir / "array_pruned"; }
  fs::path sim() const { return dir / "sim"; }

  std::optional<ScoreTable> table_cache;
  std::optional<NetworkArray> array_cache;
  double train_seconds = 0.0;
  double train_mse_seconds = 0.0;
  double prune_seconds = 0.0;

  const ScoreTable& loaded_table() {
    if (!table_cache) {
      if (!fs::exists(table())) cli({"gen-table", "--out", table().string()});
      table_cache = load_table(table());
    }
    return *table_cache;
  }
  const NetworkArray& loaded_array() {
    loaded_table();
    if (!array_cache) {
      if (!fs::exists(array())) {
        const auto t0 = Clock::now();
        cli({"train", "--table", table().string(), "--out", array().string()});
        train_seconds = since(t0);
      }
      array_cache = load_array(array());
    }
    return *array_cache;
  }
  void ensure_mse() {
    loaded_table();
    if (fs::exists(array_mse())) return;
    const auto t0 = Clock::now();
    cli({"train", "--table", table().string(), "--set", "train.loss=mse", "--out", array_mse().string()});
    train_mse_seconds = since(t0);
  }
  void ensure_pruned() {
    loaded_array();
    if (fs::exists(pruned())) return;
    const auto t0 = Clock::now();
    cli({"prune", "--table", table().string(), "--array", array().string(), "--out", pruned().string()});
    prune_seconds = since(t0);
  }
  void ensure_sim() {
    loaded_array();
    if (fs::exists(sim() / "metrics.csv")) return;
    cli({"sim", "--table", table().string(), "--array", array().string(), "--out", sim().string()});
  }
};

double policy_error_of(const NetworkArray& array, const ScoreTable& table, double* rmse = nullptr) {
  const AdjustedSource policy(array, array.restore_adjustments());
  const FidelityReport r = evaluate_predictor(policy, table);
  if (rmse) *rmse = r.rmse;
  return r.policy_error_pct;
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

Outcome nearest_lookup(Workspace&) {
  const auto t0 = Clock::now();
  const GridSpec g = default_grid();
  Rng rng(101);
  std::size_t match = 0;
  for (int i = 0; i < 1000; ++i) {
    const StateVector s = testing::random_state(rng);
    const GridIndex idx = g.nearest(s);
    match += g.point_index(idx.cont) == testing::brute_nearest_point(g, s) && idx.a_prev == s.a_prev;
  }
  const double secs = since(t0);
  return {match == 1000 && secs < 10.0, std::to_string(match) + "/1000 match, " + num(secs, 3) + " s"};
}

Outcome cpa(Workspace&) {
  const auto t0 = Clock::now();
  Rng rng(102);
  int checked = 0;
  double worst = 0.0;
  while (checked < 1000) {
    const StateVector s = testing::random_state(rng, 30000.0);
    const CpaResult c = cpa_geometry(s);
    if (c.degenerate || c.t_cpa < 0.0 || c.t_cpa > 200.0) continue;
    ++checked;
    worst = std::max(worst, std::abs(c.d_cpa - testing::swept_min_separation(s, 200.0)));
  }
  const double secs = since(t0);
  return {worst <= 0.5 && secs < 30.0, "max |d_cpa - sweep| = " + num(worst) + " ft, " + num(secs, 3) + " s"};
}

Outcome penalty_inverse(Workspace&) {
  Rng rng(103);
  std::size_t exact = 0;
  std::size_t band = 0;
  for (int i = 0; i < 10000; ++i) {
    StateVector s = testing::random_state(rng, 12000.0);
    ActionScores row;
    for (double& v : row) v = quantize_score(uniform(rng, -200.0, 0.0));
    band += in_coc_band(s);
    const ActionScores back = coc_penalty(coc_penalty(row, s, PenaltyMode::Apply), s, PenaltyMode::Strip);
    exact += std::memcmp(back.data(), row.data(), sizeof row) == 0;
  }
  return {exact == 10000 && band > 0,
          std::to_string(exact) + "/10000 bit-exact, " + std::to_string(band) + " rows inside the penalty band"};
}

Outcome value_iteration(Workspace& ws) {
  const MdpConfig cfg = Config::profile("desk").mdp();
  const auto t0 = Clock::now();
  const ValueIterationResult r = value_iterate(cfg);
  const double secs = since(t0);
  // Residual recomputed by an extra sweep rather than trusted from the solver.
  const double residual = BellmanOperator(cfg).residual(r.q);

  const MdpConfig micro = testing::micro_config();
  const ValueIterationResult m = value_iterate(micro);
  const std::vector<double> expect = testing::MicroOracle{micro}.solve(1e-13);
  double worst = 0.0;
  for (std::size_t i = 0; i < expect.size(); ++i) worst = std::max(worst, std::abs(expect[i] - m.q[i]));

  // The pipeline's table must be this same fixed point.
  const bool same = ws.loaded_table() == r.table;
  return {residual <= 1e-6 && worst <= 1e-9 && secs < 600.0 && same,
          "residual " + num(residual) + " after " + std::to_string(r.sweeps) + " sweeps in " + num(secs, 3) +
              " s; micro-grid max |dQ| " + num(worst) + "; pipeline table " + (same ? "identical" : "DIFFERS")};
}

Outcome gradients(Workspace&) {
  using Net = MlpT<double>;
  using Mat = Eigen::MatrixXd;
  const auto t0 = Clock::now();
  Rng rng(105);
  const LossConfig loss_cfg;
  double worst = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); };

  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> sizes = {5};
    const int depth = 1 + static_cast<int>(rng() % 3);
    for (int l = 0; l < depth; ++l) sizes.push_back(3 + static_cast<int>(rng() % 8));
    sizes.push_back(5);
    Net net(sizes);
    init_glorot(net, rng);
    for (double& p : net.params()) p += uniform(rng, -0.1, 0.1);

    Mat in(5, 1);
    for (int r = 0; r < 5; ++r) in(r, 0) = uniform(rng, -1.5, 1.5);
    const ActionScores target = testing::random_row(rng, -2.0, 2.0);
    const std::size_t opt = rng() % 5;

    auto outputs = [&](const Net& n, ForwardCache<double>& c) {
      forward_batch(n, in, c);
      ActionScores p;
      for (int a = 0; a < 5; ++a) p[a] = c.act.back()(a, 0);
      return p;
    };
    // Sign pattern of every ReLU pre-activation and every output error; a
    // perturbation that changes it straddles a kink.
    auto kinks = [&](const Net& n) {
      ForwardCache<double> c;
      const ActionScores p = outputs(n, c);
      std::vector<bool> s;
      for (std::size_t l = 1; l + 1 < c.act.size(); ++l) {
        Mat pre = n.weight(l - 1) * c.act[l - 1];
        pre.colwise() += n.bias(l - 1);
        for (Eigen::Index k = 0; k < pre.size(); ++k) s.push_back(pre.data()[k] > 0.0);
      }
      for (int a = 0; a < 5; ++a) s.push_back(p[a] > target[a]);
      return s;
    };

    ForwardCache<double> cache;
    const ActionScores pred = outputs(net, cache);
    const LossResult lr = asymmetric_loss(pred, target, opt, loss_cfg);

    // Loss gradient alone.
    for (int a = 0; a < 5; ++a) {
      const double h = 1e-6;
      ActionScores up = pred, dn = pred;
      up[a] += h;
      dn[a] -= h;
      if ((up[a] > target[a]) != (dn[a] > target[a])) continue;
      const double fd = (asymmetric_loss(up, target, opt, loss_cfg).loss - asymmetric_loss(dn, target, opt, loss_cfg).loss) / (2 * h);
      worst = std::max(worst, rel(lr.grad[a], fd));
      ++checked;
    }

    // Backprop through the network.
    Mat dout(5, 1);
    for (int a = 0; a < 5; ++a) dout(a, 0) = lr.grad[a];
    std::vector<double> grads(net.num_params());
    backward_batch<double>(net, cache, dout, std::span<double>(grads));
    const auto base = kinks(net);
    for (std::size_t k = 0; k < net.num_params(); ++k) {
      const double h = 1e-6;
      Net up = net, dn = net;
      up.params()[k] += h;
      dn.params()[k] -= h;
      if (kinks(up) != base || kinks(dn) != base) {
        ++skipped;
        continue;
      }
      ForwardCache<double> c;
      const double fd = (asymmetric_loss(outputs(up, c), target, opt, loss_cfg).loss -
                         asymmetric_loss(outputs(dn, c), target, opt, loss_cfg).loss) /
                        (2 * h);
      worst = std::max(worst, rel(grads[k], fd));
      ++checked;
    }
  }
  const double secs = since(t0);
  return {worst <= 1e-4 && secs < 60.0 && checked > 10 * skipped,
          "max relative error " + num(worst) + " over " + std::to_string(checked) + " derivatives (" + std::to_string(skipped) +
              " at kinks skipped), " + num(secs, 3) + " s"};
}

Outcome training_fidelity(Workspace& ws) {
  const NetworkArray& array = ws.loaded_array();
  const ScoreTable& table = ws.loaded_table();
  double rmse = 0.0;
  const double pe = policy_error_of(array, table, &rmse);
  const double sd = score_stats(table).stddev;
  const double ratio = rmse / sd;
  const bool timed = ws.train_seconds > 0.0;
  return {pe <= 5.0 && ratio <= 0.05 && (!timed || ws.train_seconds < 1800.0),
          std::to_string(array.members().size()) + " members: policy error " + num(pe) + "%, RMSE " + num(rmse) + " = " +
              num(100.0 * ratio) + "% of score stddev " + num(sd) +
              (timed ? ", trained in " + num(ws.train_seconds, 4) + " s" : ", reused existing array")};
}

Outcome asymmetric_vs_mse(Workspace& ws) {
  ws.ensure_mse();
  const ScoreTable& table = ws.loaded_table();
  const double asym = policy_error_of(ws.loaded_array(), table);
  const double mse = policy_error_of(load_array(ws.array_mse()), table);
  return {asym < mse, "asymmetric " + num(asym) + "% vs mse " + num(mse) + "% policy error"};
}

Outcome pruning(Workspace& ws) {
  ws.ensure_pruned();
  std::istringstream csv(slurp(ws.pruned() / "prune_curve.csv"));
  std::string line;
  std::getline(csv, line);
  struct Row {
    double sparsity, rmse, pe;
  };
  std::vector<Row> rows;
  while (std::getline(csv, line)) {
    Row r{};
    if (std::sscanf(line.c_str(), "%*d,%lf,%lf,%lf", &r.sparsity, &r.rmse, &r.pe) == 3) rows.push_back(r);
  }
  if (rows.size() < 2) return {false, "prune curve has " + std::to_string(rows.size()) + " rows"};
  bool increasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i) increasing = increasing && rows[i].sparsity > rows[i - 1].sparsity;

  // Trend file: measured error and its running maximum against sparsity.
  std::string trend = "sparsity,policy_error_pct,rmse,policy_error_envelope\n";
  double env = 0.0;
  for (const Row& r : rows) {
    env = std::max(env, r.pe);
    trend += num(r.sparsity, 6) + "," + num(r.pe, 6) + "," + num(r.rmse, 6) + "," + num(env, 6) + "\n";
  }
  spit(ws.dir / "prune_trend.csv", trend);

  // Spearman rank correlation of error with sparsity, for the report only.
  auto ranks = [&](auto key) {
    std::vector<std::size_t> idx(rows.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return key(rows[a]) < key(rows[b]); });
    std::vector<double> r(rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto rs = ranks([](const Row& r) { return r.sparsity; });
  const auto re = ranks([](const Row& r) { return r.pe; });
  double d2 = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) d2 += (rs[i] - re[i]) * (rs[i] - re[i]);
  const double n = static_cast<double>(rows.size());
  const double spearman = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));

  const double base = rows.front().pe;
  const double last = rows.back().pe;
  const bool ok = increasing && rows.back().sparsity >= 0.6 && last <= 2.5 * base;
  return {ok, std::to_string(rows.size() - 1) + " iterations to sparsity " + num(rows.back().sparsity) + ": policy error " +
                  num(base) + "% -> " + num(last) + "% (" + num(base > 0 ? last / base : 0.0) + "x), rmse " +
                  num(rows.front().rmse) + " -> " + num(rows.back().rmse) + ", rank correlation " + num(spearman, 3) +
                  (ws.prune_seconds > 0 ? ", " + num(ws.prune_seconds, 4) + " s" : "")};
}

Outcome compression(Workspace& ws) {
  const NetworkArray& array = ws.loaded_array();
  const std::size_t table_bytes = fs::file_size(ws.table());
  const std::size_t array_bytes = array_serialized_bytes(array);
  const std::size_t params = array.num_params();
  const double measured = static_cast<double>(table_bytes) / static_cast<double>(array_bytes);

  // Production scale, from parameter counts only: 600M stored scores against 45
  // networks of six 45-unit hidden layers on five inputs.
  const double prod_table_floats = 600e6;
  const std::size_t prod_net_params = mlp_param_count({5, 45, 45, 45, 45, 45, 45, 5});
  const double prod_array_params = 45.0 * static_cast<double>(prod_net_params);
  const double prod_ratio = prod_table_floats / prod_array_params;
  const double f32_ratio = static_cast<double>(table_bytes) / (4.0 * static_cast<double>(params));

  std::ostringstream rep;
  rep << "measured\n"
      << "table_bytes=" << table_bytes << "\narray_bytes=" << array_bytes << "\narray_params=" << params
      << "\nratio=" << num(measured, 6) << "\nratio_if_f32_binary=" << num(f32_ratio, 6) << "\n"
      << "extrapolated (parameter counts, not measured)\n"
      << "prod_table_floats=" << prod_table_floats << "\nprod_net_params=" << prod_net_params
      << "\nprod_array_params=" << prod_array_params << "\nprod_ratio=" << num(prod_ratio, 6) << "\n";
  spit(ws.dir / "compression_report.txt", rep.str());

  return {measured >= 20.0, "table " + std::to_string(table_bytes) + " B / array " + std::to_string(array_bytes) + " B = " +
                                num(measured) + "x (need >= 20x; " + num(f32_ratio) +
                                "x if stored as raw f32); production-scale extrapolation from parameter counts " + num(prod_ratio) + "x"};
}

Outcome runtime_ordering(Workspace& ws) {
  const NetworkArray& array = ws.loaded_array();
  const Config c = Config::profile("desk");
  const Mlp& member = array.members().front();
  Mlp big(widened_architecture(member.layer_sizes(), c.number("bench.big_factor"), 7));
  Rng rng = make_rng(c.seed(), "bench-big");
  init_glorot(big, rng);
  const MlpSource member_src(member);
  const MlpSource big_src(big);
  const ScoreSource* preds[] = {&member_src, &big_src};
  const auto queries = bench_queries(ws.loaded_table().grid(), c.integer("bench.queries"), c.seed());
  const auto bench = bench_runtime(preds, queries);

  ws.ensure_sim();
  double rel = 0.0;
  std::istringstream rt(slurp(ws.sim() / "runtime.csv"));
  for (std::string line; std::getline(rt, line);) {
    if (line.starts_with("array,")) rel = std::stod(line.substr(line.rfind(',') + 1));
  }
  const bool ok = bench[0].mean_ns < bench[1].mean_ns && rel > 0.0 && rel <= 1.2;
  return {ok, "member " + num(bench[0].mean_ns) + " ns (" + std::to_string(member.num_params()) + " params) vs single net " +
                  num(bench[1].mean_ns) + " ns (" + std::to_string(big.num_params()) +
                  " params); array sim query time = " + num(rel) + "x table"};
}

Outcome simulation_equivalence(Workspace& ws) {
  const ScoreTable& table = ws.loaded_table();
  const SimConfig cfg = Config::profile("desk").sim();
  const auto t0 = Clock::now();
  const TableSource ref_src(table);
  const testing::ShiftedSource shifted(table);
  const SimResult a = run_simulation(ref_src, cfg);
  const SimResult b = run_simulation(shifted, cfg);
  const double secs = since(t0);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) same += a.trajectories[i].same_outcome(b.trajectories[i]);
  const SimMetrics& ma = a.metrics;
  const SimMetrics& mb = b.metrics;
  const bool probs = ma.p_nmac == mb.p_nmac && ma.p_alert == mb.p_alert && ma.p_reversal == mb.p_reversal && ma.p_split == mb.p_split;
  const bool ok = cfg.encounters == 10000 && same == a.trajectories.size() && probs && secs < 600.0;
  return {ok, std::to_string(same) + "/" + std::to_string(a.trajectories.size()) + " identical trajectories; P(NMAC) " +
                  num(ma.p_nmac) + ", P(alert) " + num(ma.p_alert) + ", P(reversal) " + num(ma.p_reversal) + ", P(split) " +
                  num(ma.p_split) + (probs ? " (all equal)" : " (DIFFER)") + ", " + num(secs, 4) + " s"};
}

Outcome array_safety(Workspace& ws) {
  ws.ensure_sim();
  std::map<std::string, KeyValues> rows;
  std::istringstream csv(slurp(ws.sim() / "metrics.csv"));
  std::string header;
  std::getline(csv, header);
  std::vector<std::string> cols;
  {
    std::istringstream h(header);
    for (std::string f; std::getline(h, f, ',');) cols.push_back(f);
  }
  for (std::string line; std::getline(csv, line);) {
    std::istringstream l(line);
    KeyValues kv;
    std::size_t i = 0;
    for (std::string f; std::getline(l, f, ',') && i < cols.size(); ++i) kv[cols[i]] = f;
    rows[kv[cols.front()]] = kv;
  }
  const double nt = std::stod(rows.at("table").at("p_nmac"));
  const double na = std::stod(rows.at("array").at("p_nmac"));
  const double at = std::stod(rows.at("table").at("p_alert"));
  const double aa = std::stod(rows.at("array").at("p_alert"));
  const bool ok = na <= 1.5 * nt && std::abs(aa - at) <= 0.2 * at;
  return {ok, "P(NMAC) array " + num(na) + " vs table " + num(nt) + "; P(alert) array " + num(aa) + " vs table " + num(at) + " (" +
                  num(at > 0 ? 100.0 * (aa - at) / at : 0.0, 3) + "%), " + rows.at("table").at("encounters") + " encounters"};
}

Outcome unscented(Workspace&) {
  Rng rng(113);
  double worst_w = 0.0, worst_mean = 0.0, worst_cov = 0.0;
  bool collapse = true;
  for (int trial = 0; trial < 1000; ++trial) {
    StateVector m = testing::random_state(rng, 20000.0);
    m.rho += 2000.0;
    m.v_own += 100.0;
    m.v_int += 100.0;
    const auto zero = belief_samples(m, NoiseConfig{});
    collapse = collapse && zero.size() == 1 && zero[0].weight == 1.0 && zero[0].state == m;

    const NoiseConfig noise{uniform(rng, 1.0, 80.0), uniform(rng, 0.001, 0.05), uniform(rng, 0.001, 0.05), uniform(rng, 0.5, 8.0)};
    const auto b = belief_samples(m, noise);
    const double sig[5] = {noise.range, noise.bearing, noise.heading, noise.speed, noise.speed};
    auto coord = [](const StateVector& s, int d) {
      const double v[5] = {s.rho, s.theta, s.psi, s.v_own, s.v_int};
      return v[d];
    };
    double wsum = 0.0;
    for (const auto& s : b) wsum += s.weight;
    worst_w = std::max(worst_w, std::abs(wsum - 1.0));
    for (int d = 0; d < 5; ++d) {
      double mean = 0.0;
      for (const auto& s : b) mean += s.weight * coord(s.state, d);
      worst_mean = std::max(worst_mean, std::abs(mean - coord(m, d)) / std::max(1.0, std::abs(coord(m, d))));
      for (int e = 0; e < 5; ++e) {
        double cov = 0.0;
        for (const auto& s : b) cov += s.weight * (coord(s.state, d) - coord(m, d)) * (coord(s.state, e) - coord(m, e));
        const double want = d == e ? sig[d] * sig[d] : 0.0;
        worst_cov = std::max(worst_cov, std::abs(cov - want) / std::max(1.0, sig[d] * sig[e]));
      }
    }
  }
  return {worst_w <= 1e-12 && worst_mean <= 1e-9 && worst_cov <= 1e-9 && collapse,
          "|sum w - 1| " + num(worst_w) + ", mean error " + num(worst_mean) + ", covariance error " + num(worst_cov) +
              ", zero-noise collapse " + (collapse ? "exact" : "NOT exact")};
}

Outcome determinism(Workspace& ws) {
  ws.loaded_array();
  ws.ensure_mse();
  ws.ensure_pruned();
  ws.ensure_sim();
  const fs::path d = ws.dir;
  const std::string t = ws.table().string();
  // Stages not already produced above.
  if (!fs::exists(d / "linear.txt")) cli({"fit-linear", "--table", t, "--out", (d / "linear.txt").string()});
  if (!fs::exists(d / "tree.bin")) cli({"fit-tree", "--table", t, "--out", (d / "tree.bin").string()});
  if (!fs::exists(d / "eval.csv")) cli({"eval", "--table", t, "--array", ws.array().string(), "--out", (d / "eval.csv").string()});
  if (!fs::exists(d / "slice.csv")) cli({"slice", "--table", t, "--array", ws.array().string(), "--out", (d / "slice.csv").string()});

  struct Stage {
    std::string command;
    fs::path artifact;
    std::vector<std::string> inputs;
    std::vector<std::string> skip;  // wall-clock outputs
  };
  const std::string a = ws.array().string();
  const std::vector<Stage> stages = {
      {"gen-table", ws.table(), {}, {}},
      {"fit-linear", d / "linear.txt", {"--table", t}, {}},
      {"fit-tree", d / "tree.bin", {"--table", t}, {}},
      {"train", ws.array(), {"--table", t}, {}},
      {"train", ws.array_mse(), {"--table", t}, {}},
      {"prune", ws.pruned(), {"--table", t, "--array", a}, {}},
      {"eval", d / "eval.csv", {"--table", t, "--array", a}, {}},
      {"slice", d / "slice.csv", {"--table", t, "--array", a}, {}},
      {"sim", ws.sim(), {"--table", t, "--array", a}, {"runtime.csv"}},
  };
  const fs::path rerun_dir = d / "rerun";
  fs::remove_all(rerun_dir);
  fs::create_directories(rerun_dir);
  std::vector<std::string> bad;
  std::size_t files = 0;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const Stage& s = stages[i];
    fs::path manifest = s.artifact;
    manifest += ".manifest";
    const fs::path out = rerun_dir / (std::to_string(i) + "_" + s.artifact.filename().string());
    std::vector<std::string> args = {s.command, "--config", manifest.string()};
    args.insert(args.end(), s.inputs.begin(), s.inputs.end());
    args.insert(args.end(), {"--out", out.string()});
    cli(args);
    auto before = snapshot(s.artifact);
    auto after = snapshot(out);
    for (const auto& k : s.skip) {
      before.erase(k);
      after.erase(k);
    }
    fs::path out_manifest = out;
    out_manifest += ".manifest";
    const bool same = before == after && slurp(manifest) == slurp(out_manifest);
    files += before.size() + 1;
    if (!same) bad.push_back(s.command + ":" + s.artifact.filename().string());
  }
  std::string detail = std::to_string(stages.size()) + " stages, " + std::to_string(files) + " files compared";
  if (!bad.empty()) {
    detail += "; differing:";
    for (const auto& b : bad) detail += " " + b;
  }
  return {bad.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qcomp acceptance run"};
  std::string workdir = "acceptance_work";
  std::vector<int> only;
  bool fresh = false;
  app.add_option("--workdir", workdir, "Directory for generated artifacts");
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("--fresh", fresh, "Delete the work directory first");
  CLI11_PARSE(app, argc, argv);

  Workspace ws;
  ws.dir = workdir;
  if (fresh) fs::remove_all(ws.dir);
  fs::create_directories(ws.dir);

  const std::vector<std::pair<std::string, std::function<Outcome(Workspace&)>>> criteria = {
      {"nearest lookup oracle", nearest_lookup},
      {"closest point of approach", cpa},
      {"penalty strip/apply inverse", penalty_inverse},
      {"value iteration", value_iteration},
      {"gradient checks", gradients},
      {"training fidelity", training_fidelity},
      {"asymmetric beats symmetric", asymmetric_vs_mse},
      {"pruning curve", pruning},
      {"compression ratio", compression},
      {"runtime ordering", runtime_ordering},
      {"simulation equivalence", simulation_equivalence},
      {"trained-array safety", array_safety},
      {"unscented samples", unscented},
      {"determinism", determinism},
  };

  std::size_t failed = 0;
  std::size_t ran = 0;
  std::ostringstream summary;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    ++ran;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second(ws);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::ostringstream line;
    line << "C" << id << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": " << o.detail << " ["
         << num(since(t0), 4) << " s]";
    std::cout << line.str() << std::endl;
    summary << line.str() << "\n";
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed" << std::endl;
  summary << (ran - failed) << "/" << ran << " criteria passed\n";
  spit(ws.dir / "acceptance_summary.txt", summary.str());
  return failed == 0 ? 0 : 1;
}
