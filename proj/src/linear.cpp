#include "qcomp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace qcomp {

Features state_features(const StateVector& s) {
  return {s.rho, s.theta, s.psi, s.v_own, s.v_int, s.tau, static_cast<double>(index_of(s.a_prev))};
}

const char* feature_name(std::size_t i) {
  static constexpr const char* kNames[] = {"rho", "theta", "psi", "v_own", "v_int", "tau", "a_prev", "bias"};
  return i <= kNumFeatures ? kNames[i] : "?";
}

void table_dataset(const ScoreTable& table, std::vector<Features>& x, std::vector<ActionScores>& y) {
  const std::size_t n = table.num_states();
  x.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = state_features(table.grid().state_at(i));
    y[i] = table.row(i);
  }
}

ActionScores LinearModel::predict(const Features& x) const {
  ActionScores out{};
  for (std::size_t a = 0; a < kNumAdvisories; ++a) {
    double v = weights(kNumFeatures, static_cast<int>(a));
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      v += (x[j] - feature_mean[j]) / feature_scale[j] * weights(static_cast<int>(j), static_cast<int>(a));
    }
    out[a] = v;
  }
  return out;
}

namespace {

constexpr int kCols = static_cast<int>(kNumFeatures) + 1;
using Gram = Eigen::Matrix<double, kCols, kCols>;

// Unpivoted Cholesky in the order bias, rho, ..., a_prev. Returns the first
// column whose pivot vanishes, or -1 when the Gram matrix is positive definite.
int first_dependent_column(const Gram& g) {
  std::array<int, kCols> order{};
  order[0] = kNumFeatures;
  for (int j = 0; j < static_cast<int>(kNumFeatures); ++j) order[j + 1] = j;
  Gram l = Gram::Zero();
  for (int jj = 0; jj < kCols; ++jj) {
    const int j = order[jj];
    double d = g(j, j);
    for (int k = 0; k < jj; ++k) d -= l(jj, k) * l(jj, k);
    if (!(g(j, j) > 0.0) || d <= 1e-12 * g(j, j)) return j;
    l(jj, jj) = std::sqrt(d);
    for (int ii = jj + 1; ii < kCols; ++ii) {
      const int i = order[ii];
      double v = g(i, j);
      for (int k = 0; k < jj; ++k) v -= l(ii, k) * l(jj, k);
      l(ii, jj) = v / l(jj, jj);
    }
  }
  return -1;
}

}  // namespace

LinearModel fit_linear(std::span<const Features> x, std::span<const ActionScores> y, LinearFitOptions opts) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_linear: feature/target count mismatch");
  if (x.size() < kNumFeatures + 1) throw std::invalid_argument("fit_linear: need at least 8 samples");

  LinearModel model;
  const double n = static_cast<double>(x.size());
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    double sum = 0.0;
    double lo = x[0][j];
    double hi = x[0][j];
    for (const auto& row : x) {
      sum += row[j];
      lo = std::min(lo, row[j]);
      hi = std::max(hi, row[j]);
    }
    model.feature_mean[j] = sum / n;
    model.feature_scale[j] = hi > lo ? hi - lo : 1.0;
  }

  Gram gram = Gram::Zero();
  Eigen::Matrix<double, kCols, static_cast<int>(kNumAdvisories)> rhs;
  rhs.setZero();
  Eigen::Matrix<double, kCols, 1> z;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      z(static_cast<int>(j)) = (x[i][j] - model.feature_mean[j]) / model.feature_scale[j];
    }
    z(kNumFeatures) = 1.0;
    gram.noalias() += z * z.transpose();
    for (std::size_t a = 0; a < kNumAdvisories; ++a) rhs.col(static_cast<int>(a)) += y[i][a] * z;
  }

  if (const int dep = first_dependent_column(gram); dep >= 0) {
    if (!opts.allow_ridge) {
      throw RankDeficientError(static_cast<std::size_t>(dep),
                               std::string("fit_linear: rank-deficient Gram matrix, feature '") +
                                   feature_name(static_cast<std::size_t>(dep)) + "' is linearly dependent");
    }
    model.used_ridge = true;
    model.ridge_lambda = 1e-8 * gram.trace();
    gram.diagonal().array() += model.ridge_lambda;
  }
  model.weights = gram.ldlt().solve(rhs);
  return model;
}

LinearModel fit_linear(const ScoreTable& table, LinearFitOptions opts) {
  std::vector<Features> x;
  std::vector<ActionScores> y;
  table_dataset(table, x, y);
  return fit_linear(x, y, opts);
}

std::string encode_linear(const LinearModel& m) {
  std::string out;
  char buf[40];
  auto row = [&](auto&& get, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", get(i));
      out += (i ? "," : "") + std::string(buf);
    }
    out += "\n";
  };
  row([&](std::size_t i) { return m.feature_mean[i]; }, kNumFeatures);
  row([&](std::size_t i) { return m.feature_scale[i]; }, kNumFeatures);
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    row([&](std::size_t i) { return m.weights(r, static_cast<Eigen::Index>(i)); }, kNumAdvisories);
  }
  return out;
}

LinearModel decode_linear(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.starts_with("//")) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || tok.find_first_not_of(" \t\r", used) != std::string::npos) {
        throw Error("linear model: non-numeric token '" + tok + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() != 2 + kNumFeatures + 1) throw Error("linear model: expected 10 rows, found " + std::to_string(rows.size()));
  LinearModel m;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::size_t want = r < 2 ? kNumFeatures : kNumAdvisories;
    if (rows[r].size() != want) throw Error("linear model: row " + std::to_string(r + 1) + " has the wrong length");
  }
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    m.feature_mean[i] = rows[0][i];
    m.feature_scale[i] = rows[1][i];
  }
  for (std::size_t r = 0; r <= kNumFeatures; ++r) {
    for (std::size_t a = 0; a < kNumAdvisories; ++a) {
      m.weights(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(a)) = rows[2 + r][a];
    }
  }
  return m;
}

}  // namespace qcomp
