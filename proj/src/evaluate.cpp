#include "qcomp/evaluate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qcomp/parallel.hpp"
#include "qcomp/rng.hpp"

namespace qcomp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Partial {
  double se = 0.0;
  std::array<std::array<std::size_t, kNumAdvisories>, kNumAdvisories> counts{};
};

}  // namespace

double FidelityReport::table_share_pct(Advisory a) const {
  std::size_t n = 0;
  for (std::size_t p = 0; p < kNumAdvisories; ++p) n += counts[index_of(a)][p];
  return states == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(states);
}

std::string FidelityReport::to_kv() const {
  std::ostringstream os;
  os << "name=" << name << "\n";
  os << "rmse=" << fmt(rmse) << "\n";
  os << "policy_error_pct=" << fmt(policy_error_pct) << "\n";
  os << "states=" << states << "\n";
  os << "storage_bytes=" << storage_bytes << "\n";
  os << "params=" << params << "\n";
  for (Advisory t : kAllAdvisories) {
    os << "confusion." << to_string(t) << "=";
    for (std::size_t p = 0; p < kNumAdvisories; ++p) os << (p ? "," : "") << fmt(confusion[index_of(t)][p]);
    os << "\n";
  }
  return os.str();
}

std::string FidelityReport::csv_header() {
  std::string h = "name,rmse,policy_error_pct,states,storage_bytes,params";
  for (Advisory t : kAllAdvisories) h += ",diag_" + std::string(to_string(t));
  return h;
}

std::string FidelityReport::csv_row() const {
  std::ostringstream os;
  os << name << "," << fmt(rmse) << "," << fmt(policy_error_pct) << "," << states << "," << storage_bytes << "," << params;
  for (std::size_t a = 0; a < kNumAdvisories; ++a) os << "," << fmt(confusion[a][a]);
  return os.str();
}

FidelityReport evaluate_predictor(const ScoreSource& pred, const ScoreTable& table, std::size_t threads) {
  const GridSpec& grid = table.grid();
  const std::size_t n = table.num_states();
  constexpr std::size_t kChunks = 256;
  std::vector<Partial> partials(kChunks);
  parallel_chunks(n, kChunks, threads, [&](std::size_t c, std::size_t b, std::size_t e) {
    Partial& part = partials[c];
    for (std::size_t i = b; i < e; ++i) {
      const StateVector s = grid.state_at(i);
      const ActionScores p = pred.scores(s);
      const ActionScores t = table.row(i);
      for (std::size_t a = 0; a < kNumAdvisories; ++a) {
        if (!std::isfinite(p[a])) {
          std::ostringstream os;
          os << "evaluate: non-finite " << pred.name() << " score at state " << i << " (rho=" << s.rho << ", theta=" << s.theta
             << ", psi=" << s.psi << ", v_own=" << s.v_own << ", v_int=" << s.v_int << ", tau=" << s.tau
             << ", a_prev=" << to_string(s.a_prev) << ")";
          throw Error(os.str());
        }
        part.se += (p[a] - t[a]) * (p[a] - t[a]);
      }
      ++part.counts[index_of(optimal_action(t))][index_of(optimal_action(p))];
    }
  });
  FidelityReport r;
  r.name = pred.name();
  r.states = n;
  double se = 0.0;
  for (const Partial& part : partials) {
    se += part.se;
    for (std::size_t t = 0; t < kNumAdvisories; ++t) {
      for (std::size_t p = 0; p < kNumAdvisories; ++p) r.counts[t][p] += part.counts[t][p];
    }
  }
  r.rmse = n == 0 ? 0.0 : std::sqrt(se / static_cast<double>(n * kNumAdvisories));
  std::size_t wrong = 0;
  for (std::size_t t = 0; t < kNumAdvisories; ++t) {
    std::size_t row = 0;
    for (std::size_t p = 0; p < kNumAdvisories; ++p) {
      row += r.counts[t][p];
      if (p != t) wrong += r.counts[t][p];
    }
    for (std::size_t p = 0; p < kNumAdvisories; ++p) {
      r.confusion[t][p] = row == 0 ? 0.0 : 100.0 * static_cast<double>(r.counts[t][p]) / static_cast<double>(row);
    }
  }
  r.policy_error_pct = n == 0 ? 0.0 : 100.0 * static_cast<double>(wrong) / static_cast<double>(n);
  return r;
}

double PolicySlice::x_at(std::size_t i) const {
  return spec.x_min + (static_cast<double>(i) + 0.5) * (spec.x_max - spec.x_min) / static_cast<double>(spec.res_x);
}

double PolicySlice::y_at(std::size_t j) const {
  return spec.y_min + (static_cast<double>(j) + 0.5) * (spec.y_max - spec.y_min) / static_cast<double>(spec.res_y);
}

StateVector slice_state(const SliceSpec& spec, std::size_t i, std::size_t j) {
  const PolicySlice geometry{spec, {}};
  const double x = geometry.x_at(i);
  const double y = geometry.y_at(j);
  StateVector s;
  s.rho = std::hypot(x, y);
  s.theta = wrap_angle(std::atan2(y, x));
  s.psi = wrap_angle(spec.psi);
  s.v_own = spec.v_own;
  s.v_int = spec.v_int;
  s.tau = spec.tau;
  s.a_prev = spec.a_prev;
  return s;
}

PolicySlice policy_slice(const ScoreSource& pred, const SliceSpec& spec, const PolicyAdjustments& adj) {
  if (spec.res_x < 2 || spec.res_y < 2) throw std::invalid_argument("slice: resolution must be >= 2");
  if (!(spec.x_max > spec.x_min && spec.y_max > spec.y_min)) throw std::invalid_argument("slice: empty extent");
  PolicySlice out{spec, {}};
  out.cells.resize(spec.res_x * spec.res_y);
  for (std::size_t j = 0; j < spec.res_y; ++j) {
    for (std::size_t i = 0; i < spec.res_x; ++i) {
      const StateVector s = slice_state(spec, i, j);
      out.cells[j * spec.res_x + i] = optimal_action(adj.apply(pred.scores(s), s));
    }
  }
  return out;
}

void write_slice(const PolicySlice& slice, const std::filesystem::path& csv, const std::filesystem::path& sidecar) {
  std::ofstream out(csv);
  if (!out) throw Error("cannot write " + csv.string());
  for (std::size_t j = 0; j < slice.spec.res_y; ++j) {
    for (std::size_t i = 0; i < slice.spec.res_x; ++i) out << (i ? "," : "") << index_of(slice.at(i, j));
    out << "\n";
  }
  std::ofstream meta(sidecar);
  if (!meta) throw Error("cannot write " + sidecar.string());
  const SliceSpec& s = slice.spec;
  meta << "psi=" << fmt(s.psi) << "\nv_own=" << fmt(s.v_own) << "\nv_int=" << fmt(s.v_int) << "\ntau=" << fmt(s.tau)
       << "\na_prev=" << to_string(s.a_prev) << "\nx_min=" << fmt(s.x_min) << "\nx_max=" << fmt(s.x_max)
       << "\ny_min=" << fmt(s.y_min) << "\ny_max=" << fmt(s.y_max) << "\nres_x=" << s.res_x << "\nres_y=" << s.res_y
       << "\nlegend=0:COC,1:WL,2:WR,3:SL,4:SR\nrows=y ascending\ncolumns=x ascending\n";
}

std::vector<StateVector> bench_queries(const GridSpec& grid, std::size_t n, std::uint64_t seed) {
  Rng rng = make_rng(seed, "bench");
  auto span = [&](Dim d) {
    const auto& c = grid.cuts(d);
    return std::pair(c.front(), c.back());
  };
  std::vector<StateVector> out(n);
  for (StateVector& s : out) {
    auto [r0, r1] = span(Dim::Rho);
    auto [o0, o1] = span(Dim::VOwn);
    auto [i0, i1] = span(Dim::VInt);
    auto [t0, t1] = span(Dim::Tau);
    s.rho = uniform(rng, r0, r1);
    s.theta = wrap_angle(uniform(rng, -std::numbers::pi, std::numbers::pi));
    s.psi = wrap_angle(uniform(rng, -std::numbers::pi, std::numbers::pi));
    s.v_own = uniform(rng, o0, o1);
    s.v_int = uniform(rng, i0, i1);
    s.tau = uniform(rng, t0, t1);
    s.a_prev = advisory_from_index(static_cast<std::size_t>(rng() % kNumAdvisories));
  }
  return out;
}

std::vector<BenchResult> bench_runtime(std::span<const ScoreSource* const> preds, std::span<const StateVector> queries) {
  using Clock = std::chrono::steady_clock;
  if (queries.size() < 1000) throw std::invalid_argument("bench: need at least 1000 queries");
  const std::size_t warm = queries.size() / 10;
  const std::size_t timed = queries.size() - warm;
  std::vector<BenchResult> out;
  volatile double sink = 0.0;
  for (const ScoreSource* p : preds) {
    double acc = 0.0;
    for (std::size_t i = 0; i < warm; ++i) acc += p->scores(queries[i])[0];
    const auto t0 = Clock::now();
    for (std::size_t i = warm; i < queries.size(); ++i) acc += p->scores(queries[i])[0];
    const auto t1 = Clock::now();
    std::vector<double> per(timed);
    for (std::size_t i = warm; i < queries.size(); ++i) {
      const auto a = Clock::now();
      acc += p->scores(queries[i])[0];
      const auto b = Clock::now();
      per[i - warm] = std::chrono::duration<double, std::nano>(b - a).count();
    }
    sink = sink + acc;
    const std::size_t k = std::min(timed - 1, static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(timed))) - 1);
    std::nth_element(per.begin(), per.begin() + static_cast<std::ptrdiff_t>(k), per.end());
    BenchResult r;
    r.name = p->name();
    r.mean_ns = std::chrono::duration<double, std::nano>(t1 - t0).count() / static_cast<double>(timed);
    r.p99_ns = per[k];
    out.push_back(r);
  }
  for (BenchResult& r : out) {
    r.rel_mean = r.mean_ns / out.front().mean_ns;
    r.rel_p99 = r.p99_ns / out.front().p99_ns;
  }
  return out;
}

}  // namespace qcomp
