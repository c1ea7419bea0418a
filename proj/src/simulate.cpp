#include "qcomp/simulate.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "qcomp/parallel.hpp"

namespace qcomp {

namespace {

constexpr double kPi = std::numbers::pi;

void advance(Aircraft& a, double turn_deg, double dt) {
  const double w = deg2rad(turn_deg);
  if (w == 0.0) {
    a.x += a.speed * dt * std::cos(a.heading);
    a.y += a.speed * dt * std::sin(a.heading);
    return;
  }
  const double h1 = a.heading + w * dt;
  const double r = a.speed / w;
  a.x += r * (std::sin(h1) - std::sin(a.heading));
  a.y += r * (std::cos(a.heading) - std::cos(h1));
  a.heading = wrap_angle(h1);
}

std::uint64_t hash_mix(std::uint64_t h, double v) { return mix64(h ^ std::bit_cast<std::uint64_t>(v)); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void EncounterConfig::validate() const {
  if (!(r_min >= 0.0 && r_max >= r_min)) throw std::invalid_argument("sim.r_min/r_max must satisfy 0 <= r_min <= r_max");
  if (!(v_min > 0.0 && v_max >= v_min)) throw std::invalid_argument("sim.v_min/v_max must satisfy 0 < v_min <= v_max");
  if (!(tau_min >= 0.0 && tau_max >= tau_min)) throw std::invalid_argument("sim.tau_min/tau_max must satisfy 0 <= tau_min <= tau_max");
  if (!(hold >= 0.0)) throw std::invalid_argument("sim.hold must be >= 0");
  if (!(maneuver_period > 0.0)) throw std::invalid_argument("sim.maneuver_period must be > 0");
  if (maneuver_turns.empty()) throw std::invalid_argument("sim.maneuver_turns must not be empty");
  if (intruders == 0) throw std::invalid_argument("sim.intruders must be >= 1");
  if (!(noise.range >= 0.0 && noise.bearing >= 0.0 && noise.heading >= 0.0 && noise.speed >= 0.0)) {
    throw std::invalid_argument("sim.noise_* must be >= 0");
  }
}

void Encounter::validate() const {
  if (tau.empty()) throw std::invalid_argument("encounter: duration must be >= 1 step");
  if (intruders.empty() || intruders.size() != intruder_turns.size()) throw std::invalid_argument("encounter: intruder count mismatch");
  for (const auto& script : intruder_turns) {
    if (script.size() != tau.size()) throw std::invalid_argument("encounter: maneuver script length mismatch");
  }
  if (!(own.speed > 0.0)) throw std::invalid_argument("encounter: ownship speed must be > 0");
  for (const Aircraft& a : intruders) {
    if (!(a.speed > 0.0)) throw std::invalid_argument("encounter: intruder speed must be > 0");
  }
  if (!(noise.range >= 0.0 && noise.bearing >= 0.0 && noise.heading >= 0.0 && noise.speed >= 0.0)) {
    throw std::invalid_argument("encounter: noise std devs must be >= 0");
  }
}

Encounter sample_encounter(Rng& rng, const EncounterConfig& cfg) {
  cfg.validate();
  Encounter e;
  e.noise = cfg.noise;
  e.own.heading = wrap_angle(uniform(rng, -kPi, kPi));
  e.own.speed = uniform(rng, cfg.v_min, cfg.v_max);
  const auto tau0 = static_cast<std::size_t>(std::floor(uniform(rng, std::ceil(cfg.tau_min), std::floor(cfg.tau_max) + 1.0)));
  const std::size_t steps = tau0 + 1 + static_cast<std::size_t>(std::round(cfg.hold));
  for (std::size_t k = 0; k < steps; ++k) e.tau.push_back(k < tau0 ? static_cast<double>(tau0 - k) : 0.0);
  const auto period = static_cast<std::size_t>(std::max(1.0, std::round(cfg.maneuver_period)));
  for (std::size_t n = 0; n < cfg.intruders; ++n) {
    const double range = uniform(rng, cfg.r_min, cfg.r_max);
    const double bearing = uniform(rng, -kPi, kPi);
    Aircraft a;
    a.x = range * std::cos(e.own.heading + bearing);
    a.y = range * std::sin(e.own.heading + bearing);
    a.heading = wrap_angle(uniform(rng, -kPi, kPi));
    a.speed = uniform(rng, cfg.v_min, cfg.v_max);
    e.intruders.push_back(a);
    std::vector<double> script(steps);
    double rate = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
      if (k % period == 0) rate = cfg.maneuver_turns[static_cast<std::size_t>(rng() % cfg.maneuver_turns.size())];
      script[k] = rate;
    }
    e.intruder_turns.push_back(std::move(script));
  }
  e.seed = rng();
  return e;
}

StateVector relative_state(const Aircraft& own, const Aircraft& intruder, double tau, Advisory a_prev) {
  const double dx = intruder.x - own.x;
  const double dy = intruder.y - own.y;
  StateVector s;
  s.rho = std::hypot(dx, dy);
  s.theta = wrap_angle(std::atan2(dy, dx) - own.heading);
  s.psi = wrap_angle(intruder.heading - own.heading);
  s.v_own = own.speed;
  s.v_int = intruder.speed;
  s.tau = tau;
  s.a_prev = a_prev;
  return s;
}

std::vector<BeliefSample> belief_samples(const StateVector& m, const NoiseConfig& noise) {
  if (!(noise.range >= 0.0 && noise.bearing >= 0.0 && noise.heading >= 0.0 && noise.speed >= 0.0)) {
    throw std::invalid_argument("belief: noise std devs must be >= 0");
  }
  if (noise.zero()) return {{m, 1.0}};
  constexpr double n = 5.0;
  constexpr double kappa = 1.0;
  const double spread = std::sqrt(n + kappa);
  const double sig[5] = {noise.range, noise.bearing, noise.heading, noise.speed, noise.speed};
  std::vector<BeliefSample> out;
  out.reserve(11);
  out.push_back({m, kappa / (n + kappa)});
  const double w = 1.0 / (2.0 * (n + kappa));
  for (std::size_t d = 0; d < 5; ++d) {
    for (double sign : {1.0, -1.0}) {
      StateVector s = m;
      const double delta = sign * spread * sig[d];
      switch (d) {
        case 0: s.rho = std::max(0.0, s.rho + delta); break;
        case 1: s.theta += delta; break;  // left unwrapped so moments stay exact
        case 2: s.psi += delta; break;
        case 3: s.v_own = std::max(1e-6, s.v_own + delta); break;
        default: s.v_int = std::max(1e-6, s.v_int + delta); break;
      }
      out.push_back({s, w});
    }
  }
  return out;
}

ActionScores fuse_scores(std::span<const ActionScores> rows, FusionMode mode) {
  if (rows.empty()) throw std::invalid_argument("fusion: need at least one intruder");
  ActionScores out = rows.front();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    for (std::size_t a = 0; a < kNumAdvisories; ++a) {
      out[a] = mode == FusionMode::WorstCase ? std::min(out[a], rows[i][a]) : out[a] + rows[i][a];
    }
  }
  return out;
}

Advisory fuse_intruders(std::span<const ActionScores> rows, FusionMode mode) { return optimal_action(fuse_scores(rows, mode)); }

bool Trajectory::same_outcome(const Trajectory& o) const {
  return steps == o.steps && advisories == o.advisories && nmac == o.nmac && alert == o.alert && reversal == o.reversal &&
         split == o.split && min_separation == o.min_separation && digest == o.digest;
}

Trajectory run_encounter(const ScoreSource& policy, const Encounter& enc, const RunFlags& flags) {
  using Clock = std::chrono::steady_clock;
  enc.validate();
  const AdjustedSource adjusted(policy, flags.adjustments);
  const ScoreSource& source = flags.adjustments.any() ? static_cast<const ScoreSource&>(adjusted) : policy;
  Rng noise_rng(enc.seed);

  Trajectory tr;
  tr.min_separation = std::numeric_limits<double>::infinity();
  Aircraft own = enc.own;
  std::vector<Aircraft> intruders = enc.intruders;
  Advisory prev = Advisory::COC;
  bool gap_after_alert = false;
  std::uint64_t h = 0x9e3779b97f4a7c15ull;
  std::vector<ActionScores> rows(intruders.size());
  Clock::duration query_time{};

  for (std::size_t k = 0; k < enc.steps(); ++k) {
    const double tau = enc.tau[k];
    TrajectoryStep rec;
    for (std::size_t n = 0; n < intruders.size(); ++n) {
      const StateVector truth = relative_state(own, intruders[n], tau, prev);
      tr.min_separation = std::min(tr.min_separation, truth.rho);
      if (tau <= 0.0 && truth.rho < flags.nmac_range) tr.nmac = true;
      // Draws happen even at zero noise so the stream does not depend on it.
      StateVector m = truth;
      m.rho = std::max(0.0, m.rho + enc.noise.range * normal(noise_rng, 0.0, 1.0));
      m.theta = wrap_angle(m.theta + enc.noise.bearing * normal(noise_rng, 0.0, 1.0));
      m.psi = wrap_angle(m.psi + enc.noise.heading * normal(noise_rng, 0.0, 1.0));
      m.v_own = std::max(1e-6, m.v_own + enc.noise.speed * normal(noise_rng, 0.0, 1.0));
      m.v_int = std::max(1e-6, m.v_int + enc.noise.speed * normal(noise_rng, 0.0, 1.0));
      const std::vector<BeliefSample> samples = belief_samples(m, enc.noise);
      const auto t0 = flags.time_queries ? Clock::now() : Clock::time_point{};
      rows[n] = belief_scores(source, samples);
      if (flags.time_queries) query_time += Clock::now() - t0;
      if (flags.record) {
        rec.truth.push_back(truth);
        rec.measured.push_back(m);
      }
    }
    const Advisory a = fuse_intruders(rows, flags.fusion);

    if (is_alert(a)) {
      tr.alert = true;
      if (gap_after_alert) tr.split = true;
      gap_after_alert = false;
    } else if (tr.alert) {
      gap_after_alert = true;
    }
    if (is_reversal(prev, a)) tr.reversal = true;

    h = mix64(h ^ index_of(a));
    h = hash_mix(hash_mix(hash_mix(h, own.x), own.y), own.heading);
    for (const Aircraft& i : intruders) h = hash_mix(hash_mix(hash_mix(h, i.x), i.y), i.heading);
    tr.advisories.push_back(a);
    if (flags.record) {
      rec.step = k;
      rec.tau = tau;
      rec.own = own;
      rec.intruders = intruders;
      rec.advisory = a;
      tr.steps.push_back(std::move(rec));
    }

    advance(own, turn_rate_deg(a), 1.0);
    for (std::size_t n = 0; n < intruders.size(); ++n) advance(intruders[n], enc.intruder_turns[n][k], 1.0);
    prev = a;
  }
  tr.digest = h;
  tr.query_seconds = std::chrono::duration<double>(query_time).count();
  return tr;
}

SimMetrics aggregate_metrics(std::span<const Trajectory> trajectories, double reference_seconds) {
  if (trajectories.empty()) throw std::invalid_argument("metrics: need at least one trajectory");
  SimMetrics m;
  m.encounters = trajectories.size();
  for (const Trajectory& t : trajectories) {
    m.nmac += t.nmac;
    m.alert += t.alert;
    m.reversal += t.reversal;
    m.split += t.split;
    m.query_seconds += t.query_seconds;
  }
  const auto n = static_cast<double>(m.encounters);
  m.p_nmac = static_cast<double>(m.nmac) / n;
  m.p_alert = static_cast<double>(m.alert) / n;
  m.p_reversal = static_cast<double>(m.reversal) / n;
  m.p_split = static_cast<double>(m.split) / n;
  m.relative_runtime = reference_seconds > 0.0 ? m.query_seconds / reference_seconds : 1.0;
  return m;
}

std::string SimMetrics::to_kv(bool with_runtime) const {
  std::ostringstream os;
  os << "encounters=" << encounters << "\nnmac=" << nmac << "\nalert=" << alert << "\nreversal=" << reversal
     << "\nsplit=" << split << "\np_nmac=" << fmt(p_nmac) << "\np_alert=" << fmt(p_alert)
     << "\np_reversal=" << fmt(p_reversal) << "\np_split=" << fmt(p_split) << "\n";
  if (with_runtime) os << "query_seconds=" << fmt(query_seconds) << "\nrelative_runtime=" << fmt(relative_runtime) << "\n";
  return os.str();
}

std::string SimMetrics::csv_header(bool with_runtime) {
  std::string h = "policy,encounters,p_nmac,p_alert,p_reversal,p_split";
  if (with_runtime) h += ",query_seconds,relative_runtime";
  return h;
}

std::string SimMetrics::csv_row(const std::string& name, bool with_runtime) const {
  std::ostringstream os;
  os << name << "," << encounters << "," << fmt(p_nmac) << "," << fmt(p_alert) << "," << fmt(p_reversal) << "," << fmt(p_split);
  if (with_runtime) os << "," << fmt(query_seconds) << "," << fmt(relative_runtime);
  return os.str();
}

SimResult run_simulation(const ScoreSource& policy, const SimConfig& cfg, double reference_seconds) {
  cfg.encounter.validate();
  if (cfg.encounters == 0) throw std::invalid_argument("sim.encounters must be >= 1");
  SimResult out;
  out.trajectories.resize(cfg.encounters);
  parallel_for(cfg.encounters, cfg.threads, [&](std::size_t i) {
    Rng rng = make_rng(cfg.seed, "encounter", i);
    const Encounter enc = sample_encounter(rng, cfg.encounter);
    RunFlags flags = cfg.flags;
    flags.record = flags.record && i < cfg.keep_trajectories;
    out.trajectories[i] = run_encounter(policy, enc, flags);
  });
  out.metrics = aggregate_metrics(out.trajectories, reference_seconds);
  return out;
}

void write_trajectories_csv(std::span<const Trajectory> trajectories, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "encounter,step,tau,own_x,own_y,own_heading,intruder,int_x,int_y,int_heading,advisory,nmac,alert,reversal,split\n";
  for (std::size_t e = 0; e < trajectories.size(); ++e) {
    const Trajectory& t = trajectories[e];
    for (const TrajectoryStep& s : t.steps) {
      for (std::size_t n = 0; n < s.intruders.size(); ++n) {
        const Aircraft& i = s.intruders[n];
        out << e << "," << s.step << "," << fmt(s.tau) << "," << fmt(s.own.x) << "," << fmt(s.own.y) << ","
            << fmt(s.own.heading) << "," << n << "," << fmt(i.x) << "," << fmt(i.y) << "," << fmt(i.heading) << ","
            << to_string(s.advisory) << "," << t.nmac << "," << t.alert << "," << t.reversal << "," << t.split << "\n";
      }
    }
  }
}

}  // namespace qcomp
