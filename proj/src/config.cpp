#include "qcomp/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qcomp/rng.hpp"

namespace qcomp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

const std::map<std::string, std::string>& desk_defaults() {
  static const std::map<std::string, std::string> d = {
      {"seed", "0"},
      {"threads", "0"},
      {"grid.rho_min", "500"},
      {"grid.rho_max", "60000"},
      {"grid.rho_n", "12"},
      {"grid.theta_n", "9"},
      {"grid.psi_n", "9"},
      {"grid.v_own", "100,300,600"},
      {"grid.v_int", "100,300,600"},
      {"grid.tau", "0,1,5,10,20,40,60,80,100"},
      {"mdp.discount", "0.97"},
      {"mdp.nmac_penalty", "-100"},
      {"mdp.alert_cost", "-0.5"},
      {"mdp.strong_alert_cost", "-0.5"},
      {"mdp.reversal_cost", "-2"},
      {"mdp.coc_band_penalty", "-15"},
      {"mdp.nmac_range", "500"},
      {"mdp.intruder_turns", "-1.5,0,1.5"},
      {"mdp.intruder_probs", "0.25,0.5,0.25"},
      {"mdp.tol", "1e-6"},
      {"mdp.max_sweeps", "5000"},
      {"linear.allow_ridge", "1"},
      {"tree.max_depth", "12"},
      {"tree.max_candidates", "32"},
      {"tree.min_leaf", "1"},
      {"train.hidden", "32,32,32,32"},
      {"train.epochs", "200"},
      {"train.batch", "256"},
      {"train.alpha", "0.01"},
      {"train.beta1", "0.9"},
      {"train.beta2", "0.999"},
      {"train.loss", "asymmetric"},
      {"train.factor_opt", "20"},
      {"train.factor_sub", "5"},
      {"train.strip_coc_penalty", "1"},
      {"train.coc_penalty", "-15"},
      {"train.online_cost_targets", "0"},
      {"train.online_cost", "1"},
      {"prune.step", "0.02"},
      {"prune.target", "0.6"},
      {"prune.retrain_epochs", "5"},
      {"policy.online_costs", "0"},
      {"policy.online_cost", "1"},
      {"policy.coc_penalty", "-15"},
      {"slice.psi", "3.14159265358979"},
      {"slice.v_own", "300"},
      {"slice.v_int", "300"},
      {"slice.tau", "0"},
      {"slice.a_prev", "COC"},
      {"slice.x_min", "-4000"},
      {"slice.x_max", "12000"},
      {"slice.y_min", "-8000"},
      {"slice.y_max", "8000"},
      {"slice.resolution", "120"},
      {"bench.queries", "200000"},
      {"bench.big_factor", "45"},
      {"sim.encounters", "10000"},
      {"sim.r_min", "3000"},
      {"sim.r_max", "15000"},
      {"sim.v_min", "100"},
      {"sim.v_max", "600"},
      {"sim.tau_min", "20"},
      {"sim.tau_max", "60"},
      {"sim.hold", "20"},
      {"sim.maneuver_period", "10"},
      {"sim.maneuver_turns", "-3,-1.5,0,1.5,3"},
      {"sim.intruders", "1"},
      {"sim.fusion", "worst_case"},
      {"sim.nmac_range", "500"},
      {"sim.noise_range", "50"},
      {"sim.noise_bearing", "0.01"},
      {"sim.noise_heading", "0.02"},
      {"sim.noise_speed", "5"},
      {"sim.keep_trajectories", "10"},
  };
  return d;
}

}  // namespace

Config Config::profile(const std::string& name) {
  Config c;
  c.values_ = desk_defaults();
  if (name == "desk") return c;
  if (name == "paper") {
    // Training scale of the published array: 6 x 45 members, 2^16 batches,
    // 1200 epochs.
    c.values_["train.hidden"] = "45,45,45,45,45,45";
    c.values_["train.batch"] = "65536";
    c.values_["train.epochs"] = "1200";
    return c;
  }
  throw ConfigError("profile", "unknown profile '" + name + "' (expected desk or paper)");
}

void Config::set(const std::string& key, const std::string& value) {
  if (!values_.count(key)) throw ConfigError(key, "unknown config key '" + key + "'");
  values_[key] = trim(value);
}

const std::string& Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown config key '" + key + "'");
  return it->second;
}

void Config::merge_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "expected key=value, got '" + assignment + "'");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void Config::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config file " + path.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t.starts_with("//")) continue;
    try {
      merge_assignment(t);
    } catch (const ConfigError& e) {
      throw ConfigError(e.key(), path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) {
    if (k != "threads") out += k + "=" + v + "\n";
  }
  return out;
}

std::string Config::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

double Config::number(const std::string& key) const {
  const std::string& s = get(key);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key, key + ": expected a number, got '" + s + "'");
  return v;
}

std::uint64_t Config::integer(const std::string& key) const {
  const std::string& s = get(key);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError(key, key + ": expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

bool Config::flag(const std::string& key) const {
  const std::string& s = get(key);
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(key, key + ": expected a boolean, got '" + s + "'");
}

std::vector<double> Config::numbers(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || p != tok.data() + tok.size()) {
      throw ConfigError(key, key + ": expected comma-separated numbers, got '" + get(key) + "'");
    }
    out.push_back(v);
  }
  return out;
}

Advisory Config::advisory(const std::string& key) const {
  const auto a = parse_advisory(get(key));
  if (!a) throw ConfigError(key, key + ": expected one of COC, WL, WR, SL, SR");
  return *a;
}

GridSpec Config::grid() const {
  std::vector<double> v_own, v_int, tau;
  for (double v : numbers("grid.v_own")) v_own.push_back(to_f32_cut(v, false));
  for (double v : numbers("grid.v_int")) v_int.push_back(to_f32_cut(v, false));
  for (double v : numbers("grid.tau")) tau.push_back(to_f32_cut(v, false));
  GridSpec g({log_spaced(number("grid.rho_min"), number("grid.rho_max"), integer("grid.rho_n")),
              uniform_angles(integer("grid.theta_n")), uniform_angles(integer("grid.psi_n")), v_own, v_int, tau});
  try {
    g.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("grid", e.what());
  }
  return g;
}

MdpConfig Config::mdp() const {
  MdpConfig m;
  m.grid = grid();
  m.discount = number("mdp.discount");
  m.rewards.nmac_penalty = number("mdp.nmac_penalty");
  m.rewards.alert_cost = number("mdp.alert_cost");
  m.rewards.strong_alert_cost = number("mdp.strong_alert_cost");
  m.rewards.reversal_cost = number("mdp.reversal_cost");
  m.rewards.coc_band_penalty = number("mdp.coc_band_penalty");
  m.nmac_range = number("mdp.nmac_range");
  m.intruder_turns = numbers("mdp.intruder_turns");
  m.intruder_probs = numbers("mdp.intruder_probs");
  m.tol = number("mdp.tol");
  m.max_sweeps = integer("mdp.max_sweeps");
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("mdp", e.what());
  }
  return m;
}

TreeFitOptions Config::tree() const {
  TreeFitOptions t;
  t.max_depth = static_cast<int>(integer("tree.max_depth"));
  t.max_candidates = integer("tree.max_candidates");
  t.min_leaf = integer("tree.min_leaf");
  t.threads = threads();
  return t;
}

LinearFitOptions Config::linear() const { return {flag("linear.allow_ridge")}; }

TrainConfig Config::train() const {
  TrainConfig t;
  t.hidden.clear();
  for (double h : numbers("train.hidden")) t.hidden.push_back(static_cast<int>(h));
  t.epochs = integer("train.epochs");
  t.batch = integer("train.batch");
  t.optimizer = {number("train.alpha"), number("train.beta1"), number("train.beta2")};
  const std::string& loss = get("train.loss");
  if (loss == "asymmetric") {
    t.loss = LossKind::Asymmetric;
  } else if (loss == "mse") {
    t.loss = LossKind::Mse;
  } else {
    throw ConfigError("train.loss", "train.loss: expected asymmetric or mse, got '" + loss + "'");
  }
  t.factors = {number("train.factor_opt"), number("train.factor_sub")};
  t.strip_coc_penalty = flag("train.strip_coc_penalty");
  t.coc_penalty = number("train.coc_penalty");
  t.online_cost_targets = flag("train.online_cost_targets");
  t.online_cost = number("train.online_cost");
  t.seed = seed();
  t.threads = threads();
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("train", e.what());
  }
  return t;
}

PolicyAdjustments Config::policy() const {
  PolicyAdjustments p;
  p.coc_penalty = number("policy.coc_penalty");
  p.online_costs = flag("policy.online_costs");
  p.online_cost = number("policy.online_cost");
  return p;
}

SliceSpec Config::slice() const {
  SliceSpec s;
  s.psi = number("slice.psi");
  s.v_own = number("slice.v_own");
  s.v_int = number("slice.v_int");
  s.tau = number("slice.tau");
  s.a_prev = advisory("slice.a_prev");
  s.x_min = number("slice.x_min");
  s.x_max = number("slice.x_max");
  s.y_min = number("slice.y_min");
  s.y_max = number("slice.y_max");
  s.res_x = s.res_y = integer("slice.resolution");
  return s;
}

SimConfig Config::sim() const {
  SimConfig s;
  s.encounters = integer("sim.encounters");
  EncounterConfig& e = s.encounter;
  e.r_min = number("sim.r_min");
  e.r_max = number("sim.r_max");
  e.v_min = number("sim.v_min");
  e.v_max = number("sim.v_max");
  e.tau_min = number("sim.tau_min");
  e.tau_max = number("sim.tau_max");
  e.hold = number("sim.hold");
  e.maneuver_period = number("sim.maneuver_period");
  e.maneuver_turns = numbers("sim.maneuver_turns");
  e.intruders = integer("sim.intruders");
  e.noise = {number("sim.noise_range"), number("sim.noise_bearing"), number("sim.noise_heading"), number("sim.noise_speed")};
  const std::string& fusion = get("sim.fusion");
  if (fusion == "worst_case") {
    s.flags.fusion = FusionMode::WorstCase;
  } else if (fusion == "sum") {
    s.flags.fusion = FusionMode::Sum;
  } else {
    throw ConfigError("sim.fusion", "sim.fusion: expected worst_case or sum, got '" + fusion + "'");
  }
  s.flags.nmac_range = number("sim.nmac_range");
  s.flags.adjustments = policy();
  s.seed = seed();
  s.threads = threads();
  s.keep_trajectories = integer("sim.keep_trajectories");
  try {
    e.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("sim", ex.what());
  }
  return s;
}

}  // namespace qcomp
