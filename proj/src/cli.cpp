#include "qcomp/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "qcomp/baselines.hpp"
#include "qcomp/config.hpp"
#include "qcomp/evaluate.hpp"
#include "qcomp/mdp.hpp"
#include "qcomp/net_io.hpp"
#include "qcomp/simulate.hpp"
#include "qcomp/table_io.hpp"
#include "qcomp/train.hpp"

namespace qcomp {

namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string command;
  std::vector<std::string> configs;
  std::vector<std::string> sets;
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string table;
  std::string array;
  std::string tree;
  std::string linear;
  std::string out;
  std::string report;
  std::string curve;
  bool self = false;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
  if (!f) throw Error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

Config resolve(const Options& o) {
  Config c = Config::profile(o.profile);
  for (const std::string& f : o.configs) c.merge_file(f);
  for (const std::string& s : o.sets) c.merge_assignment(s);
  if (o.seed) c.set("seed", std::to_string(*o.seed));
  if (o.threads) c.set("threads", std::to_string(*o.threads));
  return c;
}

// Artifact provenance lines shared by every output.
std::vector<std::string> provenance(const Config& c, const std::string& command) {
  return {"qcomp " + command, "seed=" + c.get("seed"), "config_hash=" + c.hash()};
}

void write_manifest(const Options& o, const Config& c, const fs::path& artifact) {
  std::string text = "# qcomp " + o.command + "\n# config_hash=" + c.hash() + "\n";
  if (!o.table.empty()) text += "# table=" + o.table + "\n";
  if (!o.array.empty()) text += "# array=" + o.array + "\n";
  if (!o.tree.empty()) text += "# tree=" + o.tree + "\n";
  if (!o.linear.empty()) text += "# linear=" + o.linear + "\n";
  text += "# rerun: qcomp " + o.command + " --config <this file> with the same inputs\n";
  text += c.canonical();
  fs::path p = artifact;
  p += ".manifest";
  write_text(p, text);
}

void require(const std::string& value, const char* flag, const std::string& command) {
  if (value.empty()) throw UsageError(command + ": " + flag + " is required");
}

void emit_report(const Options& o, std::ostream& out, const std::string& text) {
  out << text;
  if (!o.report.empty()) write_text(o.report, text);
}

int cmd_gen_table(const Options& o, const Config& c, std::ostream& out) {
  require(o.out, "--out", o.command);
  const MdpConfig mdp = c.mdp();
  const auto t0 = std::chrono::steady_clock::now();
  const ValueIterationResult r = value_iterate(mdp, c.threads());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_table(r.table, o.out);
  write_manifest(o, c, o.out);
  const ScoreStats st = score_stats(r.table);
  std::ostringstream os;
  os << "table=" << o.out << "\nstates=" << r.table.num_states() << "\nbytes=" << fs::file_size(o.out)
     << "\nsweeps=" << r.sweeps << "\nresidual=" << fmt(r.residual) << "\nscore_mean=" << fmt(st.mean)
     << "\nscore_stddev=" << fmt(st.stddev) << "\nscore_min=" << fmt(st.min) << "\nscore_max=" << fmt(st.max) << "\n";
  emit_report(o, out, os.str());
  out << "runtime_seconds=" << fmt(secs) << "\n";
  return 0;
}

int cmd_fit_linear(const Options& o, const Config& c, std::ostream& out) {
  require(o.table, "--table", o.command);
  const ScoreTable table = load_table(o.table);
  const LinearModel m = fit_linear(table, c.linear());
  FidelityReport r = evaluate_predictor(m, table, c.threads());
  r.storage_bytes = m.storage_bytes();
  r.params = static_cast<std::size_t>(m.weights.size());
  if (!o.out.empty()) {
    std::string text;
    for (const std::string& line : provenance(c, o.command)) text += "//" + line + "\n";
    write_text(o.out, text + encode_linear(m));
    write_manifest(o, c, o.out);
  }
  emit_report(o, out, r.to_kv() + "used_ridge=" + std::to_string(m.used_ridge) + "\n");
  return 0;
}

int cmd_fit_tree(const Options& o, const Config& c, std::ostream& out) {
  require(o.table, "--table", o.command);
  const ScoreTable table = load_table(o.table);
  const RegressionTree tree = fit_tree(table, c.tree());
  FidelityReport r = evaluate_predictor(tree, table, c.threads());
  r.storage_bytes = tree.storage_bytes();
  r.params = tree.nodes().size();
  if (!o.out.empty()) {
    const auto bytes = encode_tree(tree);
    write_file_bytes(o.out, bytes);
    write_manifest(o, c, o.out);
  }
  emit_report(o, out, r.to_kv() + "depth=" + std::to_string(tree.depth()) + "\nleaves=" + std::to_string(tree.num_leaves()) + "\n");
  return 0;
}

int cmd_train(const Options& o, const Config& c, std::ostream& out) {
  require(o.table, "--table", o.command);
  require(o.out, "--out", o.command);
  const ScoreTable table = load_table(o.table);
  const TrainConfig cfg = c.train();
  std::vector<std::vector<EpochStats>> logs(table.grid().size(Dim::Tau) * kNumAdvisories);
  const NetworkArray array = train_array(table, cfg, [&](std::size_t m, const std::vector<EpochStats>& h) { logs[m] = h; });
  const std::size_t bytes = save_array(array, o.out, provenance(c, o.command));
  write_manifest(o, c, o.out);
  std::string log = "member,epoch,loss\n";
  for (std::size_t m = 0; m < logs.size(); ++m) {
    for (const EpochStats& e : logs[m]) log += std::to_string(m) + "," + std::to_string(e.epoch) + "," + fmt(e.loss) + "\n";
  }
  write_text(fs::path(o.out) / "train_log.csv", log);
  const AdjustedSource policy(array, array.restore_adjustments(cfg.coc_penalty));
  FidelityReport r = evaluate_predictor(policy, table, c.threads());
  r.name = "array";
  r.storage_bytes = bytes;
  r.params = array.num_params();
  const ScoreStats st = score_stats(table);
  emit_report(o, out,
              r.to_kv() + "members=" + std::to_string(array.members().size()) + "\ntable_bytes=" +
                  std::to_string(fs::file_size(o.table)) + "\nrmse_over_stddev=" + fmt(r.rmse / st.stddev) + "\n");
  return 0;
}

int cmd_prune(const Options& o, const Config& c, std::ostream& out) {
  require(o.table, "--table", o.command);
  require(o.array, "--array", o.command);
  require(o.out, "--out", o.command);
  const ScoreTable table = load_table(o.table);
  NetworkArray array = load_array(o.array);
  const TrainConfig cfg = c.train();
  const std::vector<PrunePoint> curve =
      prune_array(array, table, cfg, c.number("prune.step"), c.number("prune.target"), c.integer("prune.retrain_epochs"));
  const std::size_t bytes = save_array(array, o.out, provenance(c, o.command));
  write_manifest(o, c, o.out);
  std::string csv = "iteration,sparsity,rmse,policy_error_pct\n";
  for (const PrunePoint& p : curve) {
    csv += std::to_string(p.iteration) + "," + fmt(p.sparsity) + "," + fmt(p.rmse) + "," + fmt(p.policy_error_pct) + "\n";
  }
  write_text(o.curve.empty() ? fs::path(o.out) / "prune_curve.csv" : fs::path(o.curve), csv);
  std::ostringstream os;
  os << "iterations=" << curve.size() - 1 << "\nsparsity=" << fmt(curve.back().sparsity)
     << "\npolicy_error_pct_unpruned=" << fmt(curve.front().policy_error_pct)
     << "\npolicy_error_pct_pruned=" << fmt(curve.back().policy_error_pct) << "\nrmse_unpruned=" << fmt(curve.front().rmse)
     << "\nrmse_pruned=" << fmt(curve.back().rmse) << "\nbytes=" << bytes << "\n";
  emit_report(o, out, os.str());
  return 0;
}

// Owns whichever predictor the flags select.
struct Predictor {
  std::unique_ptr<TableSource> table;
  std::unique_ptr<NetworkArray> array;
  std::unique_ptr<AdjustedSource> adjusted;
  std::unique_ptr<RegressionTree> tree;
  std::unique_ptr<LinearModel> linear;
  const ScoreSource* source = nullptr;
  std::size_t storage = 0;
  std::size_t params = 0;
};

Predictor load_predictor(const Options& o, const Config& c, const ScoreTable& table) {
  const int chosen = !o.array.empty() + !o.tree.empty() + !o.linear.empty() + o.self;
  if (chosen > 1) throw UsageError(o.command + ": choose at most one of --array, --tree, --linear, --self");
  Predictor p;
  if (!o.array.empty()) {
    p.array = std::make_unique<NetworkArray>(load_array(o.array));
    p.adjusted = std::make_unique<AdjustedSource>(*p.array, p.array->restore_adjustments(c.number("train.coc_penalty")));
    p.source = p.adjusted.get();
    p.storage = array_serialized_bytes(*p.array);
    p.params = p.array->num_params();
  } else if (!o.tree.empty()) {
    p.tree = std::make_unique<RegressionTree>(decode_tree(read_file_bytes(o.tree)));
    p.source = p.tree.get();
    p.storage = p.tree->storage_bytes();
    p.params = p.tree->nodes().size();
  } else if (!o.linear.empty()) {
    p.linear = std::make_unique<LinearModel>(decode_linear(read_text(o.linear)));
    p.source = p.linear.get();
    p.storage = p.linear->storage_bytes();
    p.params = static_cast<std::size_t>(p.linear->weights.size());
  } else {
    p.table = std::make_unique<TableSource>(table);
    p.source = p.table.get();
    p.storage = table.scores().size() * sizeof(float);
    p.params = table.scores().size();
  }
  return p;
}

int cmd_eval(const Options& o, const Config& c, std::ostream& out) {
  require(o.table, "--table", o.command);
  const ScoreTable table = load_table(o.table);
  const Predictor p = load_predictor(o, c, table);
  FidelityReport r = evaluate_predictor(*p.source, table, c.threads());
  r.storage_bytes = p.storage;
  r.params = p.params;
  emit_report(o, out, r.to_kv());
  if (!o.out.empty()) {
    write_text(o.out, FidelityReport::csv_header() + "\n" + r.csv_row() + "\n");
    write_manifest(o, c, o.out);
  }
  return 0;
}

int cmd_slice(const Options& o, const Config& c, std::ostream& out) {
  require(o.table, "--table", o.command);
  require(o.out, "--out", o.command);
  const ScoreTable table = load_table(o.table);
  const Predictor p = load_predictor(o, c, table);
  const PolicySlice s = policy_slice(*p.source, c.slice(), c.policy());
  fs::path meta = o.out;
  meta += ".meta";
  write_slice(s, o.out, meta);
  write_manifest(o, c, o.out);
  std::size_t alerts = 0;
  for (Advisory a : s.cells) alerts += is_alert(a);
  out << "slice=" << o.out << "\ncells=" << s.cells.size() << "\nalert_cells=" << alerts << "\n";
  return 0;
}

int cmd_bench(const Options& o, const Config& c, std::ostream& out) {
  require(o.table, "--table", o.command);
  const ScoreTable table = load_table(o.table);
  const TableSource table_source(table);
  std::vector<const ScoreSource*> preds = {&table_source};
  std::unique_ptr<NetworkArray> array;
  std::unique_ptr<AdjustedSource> adjusted;
  std::unique_ptr<MlpSource> member;
  std::unique_ptr<Mlp> big;
  std::unique_ptr<MlpSource> big_source;
  std::unique_ptr<RegressionTree> tree;
  if (!o.array.empty()) {
    array = std::make_unique<NetworkArray>(load_array(o.array));
    adjusted = std::make_unique<AdjustedSource>(*array, array->restore_adjustments(c.number("train.coc_penalty")));
    preds.push_back(adjusted.get());
    member = std::make_unique<MlpSource>(array->members().front());
    preds.push_back(member.get());
    big = std::make_unique<Mlp>(widened_architecture(array->members().front().layer_sizes(), c.number("bench.big_factor"), 7));
    Rng rng = make_rng(c.seed(), "bench-big");
    init_glorot(*big, rng);
    big_source = std::make_unique<MlpSource>(*big);
    preds.push_back(big_source.get());
  }
  if (!o.tree.empty()) {
    tree = std::make_unique<RegressionTree>(decode_tree(read_file_bytes(o.tree)));
    preds.push_back(tree.get());
  }
  const auto queries = bench_queries(table.grid(), c.integer("bench.queries"), c.seed());
  const auto results = bench_runtime(preds, queries);
  std::ostringstream os;
  os << "predictor,mean_ns,p99_ns,rel_mean,rel_p99\n";
  const char* labels[] = {"table", "array", "member", "single_net"};
  for (std::size_t i = 0; i < results.size(); ++i) {
    const std::string name = i < 4 && array ? labels[i] : (i == 0 ? "table" : results[i].name);
    os << name << "," << fmt(results[i].mean_ns) << "," << fmt(results[i].p99_ns) << "," << fmt(results[i].rel_mean) << ","
       << fmt(results[i].rel_p99) << "\n";
  }
  if (big) os << "# single_net params=" << big->num_params() << " member params=" << array->members().front().num_params() << "\n";
  emit_report(o, out, os.str());
  return 0;
}

int cmd_sim(const Options& o, const Config& c, std::ostream& out) {
  require(o.table, "--table", o.command);
  require(o.out, "--out", o.command);
  const ScoreTable table = load_table(o.table);
  const SimConfig cfg = c.sim();
  const TableSource table_source(table);
  fs::create_directories(o.out);
  const SimResult ref = run_simulation(table_source, cfg);
  std::string kv = "[table]\n" + ref.metrics.to_kv(false);
  std::string csv = SimMetrics::csv_header(false) + "\n" + ref.metrics.csv_row("table", false) + "\n";
  std::string runtime = "policy,query_seconds,relative_runtime\ntable," + fmt(ref.metrics.query_seconds) + ",1\n";
  write_trajectories_csv(ref.trajectories, fs::path(o.out) / "trajectories_table.csv");
  if (!o.array.empty()) {
    const NetworkArray array = load_array(o.array);
    SimConfig acfg = cfg;
    PolicyAdjustments adj = array.restore_adjustments(c.number("train.coc_penalty"));
    adj.online_costs = cfg.flags.adjustments.online_costs;
    adj.online_cost = cfg.flags.adjustments.online_cost;
    acfg.flags.adjustments = adj;
    const SimResult res = run_simulation(array, acfg, ref.metrics.query_seconds);
    kv += "[array]\n" + res.metrics.to_kv(false);
    csv += res.metrics.csv_row("array", false) + "\n";
    runtime += "array," + fmt(res.metrics.query_seconds) + "," + fmt(res.metrics.relative_runtime) + "\n";
    write_trajectories_csv(res.trajectories, fs::path(o.out) / "trajectories_array.csv");
  }
  write_text(fs::path(o.out) / "metrics.txt", kv);
  write_text(fs::path(o.out) / "metrics.csv", csv);
  write_text(fs::path(o.out) / "runtime.csv", runtime);
  write_manifest(o, c, o.out);
  emit_report(o, out, kv);
  out << runtime;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Score-table compression toolkit"};
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-table", "Generate the score table by value iteration"},
      {"fit-linear", "Fit the linear regression baseline"},
      {"fit-tree", "Fit the regression tree baseline"},
      {"train", "Train the network array"},
      {"prune", "Prune and retrain a network array"},
      {"eval", "Table-level fidelity of a predictor"},
      {"slice", "Export a policy slice"},
      {"bench", "Per-query latency benchmark"},
      {"sim", "Monte-Carlo encounter simulation"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.configs, "key=value config file (repeatable)");
    sub->add_option("--set", o.sets, "key=value override (repeatable)");
    sub->add_option("--profile", o.profile, "desk or paper defaults");
    sub->add_option("--seed", o.seed, "root seed");
    sub->add_option("--threads", o.threads, "worker cap (0 = all cores)");
    sub->add_option("--table", o.table, "binary score table");
    sub->add_option("--array", o.array, "network array directory");
    sub->add_option("--tree", o.tree, "binary regression tree");
    sub->add_option("--linear", o.linear, "linear model text file");
    sub->add_flag("--self", o.self, "use the table itself as the predictor");
    sub->add_option("--out", o.out, "output path");
    sub->add_option("--report", o.report, "also write the report to this file");
    sub->add_option("--curve", o.curve, "prune curve CSV path");
    sub->callback([&o, name = name] { o.command = name; });
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    const Config cfg = resolve(o);
    if (o.command == "gen-table") return cmd_gen_table(o, cfg, out);
    if (o.command == "fit-linear") return cmd_fit_linear(o, cfg, out);
    if (o.command == "fit-tree") return cmd_fit_tree(o, cfg, out);
    if (o.command == "train") return cmd_train(o, cfg, out);
    if (o.command == "prune") return cmd_prune(o, cfg, out);
    if (o.command == "eval") return cmd_eval(o, cfg, out);
    if (o.command == "slice") return cmd_slice(o, cfg, out);
    if (o.command == "bench") return cmd_bench(o, cfg, out);
    if (o.command == "sim") return cmd_sim(o, cfg, out);
    err << "usage error: unknown command\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace qcomp
