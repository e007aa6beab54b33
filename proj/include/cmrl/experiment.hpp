#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cmrl/agents.hpp"
#include "cmrl/detail/text.hpp"
#include "cmrl/env.hpp"
#include "cmrl/error.hpp"
#include "cmrl/marl.hpp"
#include "cmrl/nn.hpp"
#include "cmrl/oracle.hpp"
#include "cmrl/routing.hpp"
#include "cmrl/topology.hpp"
#include "cmrl/traffic.hpp"

namespace cmrl {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

// ---------------------------------------------------------------------------
// Config

struct EvalOptions {
  std::vector<int> t_values{2};  // inference sweep
  int t = 2;                     // T used by the failure sweep
  bool failures = false;
  std::vector<std::string> methods{"ospf", "cmrl"};
  double grid = 0.05;  // oracle granularity
};

struct ExperimentConfig {
  fs::path topology;
  std::optional<fs::path> tm_file;
  GravityParams gravity;
  double train_fraction = 0.8;
  TrainConfig train;
  EvalOptions eval;
  fs::path out = "out";

  bool uses_method(std::string_view m) const {
    return std::find(eval.methods.begin(), eval.methods.end(), m) != eval.methods.end();
  }
};

inline constexpr std::string_view kMethods[] = {"ospf", "cmrl", "marl", "single"};

namespace detail {

template <typename E>
struct EnumName {
  E value;
  std::string_view name;
};

inline constexpr EnumName<TrainMode> kTrainModes[] = {
    {TrainMode::Cmrl, "cmrl"}, {TrainMode::Marl, "marl"}, {TrainMode::Single, "single"}};
inline constexpr EnumName<ActorGradient> kActorGradients[] = {
    {ActorGradient::Advantage, "advantage"}, {ActorGradient::DdpgChain, "ddpg-chain"}};
inline constexpr EnumName<AdvantageWeight> kAdvantageWeights[] = {
    {AdvantageWeight::Positive, "positive"}, {AdvantageWeight::Signed, "signed"}};
inline constexpr EnumName<RewardMode> kRewardModes[] = {
    {RewardMode::Prose, "prose"}, {RewardMode::PaperLiteral, "paper-literal"}};
inline constexpr EnumName<ObservationScope> kScopes[] = {
    {ObservationScope::Incident, "incident"}, {ObservationScope::OutOnly, "out-only"}};
inline constexpr EnumName<CriticInput> kCriticInputs[] = {
    {CriticInput::State, "state"}, {CriticInput::Observations, "observations"}};
inline constexpr EnumName<nn::OptimizerKind> kOptimizers[] = {
    {nn::OptimizerKind::Adam, "adam"}, {nn::OptimizerKind::Sgd, "sgd"}};

template <typename E, std::size_t N>
E enum_from(const EnumName<E> (&table)[N], const std::string& s, std::string_view key) {
  for (const auto& e : table)
    if (e.name == s) return e.value;
  std::string allowed;
  for (const auto& e : table) allowed += (allowed.empty() ? "" : "|") + std::string(e.name);
  throw Error(fmt::format("config: {} must be one of {}, got '{}'", key, allowed, s));
}

template <typename E, std::size_t N>
std::string enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return std::string(e.name);
  throw Error("unknown enum value");
}

/// Reads the listed keys from an object and rejects everything else.
class ObjectReader {
 public:
  ObjectReader(const nlohmann::json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j.is_object()) throw Error(fmt::format("config: {} must be an object", where_));
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(fmt::format("config: {}.{} has the wrong type", where_, key));
    }
  }

  template <typename E, std::size_t N>
  void get_enum(const char* key, const EnumName<E> (&table)[N], E& out) {
    std::string s;
    get(key, s);
    if (j_.contains(key)) out = enum_from(table, s, fmt::format("{}.{}", where_, key));
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw Error(fmt::format("config: unknown key {}.{}", where_, k));
  }

 private:
  const nlohmann::json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace detail

inline TrainConfig parse_train_config(const nlohmann::json& j) {
  TrainConfig c;
  detail::ObjectReader r(j, "train");
  r.get("gamma", c.gamma);
  r.get("tau", c.tau);
  r.get("minibatch", c.minibatch);
  r.get("buffer_capacity", c.buffer_capacity);
  r.get("episodes", c.episodes);
  r.get("steps", c.steps);
  r.get("lr_actor", c.lr_actor);
  r.get("lr_critic", c.lr_critic);
  r.get("counterfactual_samples", c.counterfactual_samples);
  r.get_enum("mode", detail::kTrainModes, c.mode);
  r.get_enum("actor_gradient", detail::kActorGradients, c.actor_gradient);
  r.get_enum("advantage_weight", detail::kAdvantageWeights, c.advantage_weight);
  r.get_enum("reward_mode", detail::kRewardModes, c.reward_mode);
  r.get_enum("observation", detail::kScopes, c.scope);
  r.get_enum("critic_input", detail::kCriticInputs, c.critic_input);
  r.get_enum("optimizer", detail::kOptimizers, c.optimizer);
  r.get("hidden_width", c.hidden_width);
  r.get("actor_depth", c.actor_depth);
  r.get("critic_depth", c.critic_depth);
  r.get("epsilon_decay", c.epsilon_decay);
  r.get("seed", c.seed);
  if (const auto* ou = r.child("ou")) {
    detail::ObjectReader o(*ou, "train.ou");
    o.get("theta", c.ou.theta);
    o.get("sigma", c.ou.sigma);
    o.get("mu", c.ou.mu);
    o.finish();
  }
  r.finish();
  c.validate();
  return c;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"gamma", c.gamma},
          {"tau", c.tau},
          {"minibatch", c.minibatch},
          {"buffer_capacity", c.buffer_capacity},
          {"episodes", c.episodes},
          {"steps", c.steps},
          {"lr_actor", c.lr_actor},
          {"lr_critic", c.lr_critic},
          {"counterfactual_samples", c.counterfactual_samples},
          {"mode", detail::enum_name(detail::kTrainModes, c.mode)},
          {"actor_gradient", detail::enum_name(detail::kActorGradients, c.actor_gradient)},
          {"advantage_weight", detail::enum_name(detail::kAdvantageWeights, c.advantage_weight)},
          {"reward_mode", detail::enum_name(detail::kRewardModes, c.reward_mode)},
          {"observation", detail::enum_name(detail::kScopes, c.scope)},
          {"critic_input", detail::enum_name(detail::kCriticInputs, c.critic_input)},
          {"optimizer", detail::enum_name(detail::kOptimizers, c.optimizer)},
          {"hidden_width", c.hidden_width},
          {"actor_depth", c.actor_depth},
          {"critic_depth", c.critic_depth},
          {"epsilon_decay", c.epsilon_decay},
          {"seed", c.seed},
          {"ou", {{"theta", c.ou.theta}, {"sigma", c.ou.sigma}, {"mu", c.ou.mu}}}};
}

inline TrainMode train_mode_from(const std::string& s) {
  return detail::enum_from(detail::kTrainModes, s, "mode");
}

inline std::string train_mode_name(TrainMode m) { return detail::enum_name(detail::kTrainModes, m); }

/// Relative paths resolve against base_dir (the config file's directory).
inline ExperimentConfig parse_experiment_config(const nlohmann::json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  detail::ObjectReader r(j, "config");
  const auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : (base_dir / path).lexically_normal();
  };

  std::string topo;
  r.get("topology", topo);
  if (topo.empty()) throw Error("config: topology path is required");
  c.topology = resolve(topo);

  const auto* traffic = r.child("traffic");
  if (traffic == nullptr) throw Error("config: traffic section is required");
  detail::ObjectReader t(*traffic, "traffic");
  std::string file;
  t.get("file", file);
  const auto* gravity = t.child("gravity");
  t.finish();
  if (file.empty() == (gravity == nullptr))
    throw Error("config: traffic needs exactly one of file or gravity");
  if (!file.empty()) c.tm_file = resolve(file);
  if (gravity != nullptr) {
    detail::ObjectReader g(*gravity, "traffic.gravity");
    g.get("count", c.gravity.count);
    g.get("seed", c.gravity.seed);
    g.get("total_volume", c.gravity.total_volume);
    g.get("noise_cv", c.gravity.noise_cv);
    g.get("weight_sigma", c.gravity.weight_sigma);
    g.finish();
  }

  r.get("train_fraction", c.train_fraction);
  if (const auto* train = r.child("train")) c.train = parse_train_config(*train);

  if (const auto* eval = r.child("eval")) {
    detail::ObjectReader e(*eval, "eval");
    e.get("t_values", c.eval.t_values);
    e.get("t", c.eval.t);
    e.get("failures", c.eval.failures);
    e.get("methods", c.eval.methods);
    e.get("grid", c.eval.grid);
    e.finish();
  }
  std::string out;
  r.get("out", out);
  if (!out.empty()) c.out = resolve(out);
  r.finish();

  if (c.eval.t_values.empty()) throw Error("config: eval.t_values must not be empty");
  for (int v : c.eval.t_values)
    if (v < 1) throw Error("config: eval.t_values entries must be >= 1");
  if (c.eval.t < 1) throw Error("config: eval.t must be >= 1");
  if (c.eval.methods.empty()) throw Error("config: at least one evaluation method is required");
  for (const auto& m : c.eval.methods)
    if (std::find(std::begin(kMethods), std::end(kMethods), m) == std::end(kMethods))
      throw Error(fmt::format("config: unknown method '{}'", m));
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0))
    throw Error("config: train_fraction must lie in (0, 1)");
  if (!fs::exists(c.topology))
    throw Error(fmt::format("config: topology file {} does not exist", c.topology.string()));
  if (c.tm_file && !fs::exists(*c.tm_file))
    throw Error(fmt::format("config: traffic file {} does not exist", c.tm_file->string()));
  return c;
}

inline ExperimentConfig load_experiment_config(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
  return parse_experiment_config(j, path.parent_path());
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json traffic;
  if (c.tm_file) {
    traffic["file"] = c.tm_file->generic_string();
  } else {
    traffic["gravity"] = {{"count", c.gravity.count},
                          {"seed", c.gravity.seed},
                          {"total_volume", c.gravity.total_volume},
                          {"noise_cv", c.gravity.noise_cv},
                          {"weight_sigma", c.gravity.weight_sigma}};
  }
  return {{"topology", c.topology.generic_string()},
          {"traffic", traffic},
          {"train_fraction", c.train_fraction},
          {"train", to_json(c.train)},
          {"eval",
           {{"t_values", c.eval.t_values},
            {"t", c.eval.t},
            {"failures", c.eval.failures},
            {"methods", c.eval.methods},
            {"grid", c.eval.grid}}},
          {"out", c.out.generic_string()}};
}

// ---------------------------------------------------------------------------
// Inputs

struct ExperimentData {
  Topology topo;
  TmSeries all, train, test;
};

inline Topology load_topology_file(const fs::path& path) {
  return load_topology(read_file(path), path.filename().string());
}

inline TmSeries load_tm_file(const fs::path& path) {
  return load_tm_series(read_file(path), path.filename().string());
}

inline ExperimentData load_experiment_data(const ExperimentConfig& c) {
  ExperimentData d{load_topology_file(c.topology), {}, {}, {}};
  d.all = c.tm_file ? load_tm_file(*c.tm_file) : gen_gravity_tms(d.topo, c.gravity);
  if (d.all.node_count() != d.topo.node_count())
    throw Error(fmt::format("traffic has {} nodes, topology has {}", d.all.node_count(),
                            d.topo.node_count()));
  std::tie(d.train, d.test) = split_train_test(d.all, c.train_fraction);
  return d;
}

// ---------------------------------------------------------------------------
// Reports

struct Aggregate {
  double mean = 0.0, median = 0.0, p5 = 0.0, p25 = 0.0, p75 = 0.0, p95 = 0.0;
};

/// Linear interpolation between closest ranks, position q * (n - 1).
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) throw Error("percentile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline Aggregate aggregate(const std::vector<double>& v) {
  if (v.empty()) throw Error("aggregate of an empty sample");
  Aggregate a;
  double s = 0.0;
  for (double x : v) s += x;
  a.mean = s / static_cast<double>(v.size());
  a.median = percentile(v, 0.5);
  a.p5 = percentile(v, 0.05);
  a.p25 = percentile(v, 0.25);
  a.p75 = percentile(v, 0.75);
  a.p95 = percentile(v, 0.95);
  return a;
}

/// 1 - mean(method) / mean(ospf); 0 when the OSPF mean is 0.
inline double improvement_ratio_vs_ospf(double method_mean, double ospf_mean) {
  return ospf_mean == 0.0 ? 0.0 : 1.0 - method_mean / ospf_mean;
}

struct TimingRow {
  int tm_index = 0;
  std::string method;
  int t = 0;
  double actor_ms = 0.0;
};

/// Per-TM MLU columns. columns[0] is always "ospf".
struct EvalReport {
  std::vector<int> tm_index;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // values[column][row]
  std::vector<TimingRow> timing;

  const std::vector<double>& column(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return values[i];
    throw Error(fmt::format("report has no column '{}'", name));
  }
};

inline std::string fmt_num(double x) { return detail::format_g17(x); }

inline std::string report_csv(const EvalReport& r) {
  std::string out = "tm_index";
  for (const auto& c : r.columns) out += "," + c;
  out += '\n';
  for (std::size_t row = 0; row < r.tm_index.size(); ++row) {
    out += std::to_string(r.tm_index[row]);
    for (const auto& col : r.values) out += "," + fmt_num(col[row]);
    out += '\n';
  }
  return out;
}

inline std::string summary_csv(const EvalReport& r) {
  std::string out = "column,mean,median,p5,p25,p75,p95,improvement\n";
  const double ospf_mean = aggregate(r.column("ospf")).mean;
  for (std::size_t i = 0; i < r.columns.size(); ++i) {
    const auto a = aggregate(r.values[i]);
    out += fmt::format("{},{},{},{},{},{},{},{}\n", r.columns[i], fmt_num(a.mean),
                       fmt_num(a.median), fmt_num(a.p5), fmt_num(a.p25), fmt_num(a.p75),
                       fmt_num(a.p95), fmt_num(improvement_ratio_vs_ospf(a.mean, ospf_mean)));
  }
  return out;
}

inline std::string timing_csv(const std::vector<TimingRow>& rows) {
  std::string out = "tm_index,method,t,actor_ms\n";
  for (const auto& t : rows)
    out += fmt::format("{},{},{},{:.6g}\n", t.tm_index, t.method, t.t, t.actor_ms);
  return out;
}

inline std::string train_log_csv(const std::vector<TrainLogRow>& log,
                                 const std::vector<std::string>& agent_names) {
  std::string out = "step,tm_index,episode,t,reward,mlu,critic_loss";
  for (const auto& n : agent_names) out += ",mean_advantage_" + n;
  out += '\n';
  for (const auto& r : log) {
    out += fmt::format("{},{},{},{},{},{},{}", r.step, r.tm_index, r.episode, r.t,
                       fmt_num(r.reward), fmt_num(r.mlu),
                       r.critic_loss ? fmt_num(*r.critic_loss) : std::string());
    for (std::size_t h = 0; h < agent_names.size(); ++h)
      out += "," + (h < r.mean_advantage.size() ? fmt_num(r.mean_advantage[h]) : std::string());
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint sets

inline std::vector<std::string> actor_names(const Topology& topo, AgentLayout layout) {
  std::vector<std::string> names;
  if (layout == AgentLayout::Single) return {"single"};
  for (NodeId h : topo.sdn_nodes()) names.push_back(std::to_string(h));
  return names;
}

inline void save_actor_set(const fs::path& dir, const Topology& topo, const ActorSet& actors) {
  const auto hash = topology_hash(topo);
  const auto names = actor_names(topo, actors.layout);
  for (std::size_t i = 0; i < names.size(); ++i)
    write_file(dir / ("actor_" + names[i] + ".ckpt"),
               nn::serialize({hash, "actor " + names[i], actors.actors.at(i)}));
}

inline ActorSet load_actor_set(const fs::path& dir, const Topology& topo, AgentLayout layout,
                               ObservationScope scope) {
  const auto hash = topology_hash(topo);
  ActorSet set;
  set.layout = layout;
  set.scope = scope;
  for (const auto& name : actor_names(topo, layout)) {
    const auto path = dir / ("actor_" + name + ".ckpt");
    nn::Checkpoint ck;
    try {
      ck = nn::deserialize(read_file(path), hash);
    } catch (const Error& e) {
      throw Error(fmt::format("{}: {}", path.string(), e.what()));
    }
    if (ck.role != "actor " + name)
      throw Error(fmt::format("{}: role '{}' is not 'actor {}'", path.string(), ck.role, name));
    set.actors.push_back(std::move(ck.params));
  }
  set.check_shapes(topo);
  return set;
}

// ---------------------------------------------------------------------------
// Commands

inline std::string manifest_json(const ExperimentConfig& c, const Topology& topo,
                                 std::string_view command, const nlohmann::json& extra = {}) {
  nlohmann::json m = {{"command", command},
                      {"config", to_json(c)},
                      {"seed", c.train.seed},
                      {"topology_hash", topology_hash(topo)}};
  if (extra.is_object())
    for (const auto& [k, v] : extra.items()) m[k] = v;
  return m.dump(2) + "\n";
}

struct TrainOutcome {
  fs::path dir;
  std::vector<fs::path> files;
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
};

/// Trains the configured mode on the training split and writes
/// <out>/<mode>/{actor_*.ckpt, critic.ckpt, train_log.csv, manifest.json}.
inline TrainOutcome cmd_train(const ExperimentConfig& c) {
  const auto data = load_experiment_data(c);
  const RoutingContext ctx(data.topo);
  Trainer trainer(ctx, c.train);
  trainer.train(data.train);

  TrainOutcome out;
  out.dir = c.out / train_mode_name(c.train.mode);
  out.env_steps = trainer.env_steps();
  out.updates = trainer.updates();
  const auto layout = c.train.layout();
  const auto names = actor_names(data.topo, layout);
  save_actor_set(out.dir, data.topo, trainer.actors());
  for (const auto& n : names) out.files.push_back(out.dir / ("actor_" + n + ".ckpt"));
  write_file(out.dir / "critic.ckpt",
             nn::serialize({topology_hash(data.topo), "critic", trainer.critic()}));
  out.files.push_back(out.dir / "critic.ckpt");
  write_file(out.dir / "train_log.csv", train_log_csv(trainer.log(), names));
  out.files.push_back(out.dir / "train_log.csv");
  write_file(out.dir / "manifest.json",
             manifest_json(c, data.topo, "train",
                           {{"train_tms", data.train.size()},
                            {"env_steps", out.env_steps},
                            {"updates", out.updates}}));
  out.files.push_back(out.dir / "manifest.json");
  return out;
}

inline AgentLayout layout_for_method(std::string_view method) {
  return method == "single" ? AgentLayout::Single : AgentLayout::PerSwitch;
}

/// Loads every learned method listed in the config from <ckpt_root>/<method>.
inline std::map<std::string, ActorSet> load_methods(const ExperimentConfig& c, const Topology& topo,
                                                    const fs::path& ckpt_root) {
  std::map<std::string, ActorSet> sets;
  for (const auto& m : c.eval.methods)
    if (m != "ospf")
      sets.emplace(m, load_actor_set(ckpt_root / m, topo, layout_for_method(m), c.train.scope));
  return sets;
}

/// OSPF plus one column per (learned method, T). tm_indices label the rows.
inline EvalReport evaluate(const ExperimentConfig& c, const RoutingContext& ctx,
                           const std::map<std::string, ActorSet>& sets,
                           const std::vector<TrafficMatrix>& tms,
                           const std::vector<int>& tm_indices) {
  EvalReport r;
  r.tm_index = tm_indices;
  r.columns.push_back("ospf");
  r.values.emplace_back();
  for (const auto& tm : tms)
    r.values[0].push_back(utilization(ospf_flows(ctx.topo, ctx.dists, tm), ctx.topo).mlu);
  for (const auto& m : c.eval.methods) {
    if (m == "ospf") continue;
    const auto& set = sets.at(m);
    for (int t : c.eval.t_values) {
      r.columns.push_back(fmt::format("{}_t{}", m, t));
      auto& col = r.values.emplace_back();
      for (std::size_t i = 0; i < tms.size(); ++i) {
        const auto res = infer(ctx, set, tms[i], t);
        col.push_back(res.mlu);
        r.timing.push_back({tm_indices[i], m, t, res.actor_seconds * 1e3});
      }
    }
  }
  return r;
}

/// Evaluates the test split (or every snapshot of tm_override) and writes
/// infer.csv, infer_summary.csv, timing.csv and infer_manifest.json.
inline EvalReport cmd_infer(const ExperimentConfig& c, const fs::path& ckpt_root,
                            const std::optional<fs::path>& tm_override = std::nullopt) {
  auto data = load_experiment_data(c);
  const RoutingContext ctx(data.topo);
  const auto sets = load_methods(c, data.topo, ckpt_root);
  std::vector<TrafficMatrix> tms;
  std::vector<int> idx;
  if (tm_override) {
    const auto series = load_tm_file(*tm_override);
    if (series.node_count() != data.topo.node_count())
      throw Error("traffic file does not match the topology's node count");
    tms = series.snapshots;
    for (int i = 0; i < series.size(); ++i) idx.push_back(i);
  } else {
    tms = data.test.snapshots;
    for (int i = 0; i < data.test.size(); ++i) idx.push_back(data.train.size() + i);
  }
  const auto report = evaluate(c, ctx, sets, tms, idx);
  write_file(c.out / "infer.csv", report_csv(report));
  write_file(c.out / "infer_summary.csv", summary_csv(report));
  write_file(c.out / "timing.csv", timing_csv(report.timing));
  write_file(c.out / "infer_manifest.json", manifest_json(c, data.topo, "infer"));
  return report;
}

struct FailureRow {
  int edge = 0;
  NodeId u = 0, v = 0;
  int tm_index = 0;
  std::string method;
  bool disconnected = false;
  double mlu = 0.0;
};

/// True when some positive demand of tm has no path in dists.
inline bool disconnects(const DistanceTable& dists, const TrafficMatrix& tm) {
  const int n = tm.node_count();
  for (NodeId s = 0; s < n; ++s)
    for (NodeId q = 0; q < n; ++q)
      if (s != q && tm(s, q) > 0.0 && !dists.reachable(q, s)) return true;
  return false;
}

inline std::vector<FailureRow> failure_sweep(const ExperimentConfig& c, const Topology& topo,
                                             const std::map<std::string, ActorSet>& sets,
                                             const std::vector<TrafficMatrix>& tms,
                                             const std::vector<int>& tm_indices) {
  std::vector<FailureRow> rows;
  for (int k = 0; k < topo.edge_count(); ++k) {
    const RoutingContext ctx(apply_failure(topo, k));
    const auto& e = topo.edges()[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < tms.size(); ++i) {
      const bool cut = disconnects(ctx.dists, tms[i]);
      for (const auto& m : c.eval.methods) {
        FailureRow row{k, e.u, e.v, tm_indices[i], m, cut, 0.0};
        if (!cut) {
          row.mlu = m == "ospf"
                        ? utilization(ospf_flows(ctx.topo, ctx.dists, tms[i]), ctx.topo).mlu
                        : infer(ctx, sets.at(m), tms[i], c.eval.t).mlu;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

inline std::string failures_csv(const std::vector<FailureRow>& rows) {
  std::string out = "edge,u,v,tm_index,method,status,mlu\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{},{},{}\n", r.edge, r.u, r.v, r.tm_index, r.method,
                       r.disconnected ? "disconnected" : "ok",
                       r.disconnected ? std::string() : fmt_num(r.mlu));
  return out;
}

/// Per method over connected cases: count, aggregates, improvement vs OSPF.
inline std::string failures_summary_csv(const std::vector<FailureRow>& rows,
                                        const std::vector<std::string>& methods) {
  std::map<std::string, std::vector<double>> by;
  for (const auto& r : rows)
    if (!r.disconnected) by[r.method].push_back(r.mlu);
  std::string out = "method,cases,mean,median,p5,p25,p75,p95,improvement\n";
  const double ospf_mean = by.count("ospf") ? aggregate(by["ospf"]).mean : 0.0;
  for (const auto& m : methods) {
    if (!by.count(m)) continue;
    const auto a = aggregate(by[m]);
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", m, by[m].size(), fmt_num(a.mean),
                       fmt_num(a.median), fmt_num(a.p5), fmt_num(a.p25), fmt_num(a.p75),
                       fmt_num(a.p95), fmt_num(improvement_ratio_vs_ospf(a.mean, ospf_mean)));
  }
  return out;
}

/// Single-edge failure sweep over the test split with unchanged agents.
/// Writes failures.csv, failures_summary.csv and failures_manifest.json.
inline std::vector<FailureRow> cmd_failures(const ExperimentConfig& c, const fs::path& ckpt_root) {
  const auto data = load_experiment_data(c);
  const auto sets = load_methods(c, data.topo, ckpt_root);
  std::vector<int> idx;
  for (int i = 0; i < data.test.size(); ++i) idx.push_back(data.train.size() + i);
  auto rows = failure_sweep(c, data.topo, sets, data.test.snapshots, idx);
  write_file(c.out / "failures.csv", failures_csv(rows));
  write_file(c.out / "failures_summary.csv", failures_summary_csv(rows, c.eval.methods));
  write_file(c.out / "failures_manifest.json", manifest_json(c, data.topo, "failures"));
  return rows;
}

struct OracleRow {
  int tm_index = 0;
  double mlu_star = 0.0;
  JointAction argmin;
  double ospf = 0.0;
};

/// "node:r1/r2/..;node:..." with 17-digit ratios.
inline std::string format_action(const JointAction& u) {
  std::string out;
  for (const auto& a : u) {
    if (!out.empty()) out += ';';
    out += std::to_string(a.node) + ':';
    for (std::size_t i = 0; i < a.ratios.size(); ++i)
      out += (i ? "/" : "") + fmt_num(a.ratios[i]);
  }
  return out;
}

inline std::string oracle_csv(const std::vector<OracleRow>& rows) {
  std::string out = "tm_index,mlu_star,argmin,ospf,gap\n";
  for (const auto& r : rows)
    out += fmt::format("{},{},{},{},{}\n", r.tm_index, fmt_num(r.mlu_star), format_action(r.argmin),
                       fmt_num(r.ospf), fmt_num(r.ospf - r.mlu_star));
  return out;
}

/// Grid-search optimum against OSPF for every test TM; writes oracle.csv.
inline std::vector<OracleRow> cmd_oracle(const ExperimentConfig& c) {
  const auto data = load_experiment_data(c);
  const RoutingContext ctx(data.topo);
  const oracle::GridSpec grid{c.eval.grid};
  std::vector<OracleRow> rows;
  for (int i = 0; i < data.test.size(); ++i) {
    const auto& tm = data.test.snapshots[static_cast<std::size_t>(i)];
    auto best = oracle::brute_force_min_mlu(ctx.topo, ctx.dists, ctx.admissible, tm, grid);
    rows.push_back({data.train.size() + i, best.mlu, std::move(best.action),
                    utilization(ospf_flows(ctx.topo, ctx.dists, tm), ctx.topo).mlu});
  }
  write_file(c.out / "oracle.csv", oracle_csv(rows));
  return rows;
}

/// Writes the configured gravity series to <out>/traffic.tms.
inline fs::path cmd_gen_tm(const ExperimentConfig& c) {
  const auto topo = load_topology_file(c.topology);
  const auto series = gen_gravity_tms(topo, c.gravity);
  const auto path = c.out / "traffic.tms";
  write_file(path, write_tm_series(series));
  return path;
}

}  // namespace cmrl
