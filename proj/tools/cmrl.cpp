// cmrl: train, evaluate and inspect multi-agent traffic-engineering runs.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <fmt/format.h>
#include <optional>
#include <string>

#include "cmrl/experiment.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Override train.seed");
  sub->add_option("--out", c.out, "Output directory (overrides config)");
}

cmrl::ExperimentConfig load(const Common& c) {
  auto cfg = cmrl::load_experiment_config(c.config);
  if (c.seed) cfg.train.seed = *c.seed;
  if (!c.out.empty()) cfg.out = c.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent splitting-ratio training for hybrid SDN traffic engineering"};
  app.require_subcommand(1);

  Common train_c, infer_c, fail_c, oracle_c, gen_c;
  std::string mode;
  std::string infer_ckpt, fail_ckpt, infer_tm;
  std::vector<int> t_values;

  auto* train = app.add_subcommand("train", "Train agents on the training split");
  add_common(train, train_c);
  train->add_option("--mode", mode, "cmrl | marl | single (overrides train.mode)");

  auto* infer = app.add_subcommand("infer", "Evaluate OSPF and trained agents on test TMs");
  add_common(infer, infer_c);
  infer->add_option("--ckpt", infer_ckpt, "Checkpoint root holding <method>/ (default: out)");
  infer->add_option("--tm", infer_tm, "Evaluate every snapshot of this TMSERIES file")
      ->check(CLI::ExistingFile);
  infer->add_option("--t", t_values, "T values to sweep (overrides eval.t_values)");

  auto* failures = app.add_subcommand("failures", "Single-edge failure sweep");
  add_common(failures, fail_c);
  failures->add_option("--ckpt", fail_ckpt, "Checkpoint root holding <method>/ (default: out)");

  auto* oracle = app.add_subcommand("oracle", "Grid-search optimum per test TM");
  add_common(oracle, oracle_c);

  auto* gen = app.add_subcommand("gen-tm", "Write the configured gravity TM series");
  add_common(gen, gen_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) {
      auto cfg = load(train_c);
      if (!mode.empty()) cfg.train.mode = cmrl::train_mode_from(mode);
      const auto r = cmrl::cmd_train(cfg);
      fmt::print("trained {} env steps, {} updates -> {}\n", r.env_steps, r.updates,
                 r.dir.string());
    } else if (*infer) {
      auto cfg = load(infer_c);
      if (!t_values.empty()) cfg.eval.t_values = t_values;
      const auto root = infer_ckpt.empty() ? cfg.out : cmrl::fs::path(infer_ckpt);
      std::optional<cmrl::fs::path> tm;
      if (!infer_tm.empty()) tm = infer_tm;
      const auto report = cmrl::cmd_infer(cfg, root, tm);
      const double ospf = cmrl::aggregate(report.column("ospf")).mean;
      for (std::size_t i = 0; i < report.columns.size(); ++i) {
        const double m = cmrl::aggregate(report.values[i]).mean;
        fmt::print("{:<12} mean MLU {:.6f}  improvement {:+.4f}\n", report.columns[i], m,
                   cmrl::improvement_ratio_vs_ospf(m, ospf));
      }
    } else if (*failures) {
      const auto cfg = load(fail_c);
      const auto root = fail_ckpt.empty() ? cfg.out : cmrl::fs::path(fail_ckpt);
      const auto rows = cmrl::cmd_failures(cfg, root);
      fmt::print("{} failure rows -> {}\n", rows.size(), (cfg.out / "failures.csv").string());
    } else if (*oracle) {
      const auto cfg = load(oracle_c);
      const auto rows = cmrl::cmd_oracle(cfg);
      for (const auto& r : rows)
        fmt::print("tm {} mlu* {:.6f} ospf {:.6f}\n", r.tm_index, r.mlu_star, r.ospf);
    } else if (*gen) {
      const auto cfg = load(gen_c);
      fmt::print("{}\n", cmrl::cmd_gen_tm(cfg).string());
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& ch : msg)
      if (ch == '\n') ch = ' ';
    fmt::print(stderr, "error: {}\n", msg);
    return 1;
  }
  return 0;
}
