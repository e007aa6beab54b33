// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "cmrl/experiment.hpp"
#include "cmrl/oracle.hpp"
#include "fixtures.hpp"

using namespace cmrl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d %-28s %s  %s (%.1f s)\n", id, name, o.pass ? "PASS" : "FAIL",
              o.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

// 1 ------------------------------------------------------------------------

Outcome routing_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst_link = 0.0, worst_cons = 0.0;
  for (int i = 0; i < 200; ++i) {
    const auto inst = fixtures::random_instance(rng, 6);
    const RoutingContext ctx(inst.topo);
    const auto p = policy_from_actions(inst.action, ctx.topo, ctx.admissible);
    const auto loads = flows_under_policy(ctx.topo, ctx.dists, ctx.admissible, inst.tm, p, true);
    const auto ref = oracle::path_enum_flows(ctx.topo, ctx.dists, ctx.admissible, inst.tm, &p);
    for (int e = 0; e < ctx.topo.link_count(); ++e)
      worst_link = std::max(worst_link, std::abs(loads.load[e] - ref.load[e]));
    worst_cons = std::max(worst_cons,
                          fixtures::conservation_residual(ctx.topo, ctx.dists, inst.tm, loads));
  }
  const double secs = seconds_since(t0);
  return {worst_link <= 1e-9 && worst_cons <= 1e-9 && secs < 30.0,
          fmt::format("max link diff {:.3g}, max conservation residual {:.3g}", worst_link,
                      worst_cons)};
}

// 2 ------------------------------------------------------------------------

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1e-6, std::abs(a), std::abs(b)});
}

void perturb(nn::MlpParams& p, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.5);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  for (auto& l : p.layers) {
    l.w = l.w.unaryExpr([&](double) { return n(rng); }) / std::sqrt(double(l.w.rows()) / 4.0);
    l.b = l.b.unaryExpr([&](double) { return n(rng); });
    if (l.has_bn()) {
      l.gamma = l.gamma.unaryExpr([&](double) { return pos(rng); });
      l.beta = l.beta.unaryExpr([&](double) { return n(rng); });
      l.running_mean = l.running_mean.unaryExpr([&](double) { return n(rng); });
      l.running_var = l.running_var.unaryExpr([&](double) { return pos(rng); });
    }
  }
}

// ReLU on/off pattern of every hidden unit for every sample.
std::vector<bool> relu_pattern(const nn::MlpParams& p, const nn::Matrix& x, nn::Phase phase) {
  const auto r = nn::forward(p, x, phase);
  std::vector<bool> on;
  for (std::size_t i = 0; i + 1 < r.layers.size(); ++i)
    for (Eigen::Index k = 0; k < r.layers[i].pre.size(); ++k)
      on.push_back(r.layers[i].pre.data()[k] > 0.0);
  return on;
}

struct GradCheck {
  double worst = 0.0;
  int skipped = 0;  // components whose every probe crossed a ReLU kink
};

// Central differences; the step shrinks until both probes keep the ReLU
// pattern of the base point.
GradCheck grad_check(const nn::MlpSpec& spec, std::uint64_t seed, nn::Phase phase, int batch) {
  std::mt19937_64 rng(seed);
  auto p = nn::init(spec, seed);
  perturb(p, rng);
  std::normal_distribution<double> n(0.0, 1.0);
  const nn::Matrix x = nn::Matrix::NullaryExpr(batch, spec.input, [&] { return n(rng); });
  const nn::Matrix g = nn::Matrix::NullaryExpr(batch, spec.output, [&] { return n(rng); });
  const auto loss = [&](const nn::MlpParams& q, const nn::Matrix& in) {
    return (nn::forward(q, in, phase).output.array() * g.array()).sum();
  };
  const auto grads = nn::backward(p, nn::forward(p, x, phase), g);
  const auto base = relu_pattern(p, x, phase);
  GradCheck out;
  const auto probe = [&](double& slot, double analytic, const auto& eval, const auto& pattern) {
    const double orig = slot;
    for (double h : {1e-5, 1e-6, 1e-7}) {
      slot = orig + h;
      const double up = eval();
      const bool same_up = pattern() == base;
      slot = orig - h;
      const double dn = eval();
      const bool same_dn = pattern() == base;
      slot = orig;
      if (same_up && same_dn) {
        out.worst = std::max(out.worst, rel_err((up - dn) / (2 * h), analytic));
        return;
      }
    }
    ++out.skipped;
  };
  auto q = p;
  nn::for_each_trainable(q, grads.params, [&](std::size_t, auto& t, const auto& gt) {
    for (Eigen::Index i = 0; i < t.size(); ++i)
      probe(t.data()[i], gt.data()[i], [&] { return loss(q, x); },
            [&] { return relu_pattern(q, x, phase); });
  });
  nn::Matrix xx = x;
  for (Eigen::Index i = 0; i < xx.size(); ++i)
    probe(xx.data()[i], grads.input.data()[i], [&] { return loss(p, xx); },
          [&] { return relu_pattern(p, xx, phase); });
  return out;
}

Outcome gradient_soundness() {
  const auto t0 = Clock::now();
  GradCheck actor, critic;
  for (int s = 0; s < 50; ++s) {
    const auto phase = s % 2 == 0 ? nn::Phase::Train : nn::Phase::Eval;
    const auto a = grad_check(nn::actor_spec(6, 3, 32), 1000 + s, phase, 5);
    const auto c = grad_check(nn::critic_spec(8, 32), 2000 + s, nn::Phase::Train, 4);
    actor.worst = std::max(actor.worst, a.worst);
    actor.skipped += a.skipped;
    critic.worst = std::max(critic.worst, c.worst);
    critic.skipped += c.skipped;
  }
  const double secs = seconds_since(t0);
  return {actor.worst < 1e-4 && critic.worst < 1e-4 && secs < 60.0,
          fmt::format("max rel err actor {:.3g}, critic {:.3g}; kink-straddling components "
                      "skipped {} + {}",
                      actor.worst, critic.worst, actor.skipped, critic.skipped)};
}

// 3 ------------------------------------------------------------------------

Outcome tiny_square() {
  const auto t0 = Clock::now();
  auto c = load_experiment_config(fixtures::data_path("square.json"));
  const auto data = load_experiment_data(c);
  const RoutingContext ctx(data.topo);
  const auto& tm = data.test.snapshots.at(0);
  const double star =
      oracle::brute_force_min_mlu(ctx.topo, ctx.dists, ctx.admissible, tm, {c.eval.grid}).mlu;
  const double ospf = utilization(ospf_flows(ctx.topo, ctx.dists, tm), ctx.topo).mlu;
  bool ok = std::abs(star - 0.56) < 1e-12 && std::abs(ospf - 0.8) < 1e-12 &&
            data.train.size() == 1 && c.train.episodes * c.train.steps <= 3000;
  std::string mlus;
  for (std::uint64_t seed : {1, 2, 3}) {
    c.train.seed = seed;
    Trainer tr(ctx, c.train);
    tr.train(data.train);
    const double m = infer(ctx, tr.actors(), tm, c.eval.t).mlu;
    ok = ok && m <= 0.60;
    mlus += fmt::format("{}{:.4f}", mlus.empty() ? "" : " ", m);
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 180.0,
          fmt::format("oracle {:.2f}, ospf {:.2f}, trained [{}]", star, ospf, mlus)};
}

// 4, 5, 9, 10 ----------------------------------------------------------------

struct AbileneRuns {
  ExperimentConfig config;
  ExperimentData data;
  std::vector<double> cmrl, marl;  // mean test MLU per seed
  double ospf = 0.0;
  ActorSet first_cmrl;
  double seconds = 0.0;
};

double mean_test_mlu(const RoutingContext& ctx, const ActorSet& actors, const TmSeries& test,
                     int t) {
  double s = 0.0;
  for (const auto& tm : test.snapshots) s += infer(ctx, actors, tm, t).mlu;
  return s / test.size();
}

const AbileneRuns& abilene() {
  static const AbileneRuns runs = [] {
    const auto t0 = Clock::now();
    AbileneRuns r;
    r.config = load_experiment_config(fixtures::data_path("abilene.json"));
    r.data = load_experiment_data(r.config);
    const RoutingContext ctx(r.data.topo);
    for (const auto& tm : r.data.test.snapshots)
      r.ospf += utilization(ospf_flows(ctx.topo, ctx.dists, tm), ctx.topo).mlu;
    r.ospf /= r.data.test.size();
    for (auto mode : {TrainMode::Cmrl, TrainMode::Marl}) {
      for (std::uint64_t seed : {1, 2, 3}) {
        auto cfg = r.config.train;
        cfg.mode = mode;
        cfg.seed = seed;
        Trainer tr(ctx, cfg);
        tr.train(r.data.train);
        const double m = mean_test_mlu(ctx, tr.actors(), r.data.test, r.config.eval.t);
        (mode == TrainMode::Cmrl ? r.cmrl : r.marl).push_back(m);
        if (mode == TrainMode::Cmrl && seed == 1) r.first_cmrl = tr.actors();
      }
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

Outcome abilene_reduction() {
  const auto& r = abilene();
  const bool shape = r.data.topo.node_count() == 12 && r.data.topo.link_count() == 30 &&
                     r.data.all.size() == 64 && r.data.train.size() == 51;
  int good = 0;
  std::string ratios;
  for (double m : r.cmrl) {
    good += m <= 0.9 * r.ospf;
    ratios += fmt::format("{}{:.3f}", ratios.empty() ? "" : " ", m / r.ospf);
  }
  return {shape && good >= 2 && r.seconds < 1800.0,
          fmt::format("ospf {:.4f}, cmrl/ospf [{}], {} of 3 seeds <= 0.9", r.ospf, ratios, good)};
}

Outcome ablation() {
  const auto& r = abilene();
  double c = 0.0, m = 0.0;
  for (double x : r.cmrl) c += x / 3.0;
  for (double x : r.marl) m += x / 3.0;
  return {c <= m + 0.02, fmt::format("cmrl {:.4f}, marl {:.4f}", c, m)};
}

Outcome latency() {
  const auto& r = abilene();
  const RoutingContext ctx(r.data.topo);
  double total = 0.0;
  int n = 0;
  for (int rep = 0; rep < 5; ++rep)
    for (const auto& tm : r.data.test.snapshots) {
      total += infer(ctx, r.first_cmrl, tm, 2).actor_seconds;
      ++n;
    }
  const double ms = 1e3 * total / n;
  return {ms < 5.0, fmt::format("mean actor time per TM {:.4f} ms", ms)};
}

Outcome failure_robustness() {
  const auto& r = abilene();
  auto c = r.config;
  c.eval.methods = {"ospf", "cmrl"};
  std::vector<int> idx;
  for (int i = 0; i < r.data.test.size(); ++i) idx.push_back(r.data.train.size() + i);
  const auto rows = failure_sweep(c, r.data.topo, {{"cmrl", r.first_cmrl}},
                                  r.data.test.snapshots, idx);
  double o = 0.0, m = 0.0;
  int cases = 0, cut = 0;
  for (const auto& row : rows) {
    if (row.disconnected) {
      ++cut;
      continue;
    }
    (row.method == "ospf" ? o : m) += row.mlu;
    cases += row.method == "ospf";
  }
  const bool complete = rows.size() == static_cast<std::size_t>(r.data.topo.edge_count()) *
                                           r.data.test.size() * 2;
  o /= cases;
  m /= cases;
  return {complete && cases > 0 && m <= o + 0.02,
          fmt::format("{} connected cases, {} disconnected rows, ospf {:.4f}, cmrl {:.4f}", cases,
                      cut, o, m)};
}

// 6 ------------------------------------------------------------------------

Outcome reward_law() {
  bool ok = true;
  double prev = -1e300;
  for (double a = 0.01; a < 100.0; a *= 1.05) {
    const double r = reward_from_ratio(a, RewardMode::Prose);
    ok = ok && r > prev && std::abs(reward_from_ratio(1.0 / a, RewardMode::Prose) + r) <= 1e-12;
    ok = ok && (a <= 1.0 || r > 0.0) && (a >= 1.0 || r < 0.0);
    prev = r;
  }
  ok = ok && reward_from_ratio(1.0, RewardMode::Prose) == 0.0;
  const double lit2 = reward_from_ratio(2.0, RewardMode::PaperLiteral);
  const double lit_half = reward_from_ratio(0.5, RewardMode::PaperLiteral);
  ok = ok && std::abs(lit2 + std::exp(-1.0)) <= 1e-12 &&
       std::abs(lit_half + std::exp(-1.0) * -1.0) <= 1e-12;
  return {ok, fmt::format("literal alpha=2 -> {:.15f}", lit2)};
}

// 7 ------------------------------------------------------------------------

Outcome baseline_invariance() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto actor = nn::init(nn::actor_spec(4, 3, 16), 10 + trial);
    const auto critic = nn::init(nn::critic_spec(9, 16), 20 + trial);
    const auto q = as_q_function(critic);
    const double shift = 100.0 * n(rng);
    const QFunction shifted = [&](const nn::Matrix& x) -> nn::Vector {
      return q(x).array() + shift;
    };
    const nn::Matrix x = nn::Matrix::NullaryExpr(8, 9, [&] { return n(rng); });
    const nn::Matrix obs = nn::Matrix::NullaryExpr(8, 4, [&] { return n(rng); });
    nn::Matrix taken = x.middleCols(6, 3).cwiseAbs();
    for (Eigen::Index i = 0; i < taken.rows(); ++i) taken.row(i) /= taken.row(i).sum();
    for (auto weight : {AdvantageWeight::Positive, AdvantageWeight::Signed}) {
      std::mt19937_64 r1(trial), r2(trial);
      const auto a = counterfactual_advantages(q, x, 6, {3}, 8, r1);
      const auto b = counterfactual_advantages(shifted, x, 6, {3}, 8, r2);
      const auto ga = advantage_actor_gradient(actor, obs, taken, a, weight);
      const auto gb = advantage_actor_gradient(actor, obs, taken, b, weight);
      nn::for_each_trainable(ga.grads, gb.grads, [&](std::size_t, const auto& s, const auto& t) {
        worst = std::max(worst, (s - t).cwiseAbs().maxCoeff());
      });
    }
  }
  return {worst <= 1e-9, fmt::format("max gradient change {:.3g}", worst)};
}

// 8 ------------------------------------------------------------------------

Outcome soft_update_and_buffer() {
  bool ok = true;
  auto target = nn::init(nn::actor_spec(5, 3, 8), 1);
  const auto online = nn::init(nn::actor_spec(5, 3, 8), 2);
  const double tau = 0.001;
  auto expect = target;
  for (std::size_t i = 0; i < expect.layers.size(); ++i) {
    auto& l = expect.layers[i];
    const auto& o = online.layers[i];
    l.w = tau * o.w + (1.0 - tau) * l.w;
    l.b = tau * o.b + (1.0 - tau) * l.b;
    if (l.has_bn()) {
      l.gamma = tau * o.gamma + (1.0 - tau) * l.gamma;
      l.beta = tau * o.beta + (1.0 - tau) * l.beta;
      l.running_mean = tau * o.running_mean + (1.0 - tau) * l.running_mean;
      l.running_var = tau * o.running_var + (1.0 - tau) * l.running_var;
    }
  }
  nn::soft_update(target, online, tau);
  for (std::size_t i = 0; i < expect.layers.size(); ++i) {
    const auto& a = target.layers[i];
    const auto& b = expect.layers[i];
    ok = ok && a.w == b.w && a.b == b.b && a.gamma == b.gamma && a.beta == b.beta &&
         a.running_mean == b.running_mean && a.running_var == b.running_var;
  }
  ReplayBuffer buf(4);
  for (int i = 0; i < 11; ++i) {
    Transition t;
    t.reward = i;
    buf.store(std::move(t));
  }
  std::vector<double> held;
  for (std::size_t i = 0; i < buf.size(); ++i) held.push_back(buf.slot(i).reward);
  std::sort(held.begin(), held.end());
  ok = ok && buf.size() == 4 && held == std::vector<double>{7, 8, 9, 10};
  return {ok, "exact convex combination, FIFO keeps the newest 4 of 11"};
}

// 11 -----------------------------------------------------------------------

Outcome determinism() {
  const auto out = fs::temp_directory_path() / "cmrl_acceptance_determinism";
  std::vector<std::string> snapshots[2];
  for (auto& snap : snapshots) {
    auto c = load_experiment_config(fixtures::data_path("abilene.json"));
    c.train.episodes = 2;
    c.eval.methods = {"ospf", "cmrl"};
    c.out = out;
    fs::remove_all(out);
    const auto trained = cmd_train(c);
    cmd_infer(c, out);
    for (const auto& f : trained.files) snap.push_back(read_file(f));
    snap.push_back(read_file(out / "infer.csv"));
    snap.push_back(read_file(out / "infer_summary.csv"));
  }
  fs::remove_all(out);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < snapshots[0].size(); ++i)
    differing += snapshots[0][i] != snapshots[1][i];
  return {differing == 0,
          fmt::format("{} files compared, {} differ", snapshots[0].size(), differing)};
}

}  // namespace

int main() {
  run(1, "routing correctness", routing_correctness);
  run(2, "gradient soundness", gradient_soundness);
  run(3, "tiny square end-to-end", tiny_square);
  run(4, "abilene-like reduction", abilene_reduction);
  run(5, "ablation ordering", ablation);
  run(6, "reward law", reward_law);
  run(7, "baseline invariance", baseline_invariance);
  run(8, "soft update and buffer", soft_update_and_buffer);
  run(9, "inference latency", latency);
  run(10, "failure robustness", failure_robustness);
  run(11, "determinism", determinism);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
