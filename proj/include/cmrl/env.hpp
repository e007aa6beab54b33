#pragma once

#include <chrono>
#include <cmath>
#include <fmt/format.h>
#include <vector>

#include "cmrl/agents.hpp"
#include "cmrl/error.hpp"
#include "cmrl/routing.hpp"
#include "cmrl/topology.hpp"
#include "cmrl/traffic.hpp"

namespace cmrl {

/// Prose: improvement earns a positive reward. PaperLiteral: the mirrored
/// branch signs (improvement is penalized), kept for comparison.
enum class RewardMode { Prose, PaperLiteral };

inline constexpr double kAlphaCap = 10.0;

/// alpha = mlu_0 / mlu_t with the zero cases pinned: 0/0 -> 1, x/0 -> 10.
inline double improvement_ratio(double mlu_t, double mlu_0) {
  if (mlu_t < 0.0 || mlu_0 < 0.0) throw Error("reward: MLU must be non-negative");
  if (mlu_t == 0.0) return mlu_0 == 0.0 ? 1.0 : kAlphaCap;
  return mlu_0 / mlu_t;
}

inline double reward_from_ratio(double alpha, RewardMode mode) {
  if (alpha == 1.0) return 0.0;
  if (mode == RewardMode::Prose)
    return alpha > 1.0 ? std::exp(2.0 * (1.0 - 1.0 / alpha)) : -std::exp(2.0 * (1.0 - alpha));
  return alpha > 1.0 ? -std::exp(2.0 * (1.0 / alpha - 1.0)) : std::exp(2.0 * (alpha - 1.0));
}

inline double reward(double mlu_t, double mlu_0, RewardMode mode = RewardMode::Prose) {
  return reward_from_ratio(improvement_ratio(mlu_t, mlu_0), mode);
}

struct ResetResult {
  std::vector<nn::Vector> observations;
  UtilizationState state;
  double baseline_mlu = 0.0;
};

struct StepResult {
  std::vector<nn::Vector> observations;
  UtilizationState state;
  RoutingPolicy policy;
  double reward = 0.0;
  bool done = false;
};

/// One traffic matrix, T steps. The next state depends only on the TM and
/// the joint action, so each step re-routes the TM from scratch.
class Env {
 public:
  Env(const RoutingContext& ctx, int steps, RewardMode mode = RewardMode::Prose,
      AgentLayout layout = AgentLayout::PerSwitch,
      ObservationScope scope = ObservationScope::Incident)
      : ctx_(&ctx), steps_(steps), mode_(mode), layout_(layout), scope_(scope) {
    if (steps < 1) throw Error("env: steps per episode must be >= 1");
  }

  ResetResult reset(const TrafficMatrix& tm) {
    tm_ = tm;
    t_ = 0;
    ResetResult r;
    r.state = utilization(ospf_flows(ctx_->topo, ctx_->dists, tm_), ctx_->topo);
    r.observations = agent_observations(ctx_->topo, r.state, layout_, scope_);
    r.baseline_mlu = baseline_ = r.state.mlu;
    started_ = true;
    return r;
  }

  StepResult step(const JointAction& u) {
    if (!started_) throw Error("env: step before reset");
    if (t_ >= steps_) throw Error("env: step after episode is done");
    StepResult r;
    r.policy = policy_from_actions(u, ctx_->topo, ctx_->admissible);
    r.state = utilization(
        flows_under_policy(ctx_->topo, ctx_->dists, ctx_->admissible, tm_, r.policy),
        ctx_->topo);
    r.observations = agent_observations(ctx_->topo, r.state, layout_, scope_);
    r.reward = reward(r.state.mlu, baseline_, mode_);
    ++t_;
    r.done = t_ == steps_;
    return r;
  }

  int t() const { return t_; }
  int steps() const { return steps_; }
  bool done() const { return t_ == steps_; }
  double baseline_mlu() const { return baseline_; }
  const RoutingContext& context() const { return *ctx_; }

 private:
  const RoutingContext* ctx_;
  int steps_;
  RewardMode mode_;
  AgentLayout layout_;
  ObservationScope scope_;
  TrafficMatrix tm_;
  double baseline_ = 0.0;
  int t_ = 0;
  bool started_ = false;
};

struct InferenceResult {
  RoutingPolicy policy;
  JointAction action;
  double mlu = 0.0;
  double ospf_mlu = 0.0;
  double actor_seconds = 0.0;  // wall-clock spent in actor forward passes
};

/// Online routing inference: start from OSPF, then T noiseless rounds of
/// observe -> act -> re-route. Returns the last policy.
inline InferenceResult infer(const RoutingContext& ctx, const ActorSet& actors,
                             const TrafficMatrix& tm, int steps) {
  actors.check_shapes(ctx.topo);
  Env env(ctx, steps, RewardMode::Prose, actors.layout, actors.scope);
  auto reset = env.reset(tm);
  InferenceResult out;
  out.ospf_mlu = reset.baseline_mlu;
  auto obs = std::move(reset.observations);
  for (int t = 0; t < steps; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const auto outputs = actors.outputs(obs);
    out.actor_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.action = to_joint_action(ctx.topo, outputs);
    auto r = env.step(out.action);
    out.policy = std::move(r.policy);
    out.mlu = r.state.mlu;
    obs = std::move(r.observations);
  }
  return out;
}

}  // namespace cmrl
