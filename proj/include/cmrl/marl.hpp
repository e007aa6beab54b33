#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fmt/format.h>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "cmrl/agents.hpp"
#include "cmrl/env.hpp"
#include "cmrl/error.hpp"
#include "cmrl/nn.hpp"
#include "cmrl/routing.hpp"
#include "cmrl/topology.hpp"
#include "cmrl/traffic.hpp"

namespace cmrl {

/// cmrl: per-switch actors with counterfactual advantages.
/// marl: per-switch actors sharing the TD advantage (no counterfactual).
/// single: one actor driving every switch from the full state.
enum class TrainMode { Cmrl, Marl, Single };

/// Advantage: advantage-weighted log-likelihood of the executed split.
/// DdpgChain: deterministic policy gradient through the critic's action input.
enum class ActorGradient { Advantage, DdpgChain };

/// Positive: only samples that beat the baseline pull the actor toward them.
/// Signed: the raw advantage, negative samples push the actor away.
enum class AdvantageWeight { Positive, Signed };

/// What the critic sees next to the joint action.
enum class CriticInput { State, Observations };

struct OuParams {
  double theta = 0.15;
  double sigma = 0.2;
  double mu = 0.0;
};

struct TrainConfig {
  double gamma = 0.9;
  double tau = 0.001;
  int minibatch = 32;
  int buffer_capacity = 8000;
  int episodes = 160;  // N, per traffic matrix
  int steps = 2;       // T
  double lr_actor = 1e-3;
  double lr_critic = 2e-3;
  int counterfactual_samples = 8;  // K
  TrainMode mode = TrainMode::Cmrl;
  ActorGradient actor_gradient = ActorGradient::Advantage;
  AdvantageWeight advantage_weight = AdvantageWeight::Positive;
  RewardMode reward_mode = RewardMode::Prose;
  ObservationScope scope = ObservationScope::Incident;
  CriticInput critic_input = CriticInput::State;
  nn::OptimizerKind optimizer = nn::OptimizerKind::Adam;
  int hidden_width = 128;
  int actor_depth = 2;
  int critic_depth = 3;
  OuParams ou;
  double epsilon_decay = 0.999;  // eta
  std::uint64_t seed = 1;

  AgentLayout layout() const {
    return mode == TrainMode::Single ? AgentLayout::Single : AgentLayout::PerSwitch;
  }

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("config: gamma must lie in [0, 1]");
    if (!(tau > 0.0 && tau <= 1.0)) throw Error("config: tau must lie in (0, 1]");
    if (minibatch < 1) throw Error("config: minibatch must be >= 1");
    if (buffer_capacity < minibatch) throw Error("config: buffer capacity below minibatch");
    if (episodes < 1 || steps < 1) throw Error("config: episodes and steps must be >= 1");
    if (counterfactual_samples < 1) throw Error("config: counterfactual samples must be >= 1");
    if (!(epsilon_decay >= 0.0 && epsilon_decay <= 1.0))
      throw Error("config: epsilon decay must lie in [0, 1]");
    if (hidden_width < 1) throw Error("config: hidden width must be >= 1");
  }
};

namespace detail {
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// ---------------------------------------------------------------------------
// Replay buffer

struct Transition {
  std::vector<nn::Vector> obs;      // per agent
  std::vector<nn::Vector> actions;  // per agent, as executed
  nn::Vector state;
  double reward = 0.0;
  nn::Vector next_state;
  std::vector<nn::Vector> next_obs;
  bool done = false;
};

/// Fixed-capacity circular store; the oldest transition is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error("replay buffer capacity must be >= 1");
    slots_.reserve(std::min<std::size_t>(capacity, 1 << 16));
  }

  void store(Transition t) {
    if (slots_.size() < capacity_) {
      slots_.push_back(std::move(t));
    } else {
      slots_[next_] = std::move(t);
    }
    next_ = (next_ + 1) % capacity_;
    ++inserted_;
  }

  std::size_t size() const { return slots_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }
  const Transition& slot(std::size_t i) const { return slots_.at(i); }

  /// Uniform draw of m slot indices (with replacement).
  template <typename Rng>
  std::vector<std::size_t> sample(std::size_t m, Rng& rng) const {
    if (slots_.size() < m) throw Error("replay buffer holds fewer transitions than the minibatch");
    std::uniform_int_distribution<std::size_t> pick(0, slots_.size() - 1);
    std::vector<std::size_t> idx(m);
    for (auto& i : idx) i = pick(rng);
    return idx;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::uint64_t inserted_ = 0;
  std::vector<Transition> slots_;
};

// ---------------------------------------------------------------------------
// Exploration

inline double ou_step(double x, double xi, const OuParams& p) {
  return x + p.theta * (p.mu - x) + p.sigma * xi;
}

/// Ornstein-Uhlenbeck noise for every agent, scaled by a shared epsilon that
/// decays by eta after each draw.
class OuNoise {
 public:
  OuNoise(std::vector<int> dims, OuParams params, double decay, std::uint64_t seed)
      : dims_(std::move(dims)), params_(params), decay_(decay), rng_(seed) {
    reset();
  }

  void reset() {
    x_.clear();
    for (int d : dims_) x_.push_back(nn::Vector::Constant(d, params_.mu));
    epsilon_ = 1.0;
  }

  nn::Vector next(std::size_t agent) {
    auto& x = x_.at(agent);
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = ou_step(x[i], normal_(rng_), params_);
    nn::Vector out = epsilon_ * x;
    epsilon_ *= decay_;
    return out;
  }

  double epsilon() const { return epsilon_; }
  void set_epsilon(double e) { epsilon_ = e; }
  const nn::Vector& state(std::size_t agent) const { return x_.at(agent); }
  void set_state(std::size_t agent, nn::Vector x) { x_.at(agent) = std::move(x); }

 private:
  std::vector<int> dims_;
  OuParams params_;
  double decay_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  std::vector<nn::Vector> x_;
  double epsilon_ = 1.0;
};

/// Clamp to >= 0 and renormalize each block; a block with no mass left
/// becomes uniform.
inline nn::Vector project_to_simplex_blocks(nn::Vector v, const std::vector<int>& blocks) {
  int start = 0;
  for (int w : blocks) {
    auto seg = v.segment(start, w);
    seg = seg.cwiseMax(0.0);
    const double s = seg.sum();
    if (s < 1e-12) {
      seg.setConstant(1.0 / w);
    } else {
      seg /= s;
    }
    start += w;
  }
  return v;
}

/// Actor output plus exploration noise, projected back onto the simplex.
inline nn::Vector act_explore(const nn::MlpParams& actor, const nn::Vector& obs,
                              const nn::Vector& noise) {
  const auto r = nn::forward(actor, obs.transpose(), nn::Phase::Eval);
  nn::Vector a = r.output.row(0).transpose() + noise;
  return project_to_simplex_blocks(std::move(a), actor.spec.blocks());
}

// ---------------------------------------------------------------------------
// Critic

using QFunction = std::function<nn::Vector(const nn::Matrix&)>;

inline QFunction as_q_function(const nn::MlpParams& critic) {
  return [&critic](const nn::Matrix& x) -> nn::Vector {
    return nn::forward(critic, x, nn::Phase::Eval).output.col(0);
  };
}

/// Minibatch in matrix form. Row j of every matrix is sample j.
struct Batch {
  nn::Matrix state, next_state;
  std::vector<nn::Matrix> obs, next_obs, actions;  // per agent
  nn::Vector reward, done;

  int size() const { return static_cast<int>(reward.size()); }
};

inline Batch make_batch(const ReplayBuffer& buffer, const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw Error("empty minibatch");
  const auto& first = buffer.slot(idx[0]);
  const auto m = static_cast<Eigen::Index>(idx.size());
  const std::size_t agents = first.obs.size();
  Batch b;
  b.state.resize(m, first.state.size());
  b.next_state.resize(m, first.next_state.size());
  b.reward.resize(m);
  b.done.resize(m);
  for (std::size_t h = 0; h < agents; ++h) {
    b.obs.emplace_back(m, first.obs[h].size());
    b.next_obs.emplace_back(m, first.next_obs[h].size());
    b.actions.emplace_back(m, first.actions[h].size());
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& t = buffer.slot(idx[static_cast<std::size_t>(j)]);
    b.state.row(j) = t.state.transpose();
    b.next_state.row(j) = t.next_state.transpose();
    b.reward[j] = t.reward;
    b.done[j] = t.done ? 1.0 : 0.0;
    for (std::size_t h = 0; h < agents; ++h) {
      b.obs[h].row(j) = t.obs[h].transpose();
      b.next_obs[h].row(j) = t.next_obs[h].transpose();
      b.actions[h].row(j) = t.actions[h].transpose();
    }
  }
  return b;
}

/// [context | a_1 | ... | a_H], context being the state or the concatenated
/// observations.
inline nn::Matrix critic_inputs(const nn::Matrix& state, const std::vector<nn::Matrix>& obs,
                                const std::vector<nn::Matrix>& actions, CriticInput mode) {
  Eigen::Index cols = 0;
  if (mode == CriticInput::State) {
    cols += state.cols();
  } else {
    for (const auto& o : obs) cols += o.cols();
  }
  for (const auto& a : actions) cols += a.cols();
  const Eigen::Index rows = actions.empty() ? state.rows() : actions.front().rows();
  nn::Matrix x(rows, cols);
  Eigen::Index c = 0;
  const auto put = [&](const nn::Matrix& m) {
    x.middleCols(c, m.cols()) = m;
    c += m.cols();
  };
  if (mode == CriticInput::State) {
    put(state);
  } else {
    for (const auto& o : obs) put(o);
  }
  for (const auto& a : actions) put(a);
  return x;
}

/// Column where agent h's action starts inside the critic input.
inline Eigen::Index action_offset(const Batch& b, std::size_t h, CriticInput mode) {
  Eigen::Index c = 0;
  if (mode == CriticInput::State) {
    c = b.state.cols();
  } else {
    for (const auto& o : b.obs) c += o.cols();
  }
  for (std::size_t i = 0; i < h; ++i) c += b.actions[i].cols();
  return c;
}

/// y_j = r_j + gamma (1 - done_j) Q'(s_{j+1}, {mu'_h(o^h_{j+1})}), all
/// target networks in eval phase.
inline nn::Vector critic_target(const Batch& b, const nn::MlpParams& target_critic,
                                const std::vector<nn::MlpParams>& target_actors, double gamma,
                                CriticInput mode) {
  std::vector<nn::Matrix> next_actions;
  for (std::size_t h = 0; h < target_actors.size(); ++h)
    next_actions.push_back(nn::forward(target_actors[h], b.next_obs[h], nn::Phase::Eval).output);
  const auto x = critic_inputs(b.next_state, b.next_obs, next_actions, mode);
  const nn::Vector q = nn::forward(target_critic, x, nn::Phase::Eval).output.col(0);
  return b.reward.array() + gamma * (1.0 - b.done.array()) * q.array();
}

/// One optimizer step on (1/M) sum (y - Q(x))^2. Returns the pre-step loss.
inline double critic_update(nn::MlpParams& critic, nn::Optimizer& opt, const nn::Matrix& x,
                            const nn::Vector& y) {
  const auto fwd = nn::train_forward(critic, x);
  const nn::Vector diff = fwd.output.col(0) - y;
  const double m = static_cast<double>(y.size());
  const double loss = diff.squaredNorm() / m;
  if (!std::isfinite(loss)) throw Error("critic loss is not finite");
  const nn::Matrix grad = (2.0 / m) * diff;
  const auto g = nn::backward(critic, fwd, grad);
  opt.step(critic, g.params);
  return loss;
}

// ---------------------------------------------------------------------------
// Counterfactual advantage

/// Uniform point on each block's simplex (Dirichlet with unit concentration).
template <typename Rng>
nn::Vector sample_simplex(const std::vector<int>& blocks, Rng& rng) {
  int total = 0;
  for (int w : blocks) total += w;
  nn::Vector v(total);
  std::exponential_distribution<double> expo(1.0);
  int start = 0;
  for (int w : blocks) {
    auto seg = v.segment(start, w);
    for (int i = 0; i < w; ++i) seg[i] = expo(rng);
    seg /= seg.sum();
    start += w;
  }
  return v;
}

/// A = Q(x) - mean_k Q(x with the action slot [offset, offset + width)
/// replaced by alternatives[k]).
inline double counterfactual_advantage(const QFunction& q, const nn::RowVector& x,
                                       Eigen::Index offset,
                                       const std::vector<nn::Vector>& alternatives) {
  if (alternatives.empty()) throw Error("counterfactual: no alternative actions");
  const auto k = static_cast<Eigen::Index>(alternatives.size());
  nn::Matrix rows(k + 1, x.size());
  rows.row(0) = x;
  for (Eigen::Index i = 0; i < k; ++i) {
    rows.row(i + 1) = x;
    rows.row(i + 1).segment(offset, alternatives[static_cast<std::size_t>(i)].size()) =
        alternatives[static_cast<std::size_t>(i)].transpose();
  }
  const nn::Vector values = q(rows);
  return values[0] - values.tail(k).mean();
}

/// Batched Monte-Carlo version: for every row of x, K uniform simplex draws
/// replace agent h's action while every other agent's action stays fixed.
template <typename Rng>
nn::Vector counterfactual_advantages(const QFunction& q, const nn::Matrix& x, Eigen::Index offset,
                                     const std::vector<int>& blocks, int samples, Rng& rng) {
  if (samples < 1) throw Error("counterfactual: K must be >= 1");
  const Eigen::Index m = x.rows();
  const Eigen::Index k = samples;
  int width = 0;
  for (int w : blocks) width += w;
  nn::Matrix rows(m * (k + 1), x.cols());
  for (Eigen::Index j = 0; j < m; ++j) {
    rows.row(j) = x.row(j);
    for (Eigen::Index s = 0; s < k; ++s) {
      const Eigen::Index r = m + j * k + s;
      rows.row(r) = x.row(j);
      rows.row(r).segment(offset, width) = sample_simplex(blocks, rng).transpose();
    }
  }
  const nn::Vector values = q(rows);
  nn::Vector adv(m);
  for (Eigen::Index j = 0; j < m; ++j) adv[j] = values[j] - values.segment(m + j * k, k).mean();
  return adv;
}

// ---------------------------------------------------------------------------
// Actor update

struct ActorGradResult {
  nn::ForwardResult forward;
  nn::MlpParams grads;
  double loss = 0.0;
};

/// Gradient of -(1/M) sum_j w(A_j) sum_d a_jd log mu_d(o_j), i.e. the
/// advantage-weighted log-likelihood of the executed split vectors, with
/// w(A) = max(A, 0) or A.
inline ActorGradResult advantage_actor_gradient(
    const nn::MlpParams& actor, const nn::Matrix& obs, const nn::Matrix& taken,
    const nn::Vector& advantages, AdvantageWeight weight = AdvantageWeight::Positive) {
  ActorGradResult r;
  r.forward = nn::forward(actor, obs, nn::Phase::Train);
  const auto& mu = r.forward.output;
  const double m = static_cast<double>(obs.rows());
  nn::Matrix dz(mu.rows(), mu.cols());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < mu.rows(); ++j) {
    int start = 0;
    for (int w : actor.spec.blocks()) {
      const auto a = taken.row(j).segment(start, w);
      const auto p = mu.row(j).segment(start, w);
      const double wgt =
          weight == AdvantageWeight::Positive ? std::max(advantages[j], 0.0) : advantages[j];
      loss -= wgt * (a.array() * p.array().max(1e-300).log()).sum() / m;
      dz.row(j).segment(start, w) = (-wgt / m) * (a - a.sum() * p);
      start += w;
    }
  }
  r.loss = loss;
  r.grads = nn::backward_from_logits(actor, r.forward, dz).params;
  return r;
}

/// Deterministic policy gradient: maximize Q(x with agent h's slot = mu(o)).
inline ActorGradResult ddpg_actor_gradient(const nn::MlpParams& actor, const nn::Matrix& obs,
                                           const nn::MlpParams& critic,
                                           const nn::Matrix& critic_in, Eigen::Index offset) {
  ActorGradResult r;
  r.forward = nn::forward(actor, obs, nn::Phase::Train);
  nn::Matrix x = critic_in;
  x.middleCols(offset, r.forward.output.cols()) = r.forward.output;
  const auto cf = nn::forward(critic, x, nn::Phase::Eval);
  const double m = static_cast<double>(obs.rows());
  r.loss = -cf.output.col(0).mean();
  const nn::Matrix dq = nn::Matrix::Constant(x.rows(), 1, -1.0 / m);
  const auto cg = nn::backward(critic, cf, dq);
  const nn::Matrix dmu = cg.input.middleCols(offset, r.forward.output.cols());
  r.grads = nn::backward(actor, r.forward, dmu).params;
  return r;
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainLogRow {
  std::int64_t step = 0;
  int tm_index = 0;
  int episode = 0;
  int t = 0;
  double reward = 0.0;
  double mlu = 0.0;
  std::optional<double> critic_loss;
  std::vector<double> mean_advantage;  // per agent, empty when no update ran
};

/// Offline training over a TM series, one traffic matrix at a time.
class Trainer {
 public:
  Trainer(const RoutingContext& ctx, TrainConfig cfg)
      : ctx_(&ctx),
        cfg_(std::move(cfg)),
        buffer_(static_cast<std::size_t>(cfg_.buffer_capacity)),
        rng_(detail::mix_seed(cfg_.seed, 0)),
        cf_rng_(detail::mix_seed(cfg_.seed, 1)) {
    cfg_.validate();
    if (ctx.topo.sdn_nodes().empty()) throw Error("training needs at least one SDN node");
    actors_.layout = cfg_.layout();
    actors_.scope = cfg_.scope;
    const auto shapes = agent_shapes(ctx.topo, actors_.layout, actors_.scope);
    std::vector<int> dims;
    int critic_in = cfg_.critic_input == CriticInput::State ? ctx.topo.link_count() : 0;
    for (std::size_t i = 0; i < shapes.size(); ++i) {
      const auto& s = shapes[i];
      auto spec = nn::actor_spec(s.input, s.output, cfg_.hidden_width, cfg_.actor_depth,
                                 s.blocks.size() > 1 ? s.blocks : std::vector<int>{});
      actors_.actors.push_back(nn::init(spec, detail::mix_seed(cfg_.seed, 100 + i)));
      actor_opts_.emplace_back(actors_.actors.back(), cfg_.lr_actor, cfg_.optimizer);
      blocks_.push_back(s.blocks);
      dims.push_back(s.output);
      critic_in += s.output;
      if (cfg_.critic_input == CriticInput::Observations) critic_in += s.input;
    }
    target_actors_ = actors_.actors;
    critic_ = nn::init(nn::critic_spec(critic_in, cfg_.hidden_width, cfg_.critic_depth),
                       detail::mix_seed(cfg_.seed, 2));
    target_critic_ = critic_;
    critic_opt_ = nn::Optimizer(critic_, cfg_.lr_critic, cfg_.optimizer);
    noise_.emplace(dims, cfg_.ou, cfg_.epsilon_decay, detail::mix_seed(cfg_.seed, 3));
  }

  /// Every TM in order: reset exploration, then N episodes of T steps.
  void train(const TmSeries& tms) {
    if (tms.snapshots.empty()) throw Error("training needs a non-empty TM series");
    for (int i = 0; i < tms.size(); ++i) train_on(tms.snapshots[i], i);
  }

  void train_on(const TrafficMatrix& tm, int tm_index) {
    noise_->reset();
    Env env(*ctx_, cfg_.steps, cfg_.reward_mode, actors_.layout, actors_.scope);
    for (int episode = 1; episode <= cfg_.episodes; ++episode) {
      auto reset = env.reset(tm);
      auto obs = std::move(reset.observations);
      nn::Vector state = as_vector(reset.state.util);
      for (int t = 0; t < cfg_.steps; ++t) {
        std::vector<nn::Vector> actions;
        for (std::size_t h = 0; h < actors_.actors.size(); ++h)
          actions.push_back(act_explore(actors_.actors[h], obs[h], noise_->next(h)));
        auto r = env.step(to_joint_action(ctx_->topo, actions));
        nn::Vector next_state = as_vector(r.state.util);

        TrainLogRow row;
        row.step = ++env_steps_;
        row.tm_index = tm_index;
        row.episode = episode;
        row.t = t;
        row.reward = r.reward;
        row.mlu = r.state.mlu;

        buffer_.store({obs, std::move(actions), state, r.reward, next_state, r.observations,
                       r.done});
        update(row);
        log_.push_back(std::move(row));

        obs = std::move(r.observations);
        state = std::move(next_state);
      }
    }
  }

  /// One critic + per-agent actor update and the soft target updates.
  /// Skipped (returns false) until the buffer holds a minibatch.
  bool update(TrainLogRow& row) {
    const auto m = static_cast<std::size_t>(cfg_.minibatch);
    if (buffer_.size() < m) return false;
    const auto batch = make_batch(buffer_, buffer_.sample(m, rng_));
    const nn::Vector y =
        critic_target(batch, target_critic_, target_actors_, cfg_.gamma, cfg_.critic_input);
    const nn::Matrix x = critic_inputs(batch.state, batch.obs, batch.actions, cfg_.critic_input);
    row.critic_loss = critic_update(critic_, critic_opt_, x, y);

    const auto q = as_q_function(critic_);
    nn::Vector td;
    if (cfg_.mode == TrainMode::Marl) td = y - q(x);
    for (std::size_t h = 0; h < actors_.actors.size(); ++h) {
      const Eigen::Index offset = action_offset(batch, h, cfg_.critic_input);
      ActorGradResult g;
      double mean_adv = 0.0;
      if (cfg_.actor_gradient == ActorGradient::DdpgChain) {
        g = ddpg_actor_gradient(actors_.actors[h], batch.obs[h], critic_, x, offset);
      } else {
        const nn::Vector adv =
            cfg_.mode == TrainMode::Marl
                ? td
                : counterfactual_advantages(q, x, offset, blocks_[h],
                                            cfg_.counterfactual_samples, cf_rng_);
        mean_adv = adv.mean();
        g = advantage_actor_gradient(actors_.actors[h], batch.obs[h], batch.actions[h], adv,
                                     cfg_.advantage_weight);
      }
      nn::commit_batch_stats(actors_.actors[h], g.forward);
      actor_opts_[h].step(actors_.actors[h], g.grads);
      row.mean_advantage.push_back(mean_adv);
    }

    nn::soft_update(target_critic_, critic_, cfg_.tau);
    for (std::size_t h = 0; h < actors_.actors.size(); ++h)
      nn::soft_update(target_actors_[h], actors_.actors[h], cfg_.tau);
    ++updates_;
    return true;
  }

  const TrainConfig& config() const { return cfg_; }
  const ActorSet& actors() const { return actors_; }
  const std::vector<nn::MlpParams>& target_actors() const { return target_actors_; }
  const nn::MlpParams& critic() const { return critic_; }
  const nn::MlpParams& target_critic() const { return target_critic_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const std::vector<TrainLogRow>& log() const { return log_; }
  std::int64_t updates() const { return updates_; }
  std::int64_t env_steps() const { return env_steps_; }
  const OuNoise& noise() const { return *noise_; }

 private:
  static nn::Vector as_vector(const std::vector<double>& v) {
    return Eigen::Map<const nn::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  const RoutingContext* ctx_;
  TrainConfig cfg_;
  ActorSet actors_;
  std::vector<nn::MlpParams> target_actors_;
  std::vector<nn::Optimizer> actor_opts_;
  std::vector<std::vector<int>> blocks_;
  nn::MlpParams critic_, target_critic_;
  nn::Optimizer critic_opt_;
  std::optional<OuNoise> noise_;
  ReplayBuffer buffer_;
  std::mt19937_64 rng_;
  std::mt19937_64 cf_rng_;
  std::vector<TrainLogRow> log_;
  std::int64_t env_steps_ = 0;
  std::int64_t updates_ = 0;
};

}  // namespace cmrl
