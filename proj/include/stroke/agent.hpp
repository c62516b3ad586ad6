#pragma once

// Deterministic actor-critic for one-step (bandit) problems. The critic may
// output a reward vector; the actor maximizes the norm of the critic output.
// With twin critics, each sample uses whichever critic reports the smaller
// norm. There are no target networks: regression labels are raw rewards.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stroke/common.hpp"
#include "stroke/metrics.hpp"
#include "stroke/nn.hpp"

namespace stroke {

inline constexpr int kActionDim = 3;

struct AgentConfig {
  bool use_twin_critics = true;
  bool use_argmax_exploration = true;
  int q_dim = 3;
  double exploration_sigma = 0.1;
  int candidates = 32;
  std::size_t replay_capacity = 5000;
  int batch_size = 512;
  double learning_rate = 1e-4;
  long episodes = 10000;
  long episodes_per_epoch = 100;
  int policy_delay = 2;
  int updates_per_episode = 1;  // critic steps after each post-warmup episode
  long warmup_episodes = 512;
  long actor_start = 250;  // critic steps before the first actor step
  double reward_k = 0.5;
  std::vector<int> hidden = {256, 256};
  long eval_episodes = 1000;
  std::uint64_t eval_seed = 20230611;

  // Fine-tuning schedule for a physical robot; carried in configs, not used by train().
  int retrain_batch_size = 50;
  long retrain_episodes_per_epoch = 20;
  double retrain_learning_rate = 5e-5;

  void validate() const {
    if (q_dim != 1 && q_dim != 3) throw std::invalid_argument("AgentConfig: q_dim must be 1 or 3");
    if (candidates < 1) throw std::invalid_argument("AgentConfig: candidates must be >= 1");
    if (exploration_sigma < 0.0) throw std::invalid_argument("AgentConfig: exploration_sigma must be >= 0");
    if (replay_capacity < 1) throw std::invalid_argument("AgentConfig: replay_capacity must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("AgentConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("AgentConfig: learning_rate must be positive");
    if (episodes < 1 || episodes_per_epoch < 1) throw std::invalid_argument("AgentConfig: episode counts must be >= 1");
    if (updates_per_episode < 1) throw std::invalid_argument("AgentConfig: updates_per_episode must be >= 1");
    if (policy_delay < 1) throw std::invalid_argument("AgentConfig: policy_delay must be >= 1");
    if (warmup_episodes < 1) throw std::invalid_argument("AgentConfig: warmup_episodes must be >= 1");
    if (actor_start < 0) throw std::invalid_argument("AgentConfig: actor_start must be >= 0");
    if (!(reward_k > 0.0)) throw std::invalid_argument("AgentConfig: reward_k must be positive");
    if (eval_episodes < 1) throw std::invalid_argument("AgentConfig: eval_episodes must be >= 1");
    for (int h : hidden)
      if (h < 1) throw std::invalid_argument("AgentConfig: hidden widths must be >= 1");
  }

  nn::Architecture actor_arch(int obs_dim) const {
    nn::Architecture a{{obs_dim}, nn::Activation::relu, nn::Activation::tanh};
    a.widths.insert(a.widths.end(), hidden.begin(), hidden.end());
    a.widths.push_back(kActionDim);
    return a;
  }

  nn::Architecture critic_arch(int obs_dim) const {
    nn::Architecture a{{obs_dim + kActionDim}, nn::Activation::relu, nn::Activation::linear};
    a.widths.insert(a.widths.end(), hidden.begin(), hidden.end());
    a.widths.push_back(q_dim);
    return a;
  }
};

// ---------------------------------------------------------------------------
// Replay buffer

struct Batch {
  Mat observations;  // obs_dim x B
  Mat actions;       // 3 x B
  Mat rewards;       // q_dim x B
};

/// Fixed-capacity ring of (observation, action, reward). Oldest entries are
/// overwritten first.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim, int reward_dim)
      : obs_(obs_dim, static_cast<Eigen::Index>(capacity)),
        act_(kActionDim, static_cast<Eigen::Index>(capacity)),
        rew_(reward_dim, static_cast<Eigen::Index>(capacity)),
        ids_(capacity, 0),
        capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
  }

  void push(const Vec& obs, const Vec3& action, const Vec& reward, std::uint64_t id = 0) {
    const auto slot = static_cast<Eigen::Index>(head_);
    obs_.col(slot) = obs;
    act_.col(slot) = action;
    rew_.col(slot) = reward;
    ids_[head_] = id;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  /// Ids of the stored transitions, in slot order.
  std::vector<std::uint64_t> ids() const { return {ids_.begin(), ids_.begin() + static_cast<long>(size_)}; }

  /// Uniform draw with replacement.
  Batch sample(Rng& rng, int batch_size) const {
    if (size_ == 0) throw std::logic_error("ReplayBuffer: sample from empty buffer");
    std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
    Batch b{Mat(obs_.rows(), batch_size), Mat(kActionDim, batch_size), Mat(rew_.rows(), batch_size)};
    for (int j = 0; j < batch_size; ++j) {
      const auto i = static_cast<Eigen::Index>(pick(rng));
      b.observations.col(j) = obs_.col(i);
      b.actions.col(j) = act_.col(i);
      b.rewards.col(j) = rew_.col(i);
    }
    return b;
  }

 private:
  Mat obs_, act_, rew_;
  std::vector<std::uint64_t> ids_;
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------
// Critic selection

inline Mat critic_input(const Mat& observations, const Mat& actions) {
  Mat x(observations.rows() + actions.rows(), observations.cols());
  x << observations, actions;
  return x;
}

/// Per column: 0 if ||q1|| < ||q2||, else 1 (ties go to the second critic).
inline std::vector<int> min_norm_choice(const Mat& q1, const Mat& q2) {
  std::vector<int> pick(static_cast<std::size_t>(q1.cols()));
  for (Eigen::Index j = 0; j < q1.cols(); ++j) pick[static_cast<std::size_t>(j)] = q1.col(j).norm() < q2.col(j).norm() ? 0 : 1;
  return pick;
}

/// Q-vectors of the critic ensemble for a batch. One critic: its output. Two
/// critics: column-wise the output with the smaller norm.
inline Mat critic_value(const std::vector<nn::Mlp>& critics, const Mat& observations, const Mat& actions) {
  if (critics.empty()) throw std::invalid_argument("critic_value: no critics");
  const Mat x = critic_input(observations, actions);
  Mat q1 = nn::predict(critics[0], x);
  if (critics.size() == 1) return q1;
  const Mat q2 = nn::predict(critics[1], x);
  const auto pick = min_norm_choice(q1, q2);
  for (Eigen::Index j = 0; j < q1.cols(); ++j)
    if (pick[static_cast<std::size_t>(j)] == 1) q1.col(j) = q2.col(j);
  return q1;
}

inline Vec critic_value(const std::vector<nn::Mlp>& critics, const Vec& observation, const Vec3& action) {
  return critic_value(critics, Mat(observation), Mat(action)).col(0);
}

// ---------------------------------------------------------------------------
// Exploration

/// Scores a batch of candidate actions (3 x K) for one observation; higher is better.
using CandidateScorer = std::function<Vec(const Vec& observation, const Mat& actions)>;

inline Vec3 policy_action(const nn::Mlp& actor, const Vec& observation) {
  return nn::predict(actor, observation).col(0).cwiseMax(-1.0).cwiseMin(1.0);
}

/// K candidates around the policy output (the first one noise-free), keeps the
/// best-scoring one. Ties go to the lowest index.
inline Vec3 select_action_argmax(const nn::Mlp& actor, const CandidateScorer& score, const Vec& observation,
                                 int candidates, double sigma, Rng& rng) {
  if (candidates < 1) throw std::invalid_argument("select_action_argmax: need at least one candidate");
  const Vec3 mu = nn::predict(actor, observation).col(0);
  Mat cand(kActionDim, candidates);
  cand.col(0) = mu.cwiseMax(-1.0).cwiseMin(1.0);
  for (int i = 1; i < candidates; ++i) {
    Vec3 a = mu;
    for (int d = 0; d < kActionDim; ++d) a[d] += gaussian(rng, sigma);
    cand.col(i) = a.cwiseMax(-1.0).cwiseMin(1.0);
  }
  const Vec s = score(observation, cand);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < s.size(); ++i)
    if (s[i] > s[best]) best = i;
  return cand.col(best);
}

inline Vec3 select_action_argmax(const nn::Mlp& actor, const std::vector<nn::Mlp>& critics, const Vec& observation,
                                 int candidates, double sigma, Rng& rng) {
  auto score = [&critics](const Vec& obs, const Mat& actions) -> Vec {
    const Mat obs_rep = obs.replicate(1, actions.cols());
    return critic_value(critics, obs_rep, actions).colwise().norm().transpose();
  };
  return select_action_argmax(actor, score, observation, candidates, sigma, rng);
}

/// Plain Gaussian exploration around the policy output.
inline Vec3 select_action_default(const nn::Mlp& actor, const Vec& observation, double sigma, Rng& rng) {
  if (sigma < 0.0) throw std::invalid_argument("select_action_default: sigma must be >= 0");
  Vec3 a = nn::predict(actor, observation).col(0);
  for (int d = 0; d < kActionDim; ++d) a[d] += gaussian(rng, sigma);
  return a.cwiseMax(-1.0).cwiseMin(1.0);
}

// ---------------------------------------------------------------------------
// Updates

struct Learner {
  nn::Mlp actor;
  std::vector<nn::Mlp> critics;
  nn::AdamState actor_opt;
  std::vector<nn::AdamState> critic_opts;

  static Learner create(const AgentConfig& cfg, int obs_dim, Rng& rng) {
    cfg.validate();
    Learner l;
    l.actor = nn::init(cfg.actor_arch(obs_dim), rng);
    const int n_critics = cfg.use_twin_critics ? 2 : 1;
    for (int i = 0; i < n_critics; ++i) l.critics.push_back(nn::init(cfg.critic_arch(obs_dim), rng));
    l.actor_opt = nn::AdamState::for_params(l.actor);
    for (const auto& c : l.critics) l.critic_opts.push_back(nn::AdamState::for_params(c));
    return l;
  }
};

/// One Adam step per critic on mean ||Q(s, a) - r||^2. Returns the pre-step losses.
inline std::vector<double> update_critics(std::vector<nn::Mlp>& critics, std::vector<nn::AdamState>& opts,
                                          const Batch& batch, double lr) {
  if (batch.observations.cols() == 0) throw std::invalid_argument("update_critics: empty batch");
  if (opts.size() != critics.size()) throw std::invalid_argument("update_critics: optimizer count mismatch");
  const Mat x = critic_input(batch.observations, batch.actions);
  const auto n = static_cast<double>(x.cols());
  std::vector<double> losses;
  for (std::size_t i = 0; i < critics.size(); ++i) {
    const nn::Cache cache = nn::forward(critics[i], x);
    const Mat err = cache.output - batch.rewards;
    losses.push_back(err.squaredNorm() / n);
    const nn::Backward bw = nn::backward(critics[i], cache, (2.0 / n) * err);
    nn::adam_step(critics[i], bw.grads, opts[i], lr);
  }
  return losses;
}

struct ActorGradient {
  double loss = 0.0;
  nn::Gradients grads;
};

/// Loss -mean ||Q_sel(s, mu(s))|| and its gradient with respect to the actor
/// parameters. Samples with ||Q|| = 0 contribute no gradient.
inline ActorGradient actor_gradient(const nn::Mlp& actor, const std::vector<nn::Mlp>& critics,
                                    const Mat& observations) {
  if (observations.cols() == 0) throw std::invalid_argument("update_actor: empty batch");
  if (critics.empty()) throw std::invalid_argument("update_actor: no critics");
  const auto n = static_cast<double>(observations.cols());
  const nn::Cache actor_cache = nn::forward(actor, observations);
  const Mat x = critic_input(observations, actor_cache.output);

  std::vector<nn::Cache> caches;
  for (const auto& c : critics) caches.push_back(nn::forward(c, x));
  std::vector<int> pick(static_cast<std::size_t>(x.cols()), 0);
  if (critics.size() == 2) pick = min_norm_choice(caches[0].output, caches[1].output);

  const Eigen::Index q_dim = caches[0].output.rows();
  std::vector<Mat> dq(critics.size(), Mat::Zero(q_dim, x.cols()));
  double loss = 0.0;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto k = static_cast<std::size_t>(pick[static_cast<std::size_t>(j)]);
    const Vec q = caches[k].output.col(j);
    const double norm = q.norm();
    loss -= norm / n;
    if (norm > 0.0) dq[k].col(j) = -q / (norm * n);
  }

  Mat dx = Mat::Zero(x.rows(), x.cols());
  for (std::size_t k = 0; k < critics.size(); ++k) dx += nn::backward(critics[k], caches[k], dq[k]).dx;
  const Mat da = dx.bottomRows(kActionDim);
  return {loss, nn::backward(actor, actor_cache, da).grads};
}

/// One Adam step on the actor; critics are read-only. Returns the pre-step loss.
inline double update_actor(nn::Mlp& actor, nn::AdamState& opt, const std::vector<nn::Mlp>& critics,
                           const Mat& observations, double lr) {
  ActorGradient g = actor_gradient(actor, critics, observations);
  nn::adam_step(actor, g.grads, opt, lr);
  return g.loss;
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochRecord {
  long epoch = 0;
  long episodes = 0;
  Metrics metrics;
  std::vector<double> mean_q;  // per critic output component, on the evaluation suite
  double critic_loss = 0.0;    // mean over the epoch's critic steps (first critic)
  double actor_loss = 0.0;     // mean over the epoch's actor steps
};

struct TrainResult {
  Learner learner;
  std::vector<EpochRecord> log;
};

// Independent random streams per training run.
inline constexpr std::uint64_t kInitStream = 1;
inline constexpr std::uint64_t kEpisodeStream = 2;
inline constexpr std::uint64_t kExploreStream = 3;
inline constexpr std::uint64_t kReplayStream = 4;

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Runs the bandit actor-critic loop. Deterministic given (env, cfg, seed).
template <BanditEnvironment Env>
TrainResult train(const Env& env, const AgentConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  const int obs_dim = env.obs_dim();
  Rng init_rng(derive_seed(seed, kInitStream));
  Rng explore_rng(derive_seed(seed, kExploreStream));
  Rng replay_rng(derive_seed(seed, kReplayStream));
  const std::uint64_t episode_master = derive_seed(seed, kEpisodeStream);

  TrainResult result{Learner::create(cfg, obs_dim, init_rng), {}};
  Learner& L = result.learner;
  ReplayBuffer buffer(cfg.replay_capacity, obs_dim, cfg.q_dim);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  long critic_steps = 0;
  double critic_loss_sum = 0.0, actor_loss_sum = 0.0;
  long critic_count = 0, actor_count = 0;

  for (long n = 0; n < cfg.episodes; ++n) {
    const auto ep = env.sample(derive_seed(episode_master, static_cast<std::uint64_t>(n)), Phase::training);
    const Vec obs = ep.observation;

    Vec3 action;
    if (n < cfg.warmup_episodes) {
      for (int d = 0; d < kActionDim; ++d) action[d] = unit(explore_rng);
    } else if (cfg.use_argmax_exploration) {
      action = select_action_argmax(L.actor, L.critics, obs, cfg.candidates, cfg.exploration_sigma, explore_rng);
    } else {
      action = select_action_default(L.actor, obs, cfg.exploration_sigma, explore_rng);
    }

    const auto step = env.play(ep, action);
    Vec r(cfg.q_dim);
    if (cfg.q_dim == 3)
      r = step.reward.as_vector();
    else
      r[0] = env.scalar_reward(step, cfg.reward_k);
    buffer.push(obs, action, r, static_cast<std::uint64_t>(n));

    for (int u = 0; n + 1 >= cfg.warmup_episodes && u < cfg.updates_per_episode; ++u) {
      const Batch batch = buffer.sample(replay_rng, cfg.batch_size);
      const auto losses = update_critics(L.critics, L.critic_opts, batch, cfg.learning_rate);
      critic_loss_sum += losses.front();
      ++critic_count;
      ++critic_steps;
      if (critic_steps > cfg.actor_start && critic_steps % cfg.policy_delay == 0) {
        actor_loss_sum += update_actor(L.actor, L.actor_opt, L.critics, batch.observations, cfg.learning_rate);
        ++actor_count;
      }
    }

    if ((n + 1) % cfg.episodes_per_epoch == 0) {
      const auto run = run_evaluation(L.actor, env, cfg.eval_episodes, cfg.eval_seed);
      EpochRecord rec;
      rec.epoch = (n + 1) / cfg.episodes_per_epoch;
      rec.episodes = n + 1;
      rec.metrics = run.metrics;
      const Vec mean_q = critic_value(L.critics, run.observations, run.actions).rowwise().mean();
      rec.mean_q.assign(mean_q.data(), mean_q.data() + mean_q.size());
      rec.critic_loss = critic_count ? critic_loss_sum / static_cast<double>(critic_count) : 0.0;
      rec.actor_loss = actor_count ? actor_loss_sum / static_cast<double>(actor_count) : 0.0;
      critic_loss_sum = actor_loss_sum = 0.0;
      critic_count = actor_count = 0;
      if (on_epoch) on_epoch(rec);
      result.log.push_back(std::move(rec));
    }
  }
  return result;
}

}  // namespace stroke
