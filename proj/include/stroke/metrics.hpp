#pragma once

// Evaluation metrics. Failed episodes contribute zero reward, so the
// log-mean errors blow up to +inf when nothing succeeds.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "stroke/env.hpp"
#include "stroke/nn.hpp"

namespace stroke {

/// Environment interface the learner and the evaluator are written against.
template <class E>
concept BanditEnvironment = requires(const E& env, std::uint64_t seed, const typename E::Episode& ep, const Vec3& a,
                                     const typename E::Step& st, double k) {
  { env.obs_dim() } -> std::convertible_to<int>;
  { env.sample(seed, Phase::training) } -> std::same_as<typename E::Episode>;
  { ep.observation } -> std::convertible_to<Vec>;
  { env.play(ep, a) } -> std::same_as<typename E::Step>;
  { env.scalar_reward(st, k) } -> std::convertible_to<double>;
  { st.reward } -> std::convertible_to<RewardVec>;
  { st.success } -> std::convertible_to<bool>;
  { st.distance_reward } -> std::convertible_to<double>;
  { st.height_reward } -> std::convertible_to<double>;
};

struct Metrics {
  double eps_d = 0.0;  // m
  double eps_h = 0.0;  // m
  double success_rate = 0.0;
  double mean_rx = 0.0, mean_ry = 0.0, mean_rh = 0.0;
  long episodes = 0;
};

inline double log_mean_error(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("log_mean_error: need at least one episode");
  double sum = 0.0;
  for (double r : rewards) sum += r;
  if (sum <= 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(sum / static_cast<double>(rewards.size()));
}

inline double distance_error(std::span<const EpisodeOutcome> outcomes, std::span<const Vec2> targets) {
  if (outcomes.size() != targets.size()) throw std::invalid_argument("distance_error: outcome/target count mismatch");
  std::vector<double> r;
  r.reserve(outcomes.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) r.push_back(distance_reward(outcomes[i], targets[i]));
  return log_mean_error(r);
}

inline double distance_error(std::span<const EpisodeOutcome> outcomes, const Vec2& target) {
  std::vector<Vec2> t(outcomes.size(), target);
  return distance_error(outcomes, std::span<const Vec2>(t));
}

inline double height_error(std::span<const EpisodeOutcome> outcomes, double net_height = 0.173) {
  std::vector<double> r;
  r.reserve(outcomes.size());
  for (const auto& o : outcomes) r.push_back(height_reward(o, net_height));
  return log_mean_error(r);
}

/// Aggregates per-episode results in episode order.
template <class Step>
Metrics summarize(std::span<const Step> steps) {
  if (steps.empty()) throw std::invalid_argument("summarize: need at least one episode");
  std::vector<double> rd, rh;
  Metrics m;
  long successes = 0;
  for (const Step& s : steps) {
    rd.push_back(s.distance_reward);
    rh.push_back(s.height_reward);
    const RewardVec r = s.reward;
    m.mean_rx += r.rx;
    m.mean_ry += r.ry;
    m.mean_rh += r.rh;
    successes += s.success ? 1 : 0;
  }
  const auto n = static_cast<double>(steps.size());
  m.eps_d = log_mean_error(rd);
  m.eps_h = log_mean_error(rh);
  m.success_rate = static_cast<double>(successes) / n;
  m.mean_rx /= n;
  m.mean_ry /= n;
  m.mean_rh /= n;
  m.episodes = static_cast<long>(steps.size());
  return m;
}

template <BanditEnvironment Env>
struct EvaluationRun {
  std::vector<typename Env::Episode> episodes;
  Mat observations;  // obs_dim x n
  Mat actions;       // 3 x n, in [-1, 1]
  std::vector<typename Env::Step> steps;
  Metrics metrics;
};

/// Rolls out `n` evaluation episodes with the noise-free policy output.
/// Episode i is drawn from seed derive_seed(seed, i), so every caller with the
/// same seed sees the same suite.
template <BanditEnvironment Env>
EvaluationRun<Env> run_evaluation(const nn::Mlp& actor, const Env& env, long n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("evaluate: need at least one episode");
  EvaluationRun<Env> run;
  run.episodes.reserve(static_cast<std::size_t>(n));
  run.observations.resize(env.obs_dim(), n);
  for (long i = 0; i < n; ++i) {
    run.episodes.push_back(env.sample(derive_seed(seed, static_cast<std::uint64_t>(i)), Phase::evaluation));
    run.observations.col(i) = run.episodes.back().observation;
  }
  run.actions = nn::predict(actor, run.observations).cwiseMax(-1.0).cwiseMin(1.0);
  run.steps.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) run.steps.push_back(env.play(run.episodes[static_cast<std::size_t>(i)], run.actions.col(i)));
  run.metrics = summarize<typename Env::Step>(run.steps);
  return run;
}

template <BanditEnvironment Env>
Metrics evaluate(const nn::Mlp& actor, const Env& env, long n = 1000, std::uint64_t seed = 0) {
  return run_evaluation(actor, env, n, seed).metrics;
}

}  // namespace stroke
