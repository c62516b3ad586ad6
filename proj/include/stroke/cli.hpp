#pragma once

// Command implementations behind the stroke command-line tool. Each returns a
// process exit status and writes human-readable output to `out`, diagnostics
// to `err`.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stroke/agent.hpp"
#include "stroke/config.hpp"
#include "stroke/contact.hpp"
#include "stroke/env.hpp"
#include "stroke/eval.hpp"
#include "stroke/io.hpp"
#include "stroke/metrics.hpp"

namespace stroke::cli {

namespace fs = std::filesystem;

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;

inline RunConfig config_or_default(const std::optional<fs::path>& path) {
  return path ? load_config(*path) : RunConfig{};
}

inline void print_metrics(std::ostream& out, const Metrics& m) {
  out << std::fixed << std::setprecision(2) << "episodes " << m.episodes << "\n"
      << "eps_d    " << 100.0 * m.eps_d << " cm\n"
      << "eps_h    " << 100.0 * m.eps_h << " cm\n"
      << "success  " << 100.0 * m.success_rate << " %\n";
  out.unsetf(std::ios::floatfield);
}

// --- train ------------------------------------------------------------------

struct TrainOptions {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
};

inline int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig rc = config_or_default(opt.config);
    const std::uint64_t seed = opt.seed.value_or(rc.train_seed);
    const fs::path dir = opt.out.value_or(fs::path(rc.output_dir));
    fs::create_directories(dir);

    const StrokeEnv env(rc.env);
    io::write_json(dir / "config.json", to_json(rc));
    io::JsonlWriter log(dir / "train_log.jsonl");
    const auto t0 = std::chrono::steady_clock::now();
    const TrainResult res = train(env, rc.agent, seed, [&](const EpochRecord& r) {
      log.write(io::to_json(r));
      out << std::fixed << std::setprecision(2) << "epoch " << std::setw(4) << r.epoch << "  episodes "
          << std::setw(6) << r.episodes << "  eps_d " << std::setw(7) << 100.0 * r.metrics.eps_d << " cm  eps_h "
          << std::setw(7) << 100.0 * r.metrics.eps_h << " cm  success " << std::setw(6)
          << 100.0 * r.metrics.success_rate << " %\n";
      out.unsetf(std::ios::floatfield);
      out.flush();
    });
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    io::save_weights(dir / "weights.json", res.learner);
    const Metrics m = evaluate(res.learner.actor, env, rc.agent.eval_episodes, rc.agent.eval_seed);
    io::write_json(dir / "metrics.json", io::to_json(m));
    io::write_json(dir / "run_info.json", {{"command", "train"},
                                           {"seed", seed},
                                           {"finished_utc", io::utc_timestamp()},
                                           {"train_seconds", seconds}});
    out << "final evaluation\n";
    print_metrics(out, m);
    out << "wrote " << (dir / "weights.json").string() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "train: " << e.what() << "\n";
    return kFailure;
  }
}

// --- eval -------------------------------------------------------------------

struct EvalOptions {
  fs::path weights;
  std::optional<fs::path> config;
  long episodes = 1000;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
};

inline int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    if (opt.episodes < 1) throw std::invalid_argument("--episodes must be >= 1");
    const RunConfig rc = config_or_default(opt.config);
    const StrokeEnv env(rc.env);
    const io::Weights w = io::load_weights(opt.weights, rc.agent.actor_arch(env.obs_dim()));
    const std::uint64_t seed = opt.seed.value_or(rc.agent.eval_seed);
    const Metrics m = evaluate(w.actor, env, opt.episodes, seed);
    const fs::path dest = opt.out.value_or(opt.weights.parent_path() / "eval_metrics.json");
    io::write_json(dest, io::to_json(m));
    print_metrics(out, m);
    out << "wrote " << dest.string() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "eval: " << e.what() << "\n";
    return kFailure;
  }
}

// --- rollout ----------------------------------------------------------------

struct Trajectory {
  std::vector<BallState> states;  // serve, then the return from the hit onwards
  std::size_t hit_index = 0;      // first row after the impact
  EpisodeOutcome outcome;
};

/// Serve segment ending at the hitting plane, followed by the struck return.
/// Rows are spaced by the simulation step; the pre-impact state at t = 0 is
/// replaced by the post-impact one. Throws std::domain_error if no physical
/// serve leads to the hit state.
inline Trajectory episode_trajectory(const StrokeEnv& env, const StrokeEnv::Episode& ep, const Vec3& action,
                                     double serve_time) {
  const SimParams& sim = env.config().sim;
  const long n_serve = std::lround(serve_time / sim.dt);
  Trajectory tr;
  BallState s = synthesize_serve(ep.truth, sim.ball, static_cast<double>(n_serve) * sim.dt, sim.dt);
  for (long k = 0; k < n_serve; ++k) {
    s.t = static_cast<double>(k - n_serve) * sim.dt;
    tr.states.push_back(s);
    s = step(s, sim.dt, sim.ball);
  }
  tr.hit_index = tr.states.size();
  std::vector<BallState> ret;
  tr.outcome = rollout(ep.truth, env.racket_for(ep, action), env.config().table, sim, &ret);
  if (ret.empty()) {
    // Missed: the incoming ball keeps flying until it reaches the floor level.
    BallState b = ep.truth.ball();
    for (long k = 0; k * sim.dt <= sim.t_max; ++k) {
      b.t = static_cast<double>(k) * sim.dt;
      ret.push_back(b);
      if (b.p.z() < 0.0) break;
      b = step(b, sim.dt, sim.ball);
    }
  }
  tr.states.insert(tr.states.end(), ret.begin(), ret.end());
  return tr;
}

struct RolloutOptions {
  std::optional<fs::path> config;
  std::uint64_t seed = 1;
  fs::path out;
  std::optional<fs::path> weights;
};

inline int cmd_rollout(const RolloutOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig rc = config_or_default(opt.config);
    const StrokeEnv env(rc.env);
    std::optional<nn::Mlp> actor;
    if (opt.weights) actor = io::load_weights(*opt.weights, rc.agent.actor_arch(env.obs_dim())).actor;

    constexpr int kAttempts = 1000;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      const auto ep = env.sample(derive_seed(opt.seed, static_cast<std::uint64_t>(attempt)), Phase::evaluation);
      const Vec3 action = actor ? policy_action(*actor, ep.observation) : Vec3::Zero();
      Trajectory tr;
      try {
        tr = episode_trajectory(env, ep, action, rc.serve_time);
      } catch (const std::domain_error&) {
        continue;
      }
      io::write_trajectory_csv(opt.out, tr.states);
      out << "rows " << tr.states.size() << "\n";
      if (tr.outcome.success)
        out << std::fixed << std::setprecision(3) << "landed at (" << tr.outcome.landing->x() << ", "
            << tr.outcome.landing->y() << ") m, net clearance " << *tr.outcome.net_clearance << " m\n";
      else
        out << "failed: " << to_string(*tr.outcome.failure) << "\n";
      out << "wrote " << opt.out.string() << "\n";
      return kOk;
    }
    throw std::runtime_error("no physically consistent serve found");
  } catch (const std::exception& e) {
    err << "rollout: " << e.what() << "\n";
    return kFailure;
  }
}

// --- calibrate --------------------------------------------------------------

struct CalibrateOptions {
  double h1 = 0.0;  // m
  double h2 = 0.0;  // m
  std::optional<double> theta_deg;
};

inline int cmd_calibrate(const CalibrateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const double kr = estimate_restitution(opt.h1, opt.h2);
    out << std::setprecision(6) << std::fixed << "restitution " << kr << "\n";
    if (opt.theta_deg) out << "friction    " << estimate_friction(deg_to_rad(*opt.theta_deg)) << "\n";
    out.unsetf(std::ios::floatfield);
    return kOk;
  } catch (const std::exception& e) {
    err << "calibrate: " << e.what() << "\n";
    return kFailure;
  }
}

// --- ablate -----------------------------------------------------------------

inline json to_json(const AblationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json per_seed = json::array();
    for (std::size_t i = 0; i < row.seeds.size(); ++i)
      per_seed.push_back({{"seed", row.seeds[i]}, {"metrics", io::to_json(row.per_seed[i])}});
    json entry = {{"variant", row.variant.name},
                  {"twin_critics", row.variant.twin_critics},
                  {"argmax_exploration", row.variant.argmax},
                  {"q_dim", row.variant.q_dim},
                  {"runs", per_seed}};
    if (row.seeds.size() > 1)
      entry["mean"] = {{"eps_d_m", io::finite_or_null(row.mean_eps_d())},
                       {"eps_h_m", io::finite_or_null(row.mean_eps_h())},
                       {"success_rate", row.mean_success()}};
    rows.push_back(entry);
  }
  return {{"rows", rows}};
}

struct AblateOptions {
  std::optional<fs::path> config;
  std::vector<std::uint64_t> seeds;
  std::optional<fs::path> out;
};

inline int cmd_ablate(const AblateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    if (opt.seeds.empty()) throw std::invalid_argument("--seeds needs at least one seed");
    const RunConfig rc = config_or_default(opt.config);
    const fs::path dir = opt.out.value_or(fs::path(rc.output_dir) / "ablation");
    fs::create_directories(dir);
    const StrokeEnv env(rc.env);
    const AblationReport report =
        run_ablation(env, rc.agent, opt.seeds, ablation_variants(), [&](const Variant& v, std::uint64_t s, const Metrics& m) {
          out << std::fixed << std::setprecision(2) << v.name << " seed " << s << ": eps_d " << 100.0 * m.eps_d
              << " cm, success " << 100.0 * m.success_rate << " %\n";
          out.unsetf(std::ios::floatfield);
          out.flush();
        });
    const std::string table = format_ablation(report);
    io::write_json(dir / "ablation.json", to_json(report));
    io::write_text(dir / "ablation.txt", table);
    out << table << "wrote " << (dir / "ablation.json").string() << "\n";
    return kOk;
  } catch (const std::exception& e) {
    err << "ablate: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace stroke::cli
