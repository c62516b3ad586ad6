#pragma once

// Run configuration and its JSON form. Every field has a default; a config
// file only needs the keys it overrides. Angles are degrees in files.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "stroke/agent.hpp"
#include "stroke/env.hpp"

namespace stroke {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  EnvConfig env;
  AgentConfig agent;
  std::uint64_t train_seed = 1;
  double serve_time = 0.25;  // s of flight before the hit in trajectory exports
  std::string output_dir = "runs/default";
};

namespace config_detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline json interval_to_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

inline void read_interval(const json& j, const char* key, Interval& iv, const std::string& where) {
  if (!j.contains(key)) return;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number())
    throw ConfigError(where + "." + key + ": expected [lo, hi]");
  iv = {a[0].get<double>(), a[1].get<double>()};
}

inline json ranges_to_json(const StateRanges& r) {
  return {{"hit_plane_x", r.hit_plane_x}, {"py", interval_to_json(r.py)}, {"pz", interval_to_json(r.pz)},
          {"vx", interval_to_json(r.vx)}, {"vy", interval_to_json(r.vy)}, {"vz", interval_to_json(r.vz)},
          {"wx", interval_to_json(r.wx)}, {"wy", interval_to_json(r.wy)}, {"wz", interval_to_json(r.wz)}};
}

inline void read_ranges(const json& j, StateRanges& r, const std::string& where) {
  check_keys(j, {"hit_plane_x", "py", "pz", "vx", "vy", "vz", "wx", "wy", "wz"}, where);
  read(j, "hit_plane_x", r.hit_plane_x, where);
  read_interval(j, "py", r.py, where);
  read_interval(j, "pz", r.pz, where);
  read_interval(j, "vx", r.vx, where);
  read_interval(j, "vy", r.vy, where);
  read_interval(j, "vz", r.vz, where);
  read_interval(j, "wx", r.wx, where);
  read_interval(j, "wy", r.wy, where);
  read_interval(j, "wz", r.wz, where);
}

inline json surface_to_json(const SurfaceParams& s) { return {{"restitution", s.restitution}, {"friction", s.friction}}; }

inline void read_surface(const json& j, SurfaceParams& s, const std::string& where) {
  check_keys(j, {"restitution", "friction"}, where);
  read(j, "restitution", s.restitution, where);
  read(j, "friction", s.friction, where);
}

}  // namespace config_detail

inline json to_json(const RunConfig& c) {
  using namespace config_detail;
  const auto& e = c.env;
  const auto& a = c.agent;
  return {
      {"ball",
       {{"mass", e.sim.ball.mass},
        {"outer_radius", e.sim.ball.r1},
        {"cavity_radius", e.sim.ball.r2},
        {"gravity", e.sim.ball.gravity},
        {"drag_coefficient", e.sim.ball.drag_coefficient},
        {"lift_coefficient", e.sim.ball.lift_coefficient},
        {"air_density", e.sim.ball.air_density}}},
      {"table_surface", surface_to_json(e.sim.table_surface)},
      {"racket_surface", surface_to_json(e.sim.racket_surface)},
      {"racket_radius", e.racket_radius},
      {"integrator", {{"dt", e.sim.dt}, {"t_max", e.sim.t_max}}},
      {"table",
       {{"near_edge_x", e.table.near_edge_x},
        {"length", e.table.length},
        {"width", e.table.width},
        {"net_height", e.table.net_height}}},
      {"noise", {{"sigma_p", e.noise.sigma_p}, {"sigma_v", e.noise.sigma_v}, {"sigma_w", e.noise.sigma_w}}},
      {"ranges", {{"training", ranges_to_json(e.train_ranges)}, {"evaluation", ranges_to_json(e.eval_ranges)}}},
      {"target", json::array({e.target.x(), e.target.y()})},
      {"k_alpha_deg", rad_to_deg(e.k_alpha)},
      {"action_bounds", {{"max_speed", e.bounds.max_speed}, {"max_angle_deg", rad_to_deg(e.bounds.max_angle)}}},
      {"eval_observation_noise", e.eval_observation_noise},
      {"agent",
       {{"use_twin_critics", a.use_twin_critics},
        {"use_argmax_exploration", a.use_argmax_exploration},
        {"q_dim", a.q_dim},
        {"exploration_sigma", a.exploration_sigma},
        {"candidates", a.candidates},
        {"replay_capacity", a.replay_capacity},
        {"batch_size", a.batch_size},
        {"learning_rate", a.learning_rate},
        {"episodes", a.episodes},
        {"episodes_per_epoch", a.episodes_per_epoch},
        {"policy_delay", a.policy_delay},
        {"warmup_episodes", a.warmup_episodes},
        {"actor_start", a.actor_start},
        {"updates_per_episode", a.updates_per_episode},
        {"reward_k", a.reward_k},
        {"hidden", a.hidden},
        {"eval_episodes", a.eval_episodes},
        {"eval_seed", a.eval_seed},
        {"retrain_batch_size", a.retrain_batch_size},
        {"retrain_episodes_per_epoch", a.retrain_episodes_per_epoch},
        {"retrain_learning_rate", a.retrain_learning_rate}}},
      {"train_seed", c.train_seed},
      {"serve_time", c.serve_time},
      {"output_dir", c.output_dir},
  };
}

/// Overlays `j` on the defaults. Unknown keys and ill-typed values are errors.
inline RunConfig config_from_json(const json& j) {
  using namespace config_detail;
  RunConfig c;
  auto& e = c.env;
  auto& a = c.agent;
  check_keys(j,
             {"ball", "table_surface", "racket_surface", "racket_radius", "integrator", "table", "noise", "ranges",
              "target", "k_alpha_deg", "action_bounds", "eval_observation_noise", "agent", "train_seed", "serve_time",
              "output_dir"},
             "config");
  if (j.contains("ball")) {
    const json& b = j["ball"];
    check_keys(b,
               {"mass", "outer_radius", "cavity_radius", "gravity", "drag_coefficient", "lift_coefficient",
                "air_density"},
               "ball");
    read(b, "mass", e.sim.ball.mass, "ball");
    read(b, "outer_radius", e.sim.ball.r1, "ball");
    read(b, "cavity_radius", e.sim.ball.r2, "ball");
    read(b, "gravity", e.sim.ball.gravity, "ball");
    read(b, "drag_coefficient", e.sim.ball.drag_coefficient, "ball");
    read(b, "lift_coefficient", e.sim.ball.lift_coefficient, "ball");
    read(b, "air_density", e.sim.ball.air_density, "ball");
  }
  if (j.contains("table_surface")) read_surface(j["table_surface"], e.sim.table_surface, "table_surface");
  if (j.contains("racket_surface")) read_surface(j["racket_surface"], e.sim.racket_surface, "racket_surface");
  read(j, "racket_radius", e.racket_radius, "config");
  if (j.contains("integrator")) {
    check_keys(j["integrator"], {"dt", "t_max"}, "integrator");
    read(j["integrator"], "dt", e.sim.dt, "integrator");
    read(j["integrator"], "t_max", e.sim.t_max, "integrator");
  }
  if (j.contains("table")) {
    const json& t = j["table"];
    check_keys(t, {"near_edge_x", "length", "width", "net_height"}, "table");
    read(t, "near_edge_x", e.table.near_edge_x, "table");
    read(t, "length", e.table.length, "table");
    read(t, "width", e.table.width, "table");
    read(t, "net_height", e.table.net_height, "table");
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    check_keys(n, {"sigma_p", "sigma_v", "sigma_w"}, "noise");
    read(n, "sigma_p", e.noise.sigma_p, "noise");
    read(n, "sigma_v", e.noise.sigma_v, "noise");
    read(n, "sigma_w", e.noise.sigma_w, "noise");
  }
  if (j.contains("ranges")) {
    check_keys(j["ranges"], {"training", "evaluation"}, "ranges");
    if (j["ranges"].contains("training")) read_ranges(j["ranges"]["training"], e.train_ranges, "ranges.training");
    if (j["ranges"].contains("evaluation"))
      read_ranges(j["ranges"]["evaluation"], e.eval_ranges, "ranges.evaluation");
  }
  if (j.contains("target")) {
    const json& t = j["target"];
    if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number())
      throw ConfigError("config.target: expected [x, y]");
    e.target = {t[0].get<double>(), t[1].get<double>()};
  }
  if (j.contains("k_alpha_deg")) {
    double deg = 0.0;
    read(j, "k_alpha_deg", deg, "config");
    e.k_alpha = deg_to_rad(deg);
  }
  if (j.contains("action_bounds")) {
    const json& b = j["action_bounds"];
    check_keys(b, {"max_speed", "max_angle_deg"}, "action_bounds");
    read(b, "max_speed", e.bounds.max_speed, "action_bounds");
    if (b.contains("max_angle_deg")) {
      double deg = 0.0;
      read(b, "max_angle_deg", deg, "action_bounds");
      e.bounds.max_angle = deg_to_rad(deg);
    }
  }
  read(j, "eval_observation_noise", e.eval_observation_noise, "config");
  if (j.contains("agent")) {
    const json& g = j["agent"];
    check_keys(g,
               {"use_twin_critics", "use_argmax_exploration", "q_dim", "exploration_sigma", "candidates",
                "replay_capacity", "batch_size", "learning_rate", "episodes", "episodes_per_epoch", "policy_delay",
                "warmup_episodes", "actor_start", "updates_per_episode", "reward_k", "hidden", "eval_episodes", "eval_seed",
                "retrain_batch_size", "retrain_episodes_per_epoch", "retrain_learning_rate"},
               "agent");
    read(g, "use_twin_critics", a.use_twin_critics, "agent");
    read(g, "use_argmax_exploration", a.use_argmax_exploration, "agent");
    read(g, "q_dim", a.q_dim, "agent");
    read(g, "exploration_sigma", a.exploration_sigma, "agent");
    read(g, "candidates", a.candidates, "agent");
    read(g, "replay_capacity", a.replay_capacity, "agent");
    read(g, "batch_size", a.batch_size, "agent");
    read(g, "learning_rate", a.learning_rate, "agent");
    read(g, "episodes", a.episodes, "agent");
    read(g, "episodes_per_epoch", a.episodes_per_epoch, "agent");
    read(g, "policy_delay", a.policy_delay, "agent");
    read(g, "warmup_episodes", a.warmup_episodes, "agent");
    read(g, "actor_start", a.actor_start, "agent");
    read(g, "updates_per_episode", a.updates_per_episode, "agent");
    read(g, "reward_k", a.reward_k, "agent");
    read(g, "hidden", a.hidden, "agent");
    read(g, "eval_episodes", a.eval_episodes, "agent");
    read(g, "eval_seed", a.eval_seed, "agent");
    read(g, "retrain_batch_size", a.retrain_batch_size, "agent");
    read(g, "retrain_episodes_per_epoch", a.retrain_episodes_per_epoch, "agent");
    read(g, "retrain_learning_rate", a.retrain_learning_rate, "agent");
  }
  read(j, "train_seed", c.train_seed, "config");
  read(j, "serve_time", c.serve_time, "config");
  read(j, "output_dir", c.output_dir, "config");

  try {
    e.sim.ball.validate();
    e.sim.table_surface.validate();
    e.sim.racket_surface.validate();
    e.train_ranges.validate();
    e.eval_ranges.validate();
    a.validate();
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
  if (!(e.sim.dt > 0.0) || !(e.sim.t_max > 0.0)) throw ConfigError("integrator: dt and t_max must be positive");
  if (e.noise.sigma_p < 0.0 || e.noise.sigma_v < 0.0 || e.noise.sigma_w < 0.0)
    throw ConfigError("noise: standard deviations must be non-negative");
  if (!(e.racket_radius > 0.0)) throw ConfigError("racket_radius must be positive");
  if (c.serve_time < 0.0) throw ConfigError("serve_time must be non-negative");
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace stroke
