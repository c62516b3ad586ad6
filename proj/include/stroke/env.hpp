#pragma once

// Single-step stroke environment. An episode is one incoming ball at the
// virtual hitting plane: the agent sees a noisy normalized hitting state,
// picks a racket stroke, and the return flight decides the reward.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "stroke/common.hpp"
#include "stroke/contact.hpp"
#include "stroke/physics.hpp"

namespace stroke {

using Vec2 = Eigen::Vector2d;

struct TableGeometry {
  double near_edge_x = 0.80;
  double length = 2.74;
  double width = 1.525;
  double net_height = 0.173;

  double net_x() const { return near_edge_x + 0.5 * length; }
  double far_edge_x() const { return near_edge_x + length; }
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double span() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Sampling ranges of the hitting state. p_x is the fixed hitting plane.
struct StateRanges {
  double hit_plane_x = 0.675;
  Interval py, pz, vx, vy, vz, wx, wy, wz;

  static StateRanges training() {
    return {0.675,        {-0.60, 0.63},     {-0.01, 0.34},     {-6.00, -1.35},    {-1.95, 2.16},
            {-3.47, 3.15}, {-127.67, 110.88}, {-299.99, 299.81}, {-193.81, 189.65}};
  }
  static StateRanges evaluation() {
    return {0.675,        {-0.68, 0.68},    {-0.01, 0.34},     {-5.94, -2.52},    {-1.29, 2.02},
            {-3.40, 2.60}, {-95.08, 111.53}, {-299.62, 299.73}, {-189.05, 189.47}};
  }

  std::array<const Interval*, 8> intervals() const { return {&py, &pz, &vx, &vy, &vz, &wx, &wy, &wz}; }

  void validate() const {
    for (const Interval* iv : intervals())
      if (!(iv->lo <= iv->hi)) throw std::invalid_argument("StateRanges: inverted range");
  }
};

struct HitState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();
  Vec2 target = Vec2(2.55, 0.0);

  BallState ball() const { return {0.0, p, v, w}; }
};

struct NoiseConfig {
  double sigma_p = 0.005;  // m
  double sigma_v = 0.1;    // m/s
  double sigma_w = 5.0;    // rad/s
};

inline constexpr int kObsDim = 11;
using Observation = Eigen::Matrix<double, kObsDim, 1>;

struct StrokeAction {
  double speed = 0.0;  // v_x^r, m/s
  double beta = 0.0;   // rad
  double gamma = 0.0;  // rad
};

struct ActionBounds {
  double max_speed = 2.0;
  double max_angle = deg_to_rad(50.0);
};

enum class FailureReason { miss, into_net, own_side, off_table, backward, timeout };

inline std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::miss: return "miss";
    case FailureReason::into_net: return "into_net";
    case FailureReason::own_side: return "own_side";
    case FailureReason::off_table: return "off_table";
    case FailureReason::backward: return "backward";
    case FailureReason::timeout: return "timeout";
  }
  return "unknown";
}

struct EpisodeOutcome {
  bool success = false;
  std::optional<Vec2> landing;
  std::optional<double> net_clearance;
  std::optional<FailureReason> failure;

  static EpisodeOutcome failed(FailureReason r) { return {false, std::nullopt, std::nullopt, r}; }
  static EpisodeOutcome landed(const Vec2& at, double clearance) { return {true, at, clearance, std::nullopt}; }
};

struct RewardVec {
  double rx = 0.0, ry = 0.0, rh = 0.0;

  Vec3 as_vector() const { return {rx, ry, rh}; }
};

struct SimParams {
  BallParams ball;
  SurfaceParams table_surface = SurfaceParams::table();
  SurfaceParams racket_surface = SurfaceParams::racket();
  double dt = 1e-3;
  double t_max = 3.0;
};

// ---------------------------------------------------------------------------

inline HitState sample_hit_state(Rng& rng, const StateRanges& r, const Vec2& target = Vec2(2.55, 0.0)) {
  r.validate();
  HitState h;
  h.p = {r.hit_plane_x, uniform(rng, r.py.lo, r.py.hi), uniform(rng, r.pz.lo, r.pz.hi)};
  h.v = {uniform(rng, r.vx.lo, r.vx.hi), uniform(rng, r.vy.lo, r.vy.hi), uniform(rng, r.vz.lo, r.vz.hi)};
  h.w = {uniform(rng, r.wx.lo, r.wx.hi), uniform(rng, r.wy.lo, r.wy.hi), uniform(rng, r.wz.lo, r.wz.hi)};
  h.target = target;
  return h;
}

/// The hitting state as a first-stage predictor would report it: additive
/// Gaussian noise on position, velocity and spin. p_x stays on the hitting
/// plane and the target is exact.
inline HitState perturb(const HitState& h, const NoiseConfig& noise, Rng& rng) {
  if (noise.sigma_p < 0.0 || noise.sigma_v < 0.0 || noise.sigma_w < 0.0)
    throw std::invalid_argument("perturb: noise standard deviations must be non-negative");
  HitState out = h;
  out.p.y() += gaussian(rng, noise.sigma_p);
  out.p.z() += gaussian(rng, noise.sigma_p);
  for (int i = 0; i < 3; ++i) out.v[i] += gaussian(rng, noise.sigma_v);
  for (int i = 0; i < 3; ++i) out.w[i] += gaussian(rng, noise.sigma_w);
  return out;
}

namespace detail {

inline double to_unit(double x, double lo, double hi) {
  if (hi == lo) return 0.0;
  return std::clamp(2.0 * (x - lo) / (hi - lo) - 1.0, -1.0, 1.0);
}

inline double from_unit(double u, double lo, double hi) { return lo + 0.5 * (u + 1.0) * (hi - lo); }

// Per-dimension (lo, hi) in observation order: p, v, w, target.
inline std::array<Interval, kObsDim> observation_bounds(const StateRanges& r, const Vec2& target) {
  return {Interval{r.hit_plane_x, r.hit_plane_x}, r.py, r.pz, r.vx, r.vy, r.vz, r.wx, r.wy, r.wz,
          Interval{target.x(), target.x()}, Interval{target.y(), target.y()}};
}

}  // namespace detail

/// Affine map of each dimension onto [-1, 1], clamped. Constant dimensions map to 0.
inline Observation normalize(const HitState& h, const StateRanges& r) {
  const auto bounds = detail::observation_bounds(r, h.target);
  Observation o;
  const std::array<double, kObsDim> raw = {h.p.x(), h.p.y(), h.p.z(), h.v.x(), h.v.y(), h.v.z(),
                                           h.w.x(), h.w.y(), h.w.z(), h.target.x(), h.target.y()};
  for (int i = 0; i < kObsDim; ++i) o[i] = detail::to_unit(raw[i], bounds[i].lo, bounds[i].hi);
  return o;
}

inline HitState denormalize(const Observation& o, const StateRanges& r, const Vec2& target) {
  const auto b = detail::observation_bounds(r, target);
  std::array<double, kObsDim> raw{};
  for (int i = 0; i < kObsDim; ++i) raw[i] = detail::from_unit(o[i], b[i].lo, b[i].hi);
  HitState h;
  h.p = {raw[0], raw[1], raw[2]};
  h.v = {raw[3], raw[4], raw[5]};
  h.w = {raw[6], raw[7], raw[8]};
  h.target = target;
  return h;
}

inline Observation observe(const HitState& h, const NoiseConfig& noise, const StateRanges& norm_ranges, Rng& rng) {
  return normalize(perturb(h, noise, rng), norm_ranges);
}

inline StrokeAction scale_action(const Vec3& a, const ActionBounds& b = {}) {
  const Vec3 c = a.cwiseMax(-1.0).cwiseMin(1.0);
  return {0.5 * (c[0] + 1.0) * b.max_speed, c[1] * b.max_angle, c[2] * b.max_angle};
}

inline Vec3 unscale_action(const StrokeAction& s, const ActionBounds& b = {}) {
  return {2.0 * s.speed / b.max_speed - 1.0, s.beta / b.max_angle, s.gamma / b.max_angle};
}

/// Racket pose for a stroke: blade centred on the predicted hitting position,
/// roll alpha growing linearly with the lateral hitting position.
inline RacketState racket_from_action(const StrokeAction& action, const Vec3& predicted_hit_p, double predicted_py,
                                      double k_alpha, const TableGeometry& table, double radius = 0.08,
                                      const ActionBounds& bounds = {}) {
  RacketState r;
  r.center = predicted_hit_p;
  r.angles.alpha = k_alpha * predicted_py / (0.5 * table.width);
  r.angles.beta = std::clamp(action.beta, -bounds.max_angle, bounds.max_angle);
  r.angles.gamma = std::clamp(action.gamma, -bounds.max_angle, bounds.max_angle);
  r.vel = Vec3(std::clamp(action.speed, 0.0, bounds.max_speed), 0.0, 0.0);
  r.radius = radius;
  return r;
}

namespace detail {

// Advances `s` by one step of at most `dt` and reports the first of two
// events: the net plane (x rising through x_net) and the landing (z falling
// through 0). `which` is 0 for none, 1 for net, 2 for landing.
struct EventStep {
  BallState state;
  int which = 0;
};

inline EventStep step_with_events(const BallState& s, double h, double x_net, bool net_done, const BallParams& bp) {
  const BallState next = rk4_step(s, h, bp);
  const auto gx = [x_net](const BallState& st) { return st.p.x() - x_net; };
  const auto gz = [](const BallState& st) { return -st.p.z(); };
  const bool net_hit = !net_done && gx(s) < 0.0 && gx(next) >= 0.0;
  const bool land_hit = gz(s) < 0.0 && gz(next) >= 0.0;
  if (!net_hit && !land_hit) return {next, 0};

  BallState at_net, at_land;
  if (net_hit) at_net = gx(next) == 0.0 ? next : refine_crossing(s, h, bp, gx);
  if (land_hit) at_land = gz(next) == 0.0 ? next : refine_crossing(s, h, bp, gz);
  if (net_hit && (!land_hit || at_net.t <= at_land.t)) return {at_net, 1};
  return {at_land, 2};
}

}  // namespace detail

/// Strikes the true incoming ball and flies the return. `trace`, if given,
/// receives the post-impact state and every subsequent state on the dt grid
/// before the terminating event.
inline EpisodeOutcome rollout(const HitState& true_hit, const RacketState& racket, const TableGeometry& table,
                              const SimParams& sim, std::vector<BallState>* trace = nullptr) {
  const ImpactResult impact = racket_impact(true_hit.ball(), racket, sim.racket_surface, sim.ball);
  if (!impact.hit) return EpisodeOutcome::failed(FailureReason::miss);
  BallState s = impact.state;
  if (trace) trace->push_back(s);
  if (s.v.x() <= 0.0) return EpisodeOutcome::failed(FailureReason::backward);

  const double x_net = table.net_x();
  std::optional<double> clearance;
  const double t_end = s.t + sim.t_max;
  long steps = 0;
  while (s.t < t_end - 1e-12) {
    const double h = std::min(sim.dt, t_end - s.t);
    auto ev = detail::step_with_events(s, h, x_net, clearance.has_value(), sim.ball);
    if (ev.which == 0) {
      ++steps;
      s = ev.state;
      s.t = true_hit.ball().t + static_cast<double>(steps) * sim.dt;
      if (trace) trace->push_back(s);
      continue;
    }
    if (ev.which == 1) {
      // Record the clearance, then redo the same grid step with the net event disarmed.
      clearance = ev.state.p.z();
      if (*clearance < table.net_height) return EpisodeOutcome::failed(FailureReason::into_net);
      continue;
    }
    const BallState& land = ev.state;
    if (!clearance) return EpisodeOutcome::failed(FailureReason::own_side);
    const double tol = 1e-9;
    const bool on_table = std::abs(land.p.y()) <= 0.5 * table.width + tol && land.p.x() <= table.far_edge_x() + tol &&
                          land.p.x() >= x_net - tol;
    if (!on_table) return EpisodeOutcome::failed(FailureReason::off_table);
    return EpisodeOutcome::landed(Vec2(land.p.x(), land.p.y()), *clearance);
  }
  return EpisodeOutcome::failed(FailureReason::timeout);
}

/// Three-component shaped reward; zero on any failure.
inline RewardVec reward(const EpisodeOutcome& o, const Vec2& target, double net_height = 0.173) {
  if (!o.success) return {};
  return {std::exp(-std::abs(o.landing->x() - target.x())), std::exp(-std::abs(o.landing->y() - target.y())),
          std::exp(-std::abs(*o.net_clearance - net_height))};
}

/// Scalar reward used by the one-dimensional critic variants.
inline double reward_1d(const EpisodeOutcome& o, const Vec2& target, double k, double net_height = 0.173) {
  if (!(k > 0.0)) throw std::invalid_argument("reward_1d: k must be positive");
  if (!o.success) return 0.0;
  const double dist = (*o.landing - target).norm();
  return std::exp(-k * (dist - std::abs(*o.net_clearance - net_height)));
}

/// In-flight state `duration` seconds before the hit, for trajectory export.
inline BallState synthesize_serve(const HitState& true_hit, const BallParams& bp, double duration = 0.25,
                                  double dt = 1e-3) {
  return back_integrate(true_hit.ball(), bp, duration, dt);
}

}  // namespace stroke

namespace stroke {

/// e^{-|landing - target|} on success, else 0.
inline double distance_reward(const EpisodeOutcome& o, const Vec2& target) {
  return o.success ? std::exp(-(*o.landing - target).norm()) : 0.0;
}

inline double height_reward(const EpisodeOutcome& o, double net_height = 0.173) {
  return o.success ? std::exp(-std::abs(*o.net_clearance - net_height)) : 0.0;
}

enum class Phase { training, evaluation };

struct EnvConfig {
  SimParams sim;
  TableGeometry table;
  NoiseConfig noise;
  StateRanges train_ranges = StateRanges::training();
  StateRanges eval_ranges = StateRanges::evaluation();
  Vec2 target = Vec2(2.55, 0.0);
  double k_alpha = deg_to_rad(25.0);
  double racket_radius = 0.08;
  ActionBounds bounds;
  bool eval_observation_noise = true;
};

/// The stroke task behind the generic bandit interface.
class StrokeEnv {
 public:
  struct Episode {
    HitState truth;
    HitState predicted;
    Vec observation;
  };

  struct Step {
    EpisodeOutcome outcome;
    RewardVec reward;
    bool success = false;
    double distance_reward = 0.0;
    double height_reward = 0.0;
  };

  StrokeEnv() = default;
  explicit StrokeEnv(EnvConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.sim.ball.validate();
    cfg_.sim.table_surface.validate();
    cfg_.sim.racket_surface.validate();
    cfg_.train_ranges.validate();
    cfg_.eval_ranges.validate();
  }

  const EnvConfig& config() const { return cfg_; }
  int obs_dim() const { return kObsDim; }

  Episode sample(std::uint64_t seed, Phase phase) const {
    Rng rng(seed);
    const bool eval = phase == Phase::evaluation;
    Episode ep;
    ep.truth = sample_hit_state(rng, eval ? cfg_.eval_ranges : cfg_.train_ranges, cfg_.target);
    ep.predicted = (eval && !cfg_.eval_observation_noise) ? ep.truth : perturb(ep.truth, cfg_.noise, rng);
    ep.observation = normalize(ep.predicted, cfg_.train_ranges);
    return ep;
  }

  RacketState racket_for(const Episode& ep, const Vec3& action) const {
    return racket_from_action(scale_action(action, cfg_.bounds), ep.predicted.p, ep.predicted.p.y(), cfg_.k_alpha,
                              cfg_.table, cfg_.racket_radius, cfg_.bounds);
  }

  Step play(const Episode& ep, const Vec3& action) const {
    Step st;
    st.outcome = rollout(ep.truth, racket_for(ep, action), cfg_.table, cfg_.sim);
    st.reward = reward(st.outcome, cfg_.target, cfg_.table.net_height);
    st.success = st.outcome.success;
    st.distance_reward = distance_reward(st.outcome, cfg_.target);
    st.height_reward = height_reward(st.outcome, cfg_.table.net_height);
    return st;
  }

  double scalar_reward(const Step& st, double k) const {
    return reward_1d(st.outcome, cfg_.target, k, cfg_.table.net_height);
  }

 private:
  EnvConfig cfg_;
};

}  // namespace stroke
