#pragma once

// Free flight of a spinning ball: gravity, quadratic air drag and Magnus lift,
// integrated with fixed-step RK4. Spin is constant in flight.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "stroke/common.hpp"

namespace stroke {

/// Moment of inertia of a thin spherical shell with outer radius r1 and a
/// concentric cavity of radius r2.
inline double ball_inertia(double mass, double r1, double r2) {
  if (!(r2 < r1)) throw std::invalid_argument("ball_inertia: cavity radius must be smaller than outer radius");
  if (r2 < 0.0 || mass < 0.0) throw std::invalid_argument("ball_inertia: negative mass or radius");
  return 0.4 * mass * (std::pow(r1, 5) - std::pow(r2, 5)) / (std::pow(r1, 3) - std::pow(r2, 3));
}

struct BallParams {
  double mass = 2.7e-3;          // kg
  double r1 = 0.020;             // outer radius, m
  double r2 = 0.0196;            // cavity radius, m
  double gravity = 9.81;         // m/s^2
  double drag_coefficient = 0.4;
  double lift_coefficient = 0.6;
  double air_density = 1.29;     // kg/m^3

  double area() const { return kPi * r1 * r1; }
  double inertia() const { return ball_inertia(mass, r1, r2); }

  void validate() const {
    if (!(mass > 0.0)) throw std::invalid_argument("BallParams: mass must be positive");
    if (!(r2 > 0.0 && r2 < r1)) throw std::invalid_argument("BallParams: need 0 < r2 < r1");
    if (drag_coefficient < 0.0 || lift_coefficient < 0.0 || air_density < 0.0)
      throw std::invalid_argument("BallParams: aerodynamic coefficients must be non-negative");
  }
};

struct BallState {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  Vec3 w = Vec3::Zero();

  bool finite() const { return std::isfinite(t) && p.allFinite() && v.allFinite() && w.allFinite(); }
};

inline Vec3 drag_force(const Vec3& v, const BallParams& bp) {
  return -0.5 * bp.drag_coefficient * bp.air_density * bp.area() * v.norm() * v;
}

inline Vec3 magnus_force(const Vec3& v, const Vec3& w, const BallParams& bp) {
  return 0.5 * bp.lift_coefficient * bp.air_density * bp.area() * bp.r1 * w.cross(v);
}

inline Vec3 aero_accel(const BallState& s, const BallParams& bp) {
  const Vec3 gravity(0.0, 0.0, -bp.mass * bp.gravity);
  return (gravity + drag_force(s.v, bp) + magnus_force(s.v, s.w, bp)) / bp.mass;
}

/// One classical RK4 step on (p, v). A negative dt integrates backwards.
inline BallState rk4_step(const BallState& s, double dt, const BallParams& bp) {
  auto accel = [&](const Vec3& v) {
    BallState probe;
    probe.v = v;
    probe.w = s.w;
    return aero_accel(probe, bp);
  };
  const Vec3 k1v = accel(s.v);
  const Vec3 k1p = s.v;
  const Vec3 k2v = accel(s.v + 0.5 * dt * k1v);
  const Vec3 k2p = s.v + 0.5 * dt * k1v;
  const Vec3 k3v = accel(s.v + 0.5 * dt * k2v);
  const Vec3 k3p = s.v + 0.5 * dt * k2v;
  const Vec3 k4v = accel(s.v + dt * k3v);
  const Vec3 k4p = s.v + dt * k3v;

  BallState out;
  out.t = s.t + dt;
  out.p = s.p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  out.v = s.v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  out.w = s.w;
  return out;
}

inline BallState step(const BallState& s, double dt, const BallParams& bp) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  return rk4_step(s, dt, bp);
}

/// Integrates for `duration` seconds using whole steps of `dt` plus one
/// shorter final step, so the end time is hit exactly.
inline BallState integrate_for(BallState s, double duration, double dt, const BallParams& bp) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_for: dt must be positive");
  if (duration < 0.0) throw std::invalid_argument("integrate_for: negative duration");
  const double t_end = s.t + duration;
  const auto n = static_cast<long>(std::floor(duration / dt + 1e-9));
  for (long i = 0; i < n; ++i) s = rk4_step(s, dt, bp);
  const double rest = t_end - s.t;
  if (rest > 1e-15) s = rk4_step(s, rest, bp);
  s.t = t_end;
  return s;
}

enum class Axis { x = 0, y = 1, z = 2 };

struct Crossing {
  BallState state;
  bool crossed = false;
};

/// Event root on the step [s0, s0 + dt]: g(s0) < 0 <= g(step(s0, dt)) or the
/// mirror case. Bisects the sub-step length until |g| < tol (at most 40 halvings).
inline BallState refine_crossing(const BallState& s0, double dt, const BallParams& bp,
                                 const std::function<double(const BallState&)>& g,
                                 double tol = 1e-6) {
  const double g0 = g(s0);
  double lo = 0.0, hi = dt;
  BallState mid = rk4_step(s0, hi, bp);
  for (int it = 0; it < 40; ++it) {
    const double h = 0.5 * (lo + hi);
    mid = rk4_step(s0, h, bp);
    const double gm = g(mid);
    if (std::abs(gm) < tol) return mid;
    if ((gm < 0.0) == (g0 < 0.0))
      lo = h;
    else
      hi = h;
  }
  return mid;
}

/// Integrates until coordinate `axis` crosses `value` (either direction).
inline Crossing integrate_to_plane(const BallState& start, const BallParams& bp, Axis axis, double value,
                                   double dt, double t_max) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_to_plane: dt must be positive");
  if (!(t_max > 0.0)) throw std::invalid_argument("integrate_to_plane: t_max must be positive");
  const int k = static_cast<int>(axis);
  auto g = [k, value](const BallState& s) { return s.p[k] - value; };

  if (g(start) == 0.0) return {start, true};
  const double t_end = start.t + t_max;
  BallState s = start;
  while (s.t < t_end) {
    const double h = std::min(dt, t_end - s.t);
    const BallState next = rk4_step(s, h, bp);
    const double g0 = g(s), g1 = g(next);
    if (g1 == 0.0) return {next, true};
    if ((g0 < 0.0) != (g1 < 0.0)) return {refine_crossing(s, h, bp, g), true};
    s = next;
  }
  return {s, false};
}

/// Integrates backwards in time by `duration`. Rejects segments that pass
/// below the table surface z = 0, since a bounce cannot be un-done here.
inline BallState back_integrate(const BallState& s, const BallParams& bp, double duration, double dt) {
  if (duration < 0.0) throw std::invalid_argument("back_integrate: negative duration");
  if (!(dt > 0.0)) throw std::invalid_argument("back_integrate: dt must be positive");
  if (duration == 0.0) return s;
  const double t_end = s.t - duration;
  const auto n = static_cast<long>(std::floor(duration / dt + 1e-9));
  BallState cur = s;
  // A start below z = 0 is allowed (the hitting plane lies off the table) as
  // long as the ball rose from above the surface; once the backward segment
  // has been at or above z = 0 it must stay there.
  bool been_above = s.p.z() >= 0.0;
  auto check = [&](const BallState& st) {
    if (st.p.z() >= 0.0) {
      been_above = true;
      return;
    }
    if (been_above || st.p.z() < s.p.z())
      throw std::domain_error("back_integrate: segment passes below the table surface");
  };
  for (long i = 0; i < n; ++i) {
    cur = rk4_step(cur, -dt, bp);
    check(cur);
  }
  const double rest = cur.t - t_end;
  if (rest > 1e-15) {
    cur = rk4_step(cur, -rest, bp);
    check(cur);
  }
  cur.t = t_end;
  return cur;
}

}  // namespace stroke
