#pragma once

// Instantaneous single-point impacts: Newton restitution along the contact
// normal and an isotropic Coulomb impulse on the contact-point slip, capped at
// the impulse that brings the slip to rest.

#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

#include "stroke/common.hpp"
#include "stroke/physics.hpp"

namespace stroke {

struct SurfaceParams {
  double restitution = 0.97;  // kappa_R
  double friction = 0.05;     // mu

  void validate() const {
    if (!(restitution > 0.0 && restitution <= 1.0))
      throw std::invalid_argument("SurfaceParams: restitution must lie in (0, 1]");
    if (!(friction >= 0.0)) throw std::invalid_argument("SurfaceParams: friction must be non-negative");
  }

  static SurfaceParams table() { return {0.97, 0.05}; }
  static SurfaceParams racket() { return {0.9, 1.0}; }
};

/// Rotation angles of the racket blade about the world x, y and z axes.
struct RacketAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

struct RacketState {
  Vec3 center = Vec3::Zero();
  RacketAngles angles;
  Vec3 vel = Vec3::Zero();
  double radius = 0.08;
};

/// Restitution from drop and rebound heights: sqrt(h2 / h1).
inline double estimate_restitution(double h1, double h2) {
  if (!(h1 > 0.0)) throw std::invalid_argument("estimate_restitution: drop height must be positive");
  if (h2 < 0.0) throw std::invalid_argument("estimate_restitution: rebound height must be non-negative");
  return std::sqrt(h2 / h1);
}

/// Friction coefficient from the tilt angle at which the balls start sliding.
inline double estimate_friction(double theta) {
  if (!(theta >= 0.0 && theta < kPi / 2.0))
    throw std::invalid_argument("estimate_friction: tilt angle must lie in [0, pi/2)");
  return std::tan(theta);
}

/// Blade normal: (-1, 0, 0) rotated by Rz(gamma) * Ry(beta) * Rx(alpha).
inline Vec3 racket_normal(const RacketAngles& a) {
  const Eigen::Matrix3d rot = (Eigen::AngleAxisd(a.gamma, Vec3::UnitZ()) *
                               Eigen::AngleAxisd(a.beta, Vec3::UnitY()) *
                               Eigen::AngleAxisd(a.alpha, Vec3::UnitX()))
                                  .toRotationMatrix();
  return (rot * Vec3(-1.0, 0.0, 0.0)).normalized();
}

/// Velocity of the contact point (at -r1 * n from the centre) relative to the surface.
inline Vec3 contact_slip(const BallState& s, const Vec3& n, const Vec3& v_surf, double r1) {
  const Vec3 v_rel = s.v - v_surf;
  const Vec3 u = v_rel + s.w.cross(-r1 * n);
  return u - u.dot(n) * n;
}

/// Impact of the ball on a surface with outward unit normal `n` moving at
/// `v_surf`. Requires an approaching contact, (v - v_surf) . n < 0.
inline BallState bounce(const BallState& s, const Vec3& n, const Vec3& v_surf, const SurfaceParams& surf,
                        const BallParams& ball) {
  const Vec3 v_rel = s.v - v_surf;
  const double vn = v_rel.dot(n);
  if (!(vn < 0.0)) throw std::invalid_argument("bounce: contact is not approaching the surface");

  const double m = ball.mass;
  const double inertia = ball.inertia();
  const double r = ball.r1;
  const double normal_impulse = m * (1.0 + surf.restitution) * -vn;

  BallState out = s;
  out.v = s.v - (1.0 + surf.restitution) * vn * n;

  const Vec3 slip = contact_slip(s, n, v_surf, r);
  const double slip_speed = slip.norm();
  if (slip_speed > 0.0) {
    const Vec3 dir = slip / slip_speed;
    const double m_eff = 1.0 / (1.0 / m + r * r / inertia);
    const double tangential_impulse = std::min(surf.friction * normal_impulse, m_eff * slip_speed);
    out.v -= (tangential_impulse / m) * dir;
    out.w += (-r * n).cross(-tangential_impulse * dir) / inertia;
  }
  return out;
}

struct ImpactResult {
  BallState state;
  bool hit = false;
};

/// Strikes the ball with the racket blade. Misses when the ball centre lies
/// outside the blade disc (offset measured in the blade plane). The blade is
/// two-sided: the face opposing the relative velocity takes the impact.
inline ImpactResult racket_impact(const BallState& ball, const RacketState& racket, const SurfaceParams& surf,
                                  const BallParams& params) {
  Vec3 n = racket_normal(racket.angles);
  const Vec3 offset = ball.p - racket.center;
  const Vec3 in_plane = offset - offset.dot(n) * n;
  if (in_plane.norm() > racket.radius) return {ball, false};

  const double vn = (ball.v - racket.vel).dot(n);
  if (vn > 0.0) n = -n;
  if (vn == 0.0) return {ball, false};
  return {bounce(ball, n, racket.vel, surf, params), true};
}

inline double kinetic_energy(const BallState& s, const BallParams& bp) {
  return 0.5 * bp.mass * s.v.squaredNorm() + 0.5 * bp.inertia() * s.w.squaredNorm();
}

}  // namespace stroke
