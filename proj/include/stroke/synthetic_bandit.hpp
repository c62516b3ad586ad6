#pragma once

// Physics-free bandit with a known optimal action a*(s). Each reward component
// is exp(-|a_i - a*_i(s)|), so the best achievable mean reward is 1.

#include <cmath>
#include <cstdint>

#include "stroke/metrics.hpp"

namespace stroke {

class SyntheticBandit {
 public:
  static constexpr int kDim = 3;

  struct Episode {
    Vec observation;
  };

  struct Step {
    RewardVec reward;
    bool success = true;
    double distance_reward = 0.0;
    double height_reward = 0.0;
  };

  int obs_dim() const { return kDim; }

  static Vec3 optimal_action(const Vec& s) {
    return {0.6 * s[0] + 0.2 * s[1], 0.6 * s[1] - 0.2 * s[2], 0.5 * s[2] + 0.3 * s[0]};
  }

  Episode sample(std::uint64_t seed, Phase) const {
    Rng rng(seed);
    Vec s(kDim);
    for (int i = 0; i < kDim; ++i) s[i] = uniform(rng, -1.0, 1.0);
    return {s};
  }

  Step play(const Episode& ep, const Vec3& action) const {
    const Vec3 diff = action - optimal_action(ep.observation);
    Step st;
    st.reward = {std::exp(-std::abs(diff[0])), std::exp(-std::abs(diff[1])), std::exp(-std::abs(diff[2]))};
    st.distance_reward = std::exp(-diff.norm());
    st.height_reward = st.reward.rh;
    return st;
  }

  double scalar_reward(const Step& st, double) const { return (st.reward.rx + st.reward.ry + st.reward.rh) / 3.0; }

  static double mean_reward(const Metrics& m) { return (m.mean_rx + m.mean_ry + m.mean_rh) / 3.0; }
};

}  // namespace stroke
