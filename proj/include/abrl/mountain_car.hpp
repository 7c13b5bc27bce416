#pragma once

#include <Eigen/Core>
#include <cmath>

#include "abrl/errors.hpp"
#include "abrl/rng.hpp"

namespace abrl {

// Classic under-powered car in a valley. Constants are configuration so
// task variants can be tested; defaults are the standard ones.
struct MountainCarParams {
  double p_min = -1.2;
  double p_max = 0.6;
  double v_max = 0.07;
  double goal = 0.5;
  double thrust = 0.001;
  double gravity = 0.0025;
  double reset_p_max = 0.5;  // reset position ~ U[p_min, reset_p_max], v = 0
};

using CarState = Eigen::Vector2d;  // (position, velocity)

struct CarStep {
  CarState next;
  double reward = 0.0;
  bool at_goal = false;
};

// action is the thrust direction in {-1, 0, +1}. Reward is -1 per step and
// 0 on the step that reaches the goal.
inline CarStep mountain_car_step(const MountainCarParams& par,
                                 const CarState& state, int action) {
  if (action < -1 || action > 1)
    throw InvalidAction("mountain_car_step: action must be -1, 0 or +1");
  CarStep out;
  double v = state[1] + par.thrust * action - par.gravity * std::cos(3.0 * state[0]);
  v = std::min(std::max(v, -par.v_max), par.v_max);
  double p = state[0] + v;
  p = std::min(std::max(p, par.p_min), par.p_max);
  if (p == par.p_min) v = 0.0;  // inelastic wall
  out.next << p, v;
  out.at_goal = p >= par.goal;
  out.reward = out.at_goal ? 0.0 : -1.0;
  return out;
}

inline CarState mountain_car_reset(const MountainCarParams& par, Rng& rng) {
  return CarState(rng.uniform(par.p_min, par.reset_p_max), 0.0);
}

}  // namespace abrl
