#pragma once

#include <Eigen/Core>

#include "abrl/basis.hpp"
#include "abrl/mountain_car.hpp"
#include "abrl/rng.hpp"

namespace abrl {

// Episodic SARSA(0) baseline on a fixed uniform RBF grid over the car's
// (position, velocity) box; epsilon-greedy, undiscounted, no basis
// adaptation. Comparison baseline only.
struct SarsaConfig {
  int grid_per_axis = 8;
  double epsilon = 0.1;
  double learning_rate = 0.05;
  long step_cap = 5000;
};

class SarsaLearner {
 public:
  SarsaLearner(const MountainCarParams& params, const SarsaConfig& cfg)
      : params_(params),
        cfg_(cfg),
        basis_(make_rbf_basis<double>(cfg.grid_per_axis * cfg.grid_per_axis,
                                      params.p_max - params.p_min,
                                      2 * params.v_max)),
        grid_(rbf_grid_params<double>(cfg.grid_per_axis, params.p_min,
                                      params.p_max, -params.v_max,
                                      params.v_max)),
        weights_(Eigen::MatrixXd::Zero(3, basis_.num_weights())) {}

  const Eigen::MatrixXd& weights() const { return weights_; }
  const SarsaConfig& config() const { return cfg_; }

  int select_action(const CarState& state, Rng& rng) const {
    if (rng.uniform01() < cfg_.epsilon) return rng.uniform_int(3);
    const Eigen::VectorXd phi = features(basis_, grid_, state);
    Eigen::Index best;
    (weights_ * phi).maxCoeff(&best);
    return static_cast<int>(best);
  }

  double q_value(const CarState& state, int action) const {
    return weights_.row(action).dot(features(basis_, grid_, state));
  }

  // Runs one episode from a fresh reset; returns the step count (capped).
  long run_episode(Rng& rng) {
    CarState x = mountain_car_reset(params_, rng);
    int u = select_action(x, rng);
    for (long step = 1;; ++step) {
      const CarStep result = mountain_car_step(params_, x, u - 1);
      const Eigen::VectorXd phi_x = features(basis_, grid_, x);
      if (result.at_goal) {
        const double delta = result.reward - weights_.row(u).dot(phi_x);
        weights_.row(u) += cfg_.learning_rate * delta * phi_x.transpose();
        return step;
      }
      const int u_next = select_action(result.next, rng);
      const double delta = result.reward + q_value(result.next, u_next) -
                           weights_.row(u).dot(phi_x);
      weights_.row(u) += cfg_.learning_rate * delta * phi_x.transpose();
      x = result.next;
      u = u_next;
      if (cfg_.step_cap > 0 && step >= cfg_.step_cap) return step;
    }
  }

 private:
  MountainCarParams params_;
  SarsaConfig cfg_;
  RbfBasis<double> basis_;
  Eigen::VectorXd grid_;
  Eigen::MatrixXd weights_;  // action x feature
};

}  // namespace abrl
