#pragma once

#include <vector>

#include "abrl/actor.hpp"
#include "abrl/garnet.hpp"
#include "abrl/learner.hpp"
#include "abrl/mountain_car.hpp"
#include "abrl/rng.hpp"

namespace abrl {

// Reward channel for Garnet sampling. StateReward keeps the observed mean
// at g(x) so the exact solvers describe the sampled process; StateAction
// uses the per-(x,u) mean rewards gbar(x,u). Both add N(0, sigma^2)
// observation noise.
enum class GarnetRewardMode { StateReward, StateAction };

class GarnetSampler {
 public:
  GarnetSampler(const GarnetInstance& inst, GarnetRewardMode mode, Rng& rng)
      : inst_(&inst), mode_(mode) {
    state_ = rng.uniform_int(inst.spec.num_states);
  }

  // resume at a known state without touching the generator
  GarnetSampler(const GarnetInstance& inst, GarnetRewardMode mode,
                Eigen::Index start)
      : inst_(&inst), mode_(mode), state_(start) {}

  Eigen::Index state() const { return state_; }
  void set_state(Eigen::Index x) { state_ = x; }

  TransitionSample<Eigen::Index, double> next(
      const SoftmaxPolicy<double>& policy, Rng& rng) {
    TransitionSample<Eigen::Index, double> smp;
    smp.x = state_;
    smp.u = sample_action(policy, rng, state_);
    smp.y = rng.categorical(inst_->mdp.transitions[smp.u].row(state_).transpose());
    const double mean = mode_ == GarnetRewardMode::StateReward
                            ? inst_->mdp.rewards[smp.x]
                            : inst_->mean_rewards(smp.x, smp.u);
    smp.g = mean + inst_->spec.reward_sigma * rng.normal();
    state_ = smp.y;
    return smp;
  }

 private:
  const GarnetInstance* inst_;
  GarnetRewardMode mode_;
  Eigen::Index state_ = 0;
};

template <class Policy>
std::vector<TransitionSample<Eigen::Index, double>> sample_trajectory(
    const GarnetInstance& inst, const Policy& policy, long horizon,
    std::uint64_t seed,
    GarnetRewardMode mode = GarnetRewardMode::StateReward) {
  Rng rng(seed);
  GarnetSampler sampler(inst, mode, rng);
  std::vector<TransitionSample<Eigen::Index, double>> out;
  out.reserve(horizon);
  for (long n = 0; n < horizon; ++n) out.push_back(sampler.next(policy, rng));
  return out;
}

// Episodic car dynamics stitched into a continuing stream: the step into
// the goal is emitted with reward 0, then the next sample starts from a
// fresh reset draw. Episodes longer than step_cap are cut the same way
// (without the goal reward).
class MountainCarSampler {
 public:
  MountainCarSampler(const MountainCarParams& params, long step_cap, Rng& rng)
      : params_(params), step_cap_(step_cap) {
    state_ = mountain_car_reset(params_, rng);
  }

  const CarState& state() const { return state_; }
  void set_state(const CarState& s, long episode_steps) {
    state_ = s;
    episode_steps_ = episode_steps;
  }
  long episode_steps() const { return episode_steps_; }

  // episode_done/episode_length report a completed episode (goal or cap)
  struct Emitted {
    TransitionSample<CarState, double> sample;
    bool episode_done = false;
    bool reached_goal = false;
    long episode_length = 0;
  };

  template <class Actor>
  Emitted next(const Actor& actor, Rng& rng) {
    Emitted out;
    out.sample.x = state_;
    out.sample.u = sample_action(actor, rng, state_);
    const CarStep step = mountain_car_step(params_, state_, out.sample.u - 1);
    out.sample.g = step.reward;
    out.sample.y = step.next;
    ++episode_steps_;
    if (step.at_goal || (step_cap_ > 0 && episode_steps_ >= step_cap_)) {
      out.episode_done = true;
      out.reached_goal = step.at_goal;
      out.episode_length = episode_steps_;
      state_ = mountain_car_reset(params_, rng);
      episode_steps_ = 0;
    } else {
      state_ = step.next;
    }
    return out;
  }

 private:
  MountainCarParams params_;
  long step_cap_ = 0;
  CarState state_;
  long episode_steps_ = 0;
};

}  // namespace abrl
