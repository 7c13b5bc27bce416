#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "abrl/experiment.hpp"

namespace abrl {
namespace detail {

inline std::string manifest_json(const ExperimentConfig& cfg,
                                 const std::vector<RepeatOutcome>& outcomes,
                                 int failed, bool aggregate_valid) {
  nlohmann::json j;
  j["schema"] = "abrl-manifest-v1";
  j["code_version"] = kVersion;

  nlohmann::json c;
  c["kind"] = to_string(cfg.kind);
  c["algorithm"] = to_string(cfg.algorithm);
  c["garnet"] = {{"states", cfg.garnet.num_states},
                 {"actions", cfg.garnet.num_actions},
                 {"branching", cfg.garnet.branching},
                 {"sigma", cfg.garnet.reward_sigma}};
  c["env_seed"] = cfg.env_seed;
  c["reward_mode"] = cfg.reward_mode == GarnetRewardMode::StateReward
                         ? "state"
                         : "state-action";
  c["num_features"] = cfg.num_features;
  c["cosine_s0"] = cfg.cosine_s0;
  c["rbf_per_axis"] = cfg.rbf_per_axis;
  c["horizon"] = cfg.horizon;
  c["episodes"] = cfg.episodes;
  c["car_step_cap"] = cfg.car_step_cap;
  c["repeats"] = cfg.repeats;
  c["base_seed"] = cfg.base_seed;
  c["eval_interval"] = cfg.eval_interval;
  c["episode_eval_interval"] = cfg.episode_eval_interval;
  c["theta_box_halfwidth"] = cfg.theta_box_halfwidth;
  c["cosine_s_min"] = cfg.cosine_s_min;
  c["cosine_s_max"] = cfg.cosine_s_max;
  c["abpbe_burn_in"] = cfg.abpbe_burn_in;
  nlohmann::json sched = nlohmann::json::array();
  for (const auto& s : cfg.schedule.scales)
    sched.push_back({{"coeff", s.coeff},
                     {"offset", s.offset},
                     {"exponent", s.exponent}});
  c["schedule"] = sched;
  c["single_time_scale"] = cfg.schedule.single_time_scale;
  c["sarsa"] = {{"grid_per_axis", cfg.sarsa.grid_per_axis},
                {"epsilon", cfg.sarsa.epsilon},
                {"learning_rate", cfg.sarsa.learning_rate},
                {"step_cap", cfg.sarsa.step_cap}};
  j["config"] = c;

  nlohmann::json reps = nlohmann::json::array();
  for (const auto& o : outcomes) {
    nlohmann::json r;
    r["index"] = o.index;
    r["seed"] = o.seed;
    r["status"] = o.failed ? "failed" : "ok";
    if (o.failed) {
      r["failed_at"] = o.failed_at;
      r["failure"] = o.failure;
    }
    reps.push_back(r);
  }
  j["repeats"] = reps;
  j["failed_repeats"] = failed;
  j["aggregate_valid"] = aggregate_valid;
  return j.dump(2) + "\n";
}

}  // namespace detail
}  // namespace abrl
