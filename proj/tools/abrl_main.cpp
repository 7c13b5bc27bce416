// Command-line front end: config-driven experiment runner plus the oracle
// audit and schedule checks. Exit codes: 0 ok, 1 config error, 2 audit
// failure, 3 divergence-quorum failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "abrl/experiment.hpp"
#include "abrl/validation.hpp"
#include "abrl/version.hpp"

namespace {

struct CliOptions {
  std::string kind = "garnet";
  std::string algorithm = "abtd";
  std::string reward_mode = "state";

  int garnet_states = 30;
  int garnet_actions = 4;
  int garnet_branching = 2;
  double garnet_sigma = 0.1;
  std::uint64_t env_seed = 1;

  int num_features = 4;
  double cosine_s0 = 0.5;
  int rbf_per_axis = 4;

  std::vector<double> sched_coeff{0.01, 0.06, 0.25, 1.0};
  std::vector<double> sched_offset{1000, 1000, 1000, 100};
  std::vector<double> sched_exponent{1.0, 0.85, 0.70, 0.55};
  bool sts = false;
  int sts_scale = 2;

  long horizon = 200000;
  long episodes = 5000;
  long car_step_cap = 5000;
  int repeats = 20;
  std::uint64_t base_seed = 12345;
  long eval_interval = 1000;
  long episode_eval_interval = 10;
  std::string output_dir = "out";
  int workers = 0;

  double theta_box = 10.0;
  double cosine_s_min = 0.01;
  double cosine_s_max = 10.0;
  long abpbe_burn_in = 1000;

  int sarsa_grid = 8;
  double sarsa_epsilon = 0.1;
  double sarsa_lr = 0.05;
};

void add_run_options(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("--kind", o.kind, "garnet | mountain-car | mts-vs-sts");
  cmd->add_option("--algorithm", o.algorithm,
                  "abtd | abbe | abpbe | static-ac | sarsa");
  cmd->add_option("--reward-mode", o.reward_mode,
                  "garnet reward channel: state | state-action");
  cmd->add_option("--garnet-states", o.garnet_states);
  cmd->add_option("--garnet-actions", o.garnet_actions);
  cmd->add_option("--garnet-branching", o.garnet_branching);
  cmd->add_option("--garnet-sigma", o.garnet_sigma);
  cmd->add_option("--env-seed", o.env_seed, "seed of the environment instance");
  cmd->add_option("--num-features", o.num_features, "K_r (cosine family)");
  cmd->add_option("--cosine-s0", o.cosine_s0);
  cmd->add_option("--rbf-per-axis", o.rbf_per_axis,
                  "RBF grid resolution; M = per-axis^2");
  cmd->add_option("--sched-coeff", o.sched_coeff,
                  "step coefficients, slowest scale first")
      ->expected(4);
  cmd->add_option("--sched-offset", o.sched_offset)->expected(4);
  cmd->add_option("--sched-exponent", o.sched_exponent)->expected(4);
  cmd->add_flag("--sts", o.sts, "collapse to a single time scale");
  cmd->add_option("--sts-scale", o.sts_scale,
                  "which scale the STS run adopts (0..3)");
  cmd->add_option("--horizon", o.horizon, "steps per repeat (finite chains)");
  cmd->add_option("--episodes", o.episodes, "episodes per repeat (car)");
  cmd->add_option("--car-step-cap", o.car_step_cap);
  cmd->add_option("--repeats", o.repeats);
  cmd->add_option("--base-seed", o.base_seed);
  cmd->add_option("--eval-interval", o.eval_interval);
  cmd->add_option("--episode-eval-interval", o.episode_eval_interval);
  cmd->add_option("--output-dir", o.output_dir);
  cmd->add_option("--workers", o.workers, "0 = hardware concurrency");
  cmd->add_option("--theta-box", o.theta_box);
  cmd->add_option("--cosine-s-min", o.cosine_s_min);
  cmd->add_option("--cosine-s-max", o.cosine_s_max);
  cmd->add_option("--abpbe-burn-in", o.abpbe_burn_in);
  cmd->add_option("--sarsa-grid", o.sarsa_grid);
  cmd->add_option("--sarsa-epsilon", o.sarsa_epsilon);
  cmd->add_option("--sarsa-lr", o.sarsa_lr);
  cmd->set_config("--config", "", "read options from a key=value file");
}

bool build_config(const CliOptions& o, abrl::ExperimentConfig& cfg,
                  std::string& error) {
  if (!abrl::kind_from_string(o.kind, cfg.kind)) {
    error = "unknown experiment kind '" + o.kind + "'";
    return false;
  }
  if (!abrl::algorithm_from_string(o.algorithm, cfg.algorithm)) {
    error = "unknown algorithm '" + o.algorithm + "'";
    return false;
  }
  if (o.reward_mode == "state")
    cfg.reward_mode = abrl::GarnetRewardMode::StateReward;
  else if (o.reward_mode == "state-action")
    cfg.reward_mode = abrl::GarnetRewardMode::StateAction;
  else {
    error = "unknown reward mode '" + o.reward_mode + "'";
    return false;
  }
  cfg.garnet = abrl::GarnetSpec{o.garnet_states, o.garnet_actions,
                                o.garnet_branching, o.garnet_sigma};
  cfg.env_seed = o.env_seed;
  cfg.num_features = o.num_features;
  cfg.cosine_s0 = o.cosine_s0;
  cfg.rbf_per_axis = o.rbf_per_axis;
  if (o.sts) {
    if (o.sts_scale < 0 || o.sts_scale > 3) {
      error = "--sts-scale must be 0..3";
      return false;
    }
    cfg.schedule = abrl::StepSchedule<double>::single(
        o.sched_coeff[o.sts_scale], o.sched_offset[o.sts_scale],
        o.sched_exponent[o.sts_scale]);
  } else {
    for (int i = 0; i < 4; ++i)
      cfg.schedule.scales[i] = {o.sched_coeff[i], o.sched_offset[i],
                                o.sched_exponent[i]};
    cfg.schedule.single_time_scale = false;
  }
  cfg.horizon = o.horizon;
  cfg.episodes = o.episodes;
  cfg.car_step_cap = o.car_step_cap;
  cfg.repeats = o.repeats;
  cfg.base_seed = o.base_seed;
  cfg.eval_interval = o.eval_interval;
  cfg.episode_eval_interval = o.episode_eval_interval;
  cfg.output_dir = o.output_dir;
  cfg.workers = o.workers;
  cfg.theta_box_halfwidth = o.theta_box;
  cfg.cosine_s_min = o.cosine_s_min;
  cfg.cosine_s_max = o.cosine_s_max;
  cfg.abpbe_burn_in = o.abpbe_burn_in;
  cfg.sarsa.grid_per_axis = o.sarsa_grid;
  cfg.sarsa.epsilon = o.sarsa_epsilon;
  cfg.sarsa.learning_rate = o.sarsa_lr;
  cfg.sarsa.step_cap = o.car_step_cap;
  return true;
}

void print_effective_config(const CliOptions& o) {
  std::printf("kind=%s\n", o.kind.c_str());
  std::printf("algorithm=%s\n", o.algorithm.c_str());
  std::printf("reward-mode=%s\n", o.reward_mode.c_str());
  std::printf("garnet-states=%d\n", o.garnet_states);
  std::printf("garnet-actions=%d\n", o.garnet_actions);
  std::printf("garnet-branching=%d\n", o.garnet_branching);
  std::printf("garnet-sigma=%.17g\n", o.garnet_sigma);
  std::printf("env-seed=%llu\n", (unsigned long long)o.env_seed);
  std::printf("num-features=%d\n", o.num_features);
  std::printf("cosine-s0=%.17g\n", o.cosine_s0);
  std::printf("rbf-per-axis=%d\n", o.rbf_per_axis);
  std::printf("sched-coeff=%.17g %.17g %.17g %.17g\n", o.sched_coeff[0],
              o.sched_coeff[1], o.sched_coeff[2], o.sched_coeff[3]);
  std::printf("sched-offset=%.17g %.17g %.17g %.17g\n", o.sched_offset[0],
              o.sched_offset[1], o.sched_offset[2], o.sched_offset[3]);
  std::printf("sched-exponent=%.17g %.17g %.17g %.17g\n", o.sched_exponent[0],
              o.sched_exponent[1], o.sched_exponent[2], o.sched_exponent[3]);
  std::printf("sts=%s\n", o.sts ? "true" : "false");
  std::printf("sts-scale=%d\n", o.sts_scale);
  std::printf("horizon=%ld\n", o.horizon);
  std::printf("episodes=%ld\n", o.episodes);
  std::printf("car-step-cap=%ld\n", o.car_step_cap);
  std::printf("repeats=%d\n", o.repeats);
  std::printf("base-seed=%llu\n", (unsigned long long)o.base_seed);
  std::printf("eval-interval=%ld\n", o.eval_interval);
  std::printf("episode-eval-interval=%ld\n", o.episode_eval_interval);
  std::printf("output-dir=%s\n", o.output_dir.c_str());
  std::printf("workers=%d\n", o.workers);
  std::printf("theta-box=%.17g\n", o.theta_box);
  std::printf("cosine-s-min=%.17g\n", o.cosine_s_min);
  std::printf("cosine-s-max=%.17g\n", o.cosine_s_max);
  std::printf("abpbe-burn-in=%ld\n", o.abpbe_burn_in);
  std::printf("sarsa-grid=%d\n", o.sarsa_grid);
  std::printf("sarsa-epsilon=%.17g\n", o.sarsa_epsilon);
  std::printf("sarsa-lr=%.17g\n", o.sarsa_lr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive-basis actor-critic experiment runner"};
  app.set_version_flag("--version", abrl::kVersion);
  app.require_subcommand(1);

  CliOptions opts;
  CLI::App* run = app.add_subcommand("run", "run a configured experiment");
  add_run_options(run, opts);
  CLI::App* show =
      app.add_subcommand("show-config", "print the effective configuration");
  add_run_options(show, opts);

  CLI::App* sched_cmd =
      app.add_subcommand("schedule-check", "check a step-size schedule");
  std::vector<double> sc_coeff{0.01, 0.06, 0.25, 1.0};
  std::vector<double> sc_offset{1000, 1000, 1000, 100};
  std::vector<double> sc_exponent{1.0, 0.85, 0.70, 0.55};
  sched_cmd->add_option("--coeff", sc_coeff)->expected(4);
  sched_cmd->add_option("--offset", sc_offset)->expected(4);
  sched_cmd->add_option("--exponent", sc_exponent)->expected(4);

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "run the oracle audit suite");
  abrl::ValidationOptions vopts;
  std::string json_path;
  validate_cmd->add_option("--seed", vopts.seed);
  validate_cmd->add_option("--instances", vopts.instances);
  validate_cmd->add_option("--jacobian-points", vopts.jacobian_points);
  validate_cmd->add_option("--json", json_path, "also write the report as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (show->parsed()) {
      print_effective_config(opts);
      return 0;
    }

    if (run->parsed()) {
      abrl::ExperimentConfig cfg;
      std::string error;
      if (!build_config(opts, cfg, error)) {
        std::fprintf(stderr, "config error: %s\n", error.c_str());
        return 1;
      }
      const abrl::ExperimentResult res = abrl::run_experiment(cfg);
      switch (res.status) {
        case abrl::ExperimentResult::Status::InvalidConfig:
          std::fprintf(stderr, "config error:\n%s", res.error.c_str());
          return 1;
        case abrl::ExperimentResult::Status::DivergenceQuorum:
          std::fprintf(stderr, "%s\n", res.error.c_str());
          return 3;
        case abrl::ExperimentResult::Status::Ok:
          break;
      }
      std::printf("wrote %zu files to %s (%d/%d repeats ok)\n",
                  res.files.size(), cfg.output_dir.c_str(),
                  res.total_repeats - res.failed_repeats, res.total_repeats);
      return 0;
    }

    if (sched_cmd->parsed()) {
      abrl::StepSchedule<double> sched;
      for (int i = 0; i < 4; ++i)
        sched.scales[i] = {sc_coeff[i], sc_offset[i], sc_exponent[i]};
      const abrl::ScheduleReport rep = abrl::validate_schedule(sched);
      std::printf("%s", rep.to_string().c_str());
      return rep.pass ? 0 : 2;
    }

    if (validate_cmd->parsed()) {
      const abrl::AuditReport rep = abrl::run_validation(vopts);
      std::printf("%s", rep.to_string().c_str());
      if (!json_path.empty()) {
        nlohmann::json j;
        j["schema"] = "abrl-validation-v1";
        j["pass"] = rep.pass();
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : rep.entries)
          entries.push_back({{"name", e.name},
                             {"value", e.value},
                             {"tolerance", e.tolerance},
                             {"asserted", e.asserted},
                             {"pass", e.pass},
                             {"note", e.note}});
        j["entries"] = entries;
        std::ofstream os(json_path);
        os << j.dump(2) << "\n";
      }
      std::printf(rep.pass() ? "validation: PASS\n" : "validation: FAIL\n");
      return rep.pass() ? 0 : 2;
    }
  } catch (const abrl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
