#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "abrl/actor.hpp"
#include "abrl/garnet.hpp"
#include "abrl/learner.hpp"
#include "abrl/mdp.hpp"
#include "abrl/oracle.hpp"
#include "abrl/sarsa.hpp"
#include "abrl/schedule.hpp"
#include "abrl/trajectory.hpp"
#include "abrl/version.hpp"

namespace abrl {

enum class Algorithm { Abtd, Abbe, Abpbe, StaticAc, Sarsa };
enum class ExperimentKind { Garnet, MountainCar, MtsVsSts };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Abtd: return "abtd";
    case Algorithm::Abbe: return "abbe";
    case Algorithm::Abpbe: return "abpbe";
    case Algorithm::StaticAc: return "static-ac";
    case Algorithm::Sarsa: return "sarsa";
  }
  return "?";
}

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Garnet: return "garnet";
    case ExperimentKind::MountainCar: return "mountain-car";
    case ExperimentKind::MtsVsSts: return "mts-vs-sts";
  }
  return "?";
}

inline bool algorithm_from_string(const std::string& s, Algorithm& out) {
  if (s == "abtd") out = Algorithm::Abtd;
  else if (s == "abbe") out = Algorithm::Abbe;
  else if (s == "abpbe") out = Algorithm::Abpbe;
  else if (s == "static-ac") out = Algorithm::StaticAc;
  else if (s == "sarsa") out = Algorithm::Sarsa;
  else return false;
  return true;
}

inline bool kind_from_string(const std::string& s, ExperimentKind& out) {
  if (s == "garnet") out = ExperimentKind::Garnet;
  else if (s == "mountain-car") out = ExperimentKind::MountainCar;
  else if (s == "mts-vs-sts") out = ExperimentKind::MtsVsSts;
  else return false;
  return true;
}

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Garnet;
  Algorithm algorithm = Algorithm::Abtd;

  // environment
  GarnetSpec garnet{30, 4, 2, 0.1};
  std::uint64_t env_seed = 1;
  GarnetRewardMode reward_mode = GarnetRewardMode::StateReward;
  MountainCarParams car;
  long car_step_cap = 5000;

  // basis
  int num_features = 4;      // K_r for the cosine family
  double cosine_s0 = 0.5;
  int rbf_per_axis = 4;      // M = per_axis^2 centers for the car

  StepSchedule<double> schedule = StepSchedule<double>::defaults();

  // run protocol
  long horizon = 200000;              // steps (finite chains)
  long episodes = 5000;               // mountain car
  int repeats = 20;
  std::uint64_t base_seed = 12345;
  long eval_interval = 1000;          // probe cadence in steps
  long episode_eval_interval = 10;    // row cadence in episodes (car)
  std::string output_dir = "out";
  int workers = 0;                    // 0 = hardware concurrency

  // iterate constraints
  double theta_box_halfwidth = 10.0;
  double cosine_s_min = 0.01;
  double cosine_s_max = 10.0;
  long abpbe_burn_in = 1000;

  SarsaConfig sarsa;
};

inline std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.repeats < 1) errors.push_back("repeats must be >= 1");
  if (cfg.horizon < 0) errors.push_back("horizon must be >= 0");
  if (cfg.episodes < 0) errors.push_back("episodes must be >= 0");
  if (cfg.eval_interval < 1) errors.push_back("eval-interval must be >= 1");
  if (cfg.episode_eval_interval < 1)
    errors.push_back("episode-eval-interval must be >= 1");
  if (cfg.num_features < 1) errors.push_back("num-features must be >= 1");
  if (cfg.rbf_per_axis < 1) errors.push_back("rbf-per-axis must be >= 1");
  if (cfg.kind != ExperimentKind::MountainCar &&
      cfg.algorithm == Algorithm::Sarsa)
    errors.push_back("sarsa runs only on the mountain car");
  try {
    validate(cfg.garnet);
  } catch (const ConfigError& e) {
    if (cfg.kind != ExperimentKind::MountainCar) errors.push_back(e.what());
  }
  if (!cfg.schedule.single_time_scale) {
    const ScheduleReport rep = validate_schedule(cfg.schedule);
    if (!rep.pass)
      errors.push_back("schedule fails the step-size contract:\n" +
                       rep.to_string());
  }
  return errors;
}

// -------- per-repeat execution ---------------------------------------------

struct RepeatOutcome {
  int index = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  long failed_at = -1;
  std::string failure;
  std::vector<std::vector<double>> rows;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline StepSchedule<double> schedule_for(const ExperimentConfig& cfg) {
  StepSchedule<double> sched = cfg.schedule;
  if (cfg.algorithm == Algorithm::StaticAc) sched.scales[0].coeff = 0.0;
  return sched;
}

inline RepeatOutcome run_garnet_repeat(const ExperimentConfig& cfg,
                                       const GarnetInstance& inst,
                                       int repeat_index) {
  RepeatOutcome out;
  out.index = repeat_index;
  out.seed = derive_seed(cfg.base_seed, repeat_index);
  Rng rng(out.seed);

  const int n = cfg.garnet.num_states;
  const int nu = cfg.garnet.num_actions;
  CosineBasis<double> basis =
      make_cosine_basis<double>(n, cfg.num_features, rng);
  Eigen::VectorXd s0 = Eigen::VectorXd::Constant(1, cfg.cosine_s0);

  SoftmaxPolicy<double> policy;
  policy.num_actions = nu;
  policy.actor_features = garnet_actor_features(basis, s0, nu);
  policy.theta = Eigen::VectorXd::Zero(policy.actor_features.cols());

  LearnerState<double> st =
      make_learner_state<double>(cfg.num_features, policy.theta.size(), s0);
  IterateBoxes<double> boxes{
      uniform_box<double>(policy.theta.size(), -cfg.theta_box_halfwidth,
                          cfg.theta_box_halfwidth),
      uniform_box<double>(1, cfg.cosine_s_min, cfg.cosine_s_max)};
  const StepSchedule<double> sched = schedule_for(cfg);
  EstimatorBank<double> bank =
      make_estimator_bank<double>(cfg.num_features, 1);
  const AbpbeOptions abpbe_opts{cfg.abpbe_burn_in, false};

  GarnetSampler sampler(inst, cfg.reward_mode, rng);

  for (long step = 0; step < cfg.horizon; ++step) {
    policy.theta = st.theta;
    const auto smp = sampler.next(policy, rng);
    try {
      switch (cfg.algorithm) {
        case Algorithm::Abtd:
        case Algorithm::StaticAc:
          st = abtd_step(st, smp, sched, basis, policy, boxes);
          break;
        case Algorithm::Abbe:
          st = abbe_step(st, smp, sched, basis, policy, boxes);
          break;
        case Algorithm::Abpbe: {
          const EstimatorBank<double> fresh =
              abpbe_estimator_step(bank, smp, st, sched, basis, abpbe_opts);
          if (fresh.step_count >= abpbe_opts.burn_in)
            st = abpbe_step(st, fresh, smp, sched, basis, policy, boxes,
                            abpbe_opts);
          else
            st.step_count += 1;
          bank = fresh;
          break;
        }
        case Algorithm::Sarsa:
          throw ConfigError("sarsa is not a garnet algorithm");
      }
    } catch (const NonFiniteUpdate& e) {
      out.failed = true;
      out.failed_at = step;
      out.failure = e.what();
      return out;
    }

    if ((step + 1) % cfg.eval_interval == 0) {
      policy.theta = st.theta;
      try {
        const InducedChain<double> chain = induced_chain(inst.mdp, policy);
        const Eigen::MatrixXd phi = feature_matrix(basis, st.s, n);
        const Objectives<double> obj =
            exact_objectives(inst.mdp, policy, chain, phi, st.r);
        std::vector<double> row{static_cast<double>(step + 1), st.eta,
                                chain.average_reward, obj.mse, obj.msbe,
                                obj.mspbe};
        for (Eigen::Index i = 0; i < st.s.size(); ++i) row.push_back(st.s[i]);
        out.rows.push_back(std::move(row));
      } catch (const Error& e) {
        out.failed = true;
        out.failed_at = step;
        out.failure = std::string("probe: ") + e.what();
        return out;
      }
    }
  }
  return out;
}

inline RepeatOutcome run_car_repeat(const ExperimentConfig& cfg,
                                    int repeat_index) {
  RepeatOutcome out;
  out.index = repeat_index;
  out.seed = derive_seed(cfg.base_seed, repeat_index);
  Rng rng(out.seed);

  if (cfg.algorithm == Algorithm::Sarsa) {
    SarsaLearner sarsa(cfg.car, cfg.sarsa);
    double steps_acc = 0.0;
    for (long ep = 1; ep <= cfg.episodes; ++ep) {
      steps_acc += static_cast<double>(sarsa.run_episode(rng));
      if (ep % cfg.episode_eval_interval == 0) {
        out.rows.push_back({static_cast<double>(ep),
                            steps_acc / cfg.episode_eval_interval});
        steps_acc = 0.0;
      }
    }
    return out;
  }

  const int per_axis = cfg.rbf_per_axis;
  const Eigen::Index m = per_axis * per_axis;
  RbfBasis<double> basis = make_rbf_basis<double>(
      m, cfg.car.p_max - cfg.car.p_min, 2 * cfg.car.v_max);
  const Eigen::VectorXd s0 = rbf_grid_params<double>(
      per_axis, cfg.car.p_min, cfg.car.p_max, -cfg.car.v_max, cfg.car.v_max);

  BlockSoftmaxActor<double, RbfBasis<double>> actor =
      make_block_actor<double>(basis, s0, 3);
  LearnerState<double> st =
      make_learner_state<double>(m, actor.theta.size(), s0);

  Box<double> s_box;
  s_box.lo.resize(4 * m);
  s_box.hi.resize(4 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    s_box.lo[i] = cfg.car.p_min;
    s_box.hi[i] = cfg.car.p_max;
    s_box.lo[m + i] = -cfg.car.v_max;
    s_box.hi[m + i] = cfg.car.v_max;
    s_box.lo[2 * m + i] = basis.width_floor_p;
    s_box.hi[2 * m + i] = cfg.car.p_max - cfg.car.p_min;
    s_box.lo[3 * m + i] = basis.width_floor_v;
    s_box.hi[3 * m + i] = 2 * cfg.car.v_max;
  }
  IterateBoxes<double> boxes{
      uniform_box<double>(actor.theta.size(), -cfg.theta_box_halfwidth,
                          cfg.theta_box_halfwidth),
      s_box};
  const StepSchedule<double> sched = schedule_for(cfg);
  const bool adaptive = cfg.algorithm != Algorithm::StaticAc;

  MountainCarSampler sampler(cfg.car, cfg.car_step_cap, rng);
  long episodes_done = 0;
  double steps_acc = 0.0;
  while (episodes_done < cfg.episodes) {
    actor.theta = st.theta;
    const auto em = sampler.next(actor, rng);
    try {
      switch (cfg.algorithm) {
        case Algorithm::Abtd:
        case Algorithm::StaticAc:
          st = abtd_step(st, em.sample, sched, basis, actor, boxes);
          break;
        case Algorithm::Abbe:
          st = abbe_step(st, em.sample, sched, basis, actor, boxes);
          break;
        default:
          throw ConfigError("unsupported mountain-car algorithm");
      }
    } catch (const NonFiniteUpdate& e) {
      out.failed = true;
      out.failed_at = episodes_done;
      out.failure = e.what();
      return out;
    }
    if (em.episode_done) {
      ++episodes_done;
      steps_acc += static_cast<double>(em.episode_length);
      if (episodes_done % cfg.episode_eval_interval == 0) {
        std::vector<double> row{static_cast<double>(episodes_done),
                                steps_acc / cfg.episode_eval_interval, st.eta};
        if (adaptive)
          for (Eigen::Index i = 0; i < st.s.size(); ++i)
            row.push_back(st.s[i]);
        out.rows.push_back(std::move(row));
        steps_acc = 0.0;
      }
    }
  }
  return out;
}

inline std::vector<std::string> garnet_columns(const ExperimentConfig&) {
  return {"step", "eta_estimate", "eta_exact", "mse", "msbe", "mspbe", "s0"};
}

inline std::vector<std::string> car_columns(const ExperimentConfig& cfg) {
  if (cfg.algorithm == Algorithm::Sarsa) return {"episode", "steps_to_goal"};
  std::vector<std::string> cols{"episode", "steps_to_goal", "eta_estimate"};
  if (cfg.algorithm != Algorithm::StaticAc) {
    const long k_s = 4L * cfg.rbf_per_axis * cfg.rbf_per_axis;
    for (long i = 0; i < k_s; ++i) cols.push_back("s" + std::to_string(i));
  }
  return cols;
}

}  // namespace detail

struct ExperimentResult {
  enum class Status { Ok, InvalidConfig, DivergenceQuorum };
  Status status = Status::Ok;
  std::string error;
  int total_repeats = 0;
  int failed_repeats = 0;
  std::vector<std::string> files;  // paths written, relative to output_dir
};

namespace detail {

inline void write_csv(const std::filesystem::path& path,
                      const std::string& schema,
                      const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path.string());
  os << "# " << schema << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      os << (i ? "," : "") << fmt_double(row[i]);
    os << "\n";
  }
}

// mean and standard error across repeats, aligned by row index; the first
// column (step/episode) is shared.
inline std::vector<std::vector<double>> aggregate_rows(
    const std::vector<const RepeatOutcome*>& ok, std::size_t num_cols) {
  std::vector<std::vector<double>> agg;
  if (ok.empty()) return agg;
  const std::size_t num_rows = ok.front()->rows.size();
  for (std::size_t r = 0; r < num_rows; ++r) {
    std::vector<double> row;
    row.push_back(ok.front()->rows[r][0]);
    for (std::size_t c = 1; c < num_cols; ++c) {
      double mean = 0.0;
      for (const auto* rep : ok) mean += rep->rows[r][c];
      mean /= static_cast<double>(ok.size());
      double var = 0.0;
      for (const auto* rep : ok) {
        const double dev = rep->rows[r][c] - mean;
        var += dev * dev;
      }
      const double se =
          ok.size() > 1
              ? std::sqrt(var / static_cast<double>(ok.size() - 1)) /
                    std::sqrt(static_cast<double>(ok.size()))
              : 0.0;
      row.push_back(mean);
      row.push_back(se);
    }
    agg.push_back(std::move(row));
  }
  return agg;
}

}  // namespace detail

namespace detail {

std::string manifest_json(const ExperimentConfig& cfg,
                          const std::vector<RepeatOutcome>& outcomes,
                          int failed, bool aggregate_valid);

}  // namespace detail

// Runs all repeats of one configuration (worker pool; outcomes collected
// by repeat index so output never depends on scheduling), writes
// per-repeat curves, the aggregate curve, and a manifest. A repeat that
// diverges is recorded as failed and excluded from the aggregate; the
// aggregate is invalid when more than 10% of repeats fail.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  ExperimentResult result;
  {
    const std::vector<std::string> errors = validate_config(cfg);
    if (!errors.empty()) {
      result.status = ExperimentResult::Status::InvalidConfig;
      for (const auto& e : errors) result.error += e + "\n";
      return result;
    }
  }

  if (cfg.kind == ExperimentKind::MtsVsSts) {
    // four sub-runs mirroring the multi- vs single-time-scale comparison
    struct Variant {
      const char* name;
      Algorithm algorithm;
      int sts_scale;  // -1 = keep multi-time-scale schedule
    };
    const Variant variants[] = {{"mts-abtd", Algorithm::Abtd, -1},
                                {"sts-slow-abtd", Algorithm::Abtd, 0},
                                {"sts-fast-abtd", Algorithm::Abtd, 2},
                                {"mts-static", Algorithm::StaticAc, -1}};
    for (const Variant& v : variants) {
      ExperimentConfig sub = cfg;
      sub.kind = ExperimentKind::Garnet;
      sub.algorithm = v.algorithm;
      sub.output_dir = (fs::path(cfg.output_dir) / v.name).string();
      if (v.sts_scale >= 0) {
        const auto& sc = cfg.schedule.scales[v.sts_scale];
        sub.schedule = StepSchedule<double>::single(sc.coeff, sc.offset,
                                                    sc.exponent);
      }
      const ExperimentResult sr = run_experiment(sub);
      if (sr.status != ExperimentResult::Status::Ok) {
        result.error += sr.error;
        result.status = sr.status;
        return result;
      }
      result.total_repeats += sr.total_repeats;
      result.failed_repeats += sr.failed_repeats;
      for (const auto& f : sr.files)
        result.files.push_back(std::string(v.name) + "/" + f);
    }
    return result;
  }

  fs::create_directories(cfg.output_dir);

  std::vector<RepeatOutcome> outcomes(cfg.repeats);
  {
    std::atomic<int> cursor{0};
    unsigned workers = cfg.workers > 0
                           ? static_cast<unsigned>(cfg.workers)
                           : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, cfg.repeats);
    const GarnetInstance inst =
        cfg.kind == ExperimentKind::Garnet
            ? generate_garnet(cfg.garnet, cfg.env_seed)
            : GarnetInstance{};
    auto work = [&]() {
      for (;;) {
        const int i = cursor.fetch_add(1);
        if (i >= cfg.repeats) return;
        outcomes[i] = cfg.kind == ExperimentKind::Garnet
                          ? detail::run_garnet_repeat(cfg, inst, i)
                          : detail::run_car_repeat(cfg, i);
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
  }

  const std::vector<std::string> columns =
      cfg.kind == ExperimentKind::Garnet ? detail::garnet_columns(cfg)
                                         : detail::car_columns(cfg);
  const std::string schema =
      std::string("abrl-curve ") + to_string(cfg.kind) + " " +
      to_string(cfg.algorithm) + " v1";

  std::vector<const RepeatOutcome*> ok;
  result.total_repeats = cfg.repeats;
  for (int i = 0; i < cfg.repeats; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "repeat_%03d.csv", i);
    detail::write_csv(fs::path(cfg.output_dir) / name, schema, columns,
                      outcomes[i].rows);
    result.files.push_back(name);
    if (outcomes[i].failed)
      ++result.failed_repeats;
    else
      ok.push_back(&outcomes[i]);
  }

  std::vector<std::string> agg_columns{columns.front()};
  for (std::size_t c = 1; c < columns.size(); ++c) {
    agg_columns.push_back(columns[c] + "_mean");
    agg_columns.push_back(columns[c] + "_se");
  }
  detail::write_csv(fs::path(cfg.output_dir) / "aggregate.csv",
                    schema + " aggregate", agg_columns,
                    detail::aggregate_rows(ok, columns.size()));
  result.files.push_back("aggregate.csv");

  const bool aggregate_valid =
      result.failed_repeats * 10 <= result.total_repeats;
  {
    std::ofstream os(fs::path(cfg.output_dir) / "manifest.json");
    os << detail::manifest_json(cfg, outcomes, result.failed_repeats,
                                aggregate_valid);
    result.files.push_back("manifest.json");
  }

  if (!aggregate_valid) {
    result.status = ExperimentResult::Status::DivergenceQuorum;
    result.error = std::to_string(result.failed_repeats) + "/" +
                   std::to_string(result.total_repeats) +
                   " repeats diverged; aggregate invalid";
  }
  return result;
}

}  // namespace abrl

#include "abrl/experiment_manifest.hpp"
