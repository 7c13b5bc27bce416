#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "abrl/basis.hpp"
#include "abrl/errors.hpp"
#include "abrl/mdp.hpp"
#include "abrl/rng.hpp"

namespace abrl {

// Random MDP test-bench family garnet(X, U, B, sigma): X states, U actions,
// B successor states per (state, action), reward noise sigma.
struct GarnetSpec {
  int num_states = 0;
  int num_actions = 0;
  int branching = 0;
  double reward_sigma = 0.0;
};

inline void validate(const GarnetSpec& spec) {
  if (spec.num_states < 1 || spec.num_actions < 1)
    throw ConfigError("garnet: need at least one state and action");
  if (spec.branching < 1 || spec.branching > spec.num_states)
    throw ConfigError("garnet: branching must be in [1, num_states]");
  if (spec.reward_sigma < 0) throw ConfigError("garnet: sigma must be >= 0");
}

// The model keeps state rewards g(x) so the exact solvers stay exact;
// the per-(state,action) mean rewards gbar(x,u) ~ N(g(x), sigma^2) feed
// the sampler when it is configured for state-action rewards.
struct GarnetInstance {
  GarnetSpec spec;
  std::uint64_t seed = 0;
  FiniteMdp<double> mdp;
  Eigen::MatrixXd mean_rewards;  // N x U, gbar(x,u)
};

inline GarnetInstance generate_garnet(const GarnetSpec& spec,
                                      std::uint64_t seed) {
  validate(spec);
  GarnetInstance inst;
  inst.spec = spec;
  inst.seed = seed;
  Rng rng(seed);

  const int n = spec.num_states;
  const int nu = spec.num_actions;
  const int nb = spec.branching;

  inst.mdp.rewards.resize(n);
  for (int x = 0; x < n; ++x) inst.mdp.rewards[x] = rng.normal();

  inst.mdp.transitions.assign(nu, Eigen::MatrixXd::Zero(n, n));
  std::vector<int> pool(n);
  for (int x = 0; x < n; ++x) {
    for (int u = 0; u < nu; ++u) {
      // B distinct successors by partial Fisher-Yates
      std::iota(pool.begin(), pool.end(), 0);
      for (int j = 0; j < nb; ++j)
        std::swap(pool[j], pool[j + rng.uniform_int(n - j)]);
      std::vector<int> succ(pool.begin(), pool.begin() + nb);
      std::sort(succ.begin(), succ.end());
      // probabilities from sorted uniform cut points
      std::vector<double> cuts(nb - 1);
      for (auto& c : cuts) c = rng.uniform01();
      std::sort(cuts.begin(), cuts.end());
      double prev = 0.0;
      for (int j = 0; j < nb; ++j) {
        const double next = (j + 1 < nb) ? cuts[j] : 1.0;
        inst.mdp.transitions[u](x, succ[j]) = next - prev;
        prev = next;
      }
    }
  }

  inst.mean_rewards.resize(n, nu);
  for (int x = 0; x < n; ++x)
    for (int u = 0; u < nu; ++u)
      inst.mean_rewards(x, u) =
          rng.normal(inst.mdp.rewards[x], spec.reward_sigma);

  validate(inst.mdp);
  return inst;
}

// Block one-hot actor feature table: xi(x, u) puts phi(x, s0) in the u-th
// block of a K_r * U vector, zeros elsewhere. The basis parameters are
// frozen at s0; the table is never rebuilt when s adapts.
inline Eigen::MatrixXd garnet_actor_features(const CosineBasis<double>& basis,
                                             const Eigen::VectorXd& s0,
                                             int num_actions) {
  const Eigen::Index n = basis.num_states();
  const Eigen::Index k = basis.num_weights();
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(n * num_actions, k * num_actions);
  for (Eigen::Index x = 0; x < n; ++x) {
    const Eigen::VectorXd phi = features(basis, s0, x);
    for (int u = 0; u < num_actions; ++u)
      xi.row(x * num_actions + u).segment(u * k, k) = phi.transpose();
  }
  return xi;
}

// Versioned text serialization. The (spec, seed) pair regenerates the
// instance; with audit=true the matrices are dumped and verified
// bit-exactly on load.
inline void save_garnet(std::ostream& os, const GarnetInstance& inst,
                        bool audit = false) {
  os << "abrl-garnet v1\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "spec %d %d %d %a seed %llu\n",
                inst.spec.num_states, inst.spec.num_actions,
                inst.spec.branching, inst.spec.reward_sigma,
                static_cast<unsigned long long>(inst.seed));
  os << buf;
  if (!audit) return;
  os << "audit\n";
  auto dump = [&](const Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        std::snprintf(buf, sizeof(buf), "%s%a", j ? " " : "", m(i, j));
        os << buf;
      }
      os << "\n";
    }
  };
  dump(inst.mdp.rewards);
  dump(inst.mean_rewards);
  for (const auto& p : inst.mdp.transitions) dump(p);
}

inline GarnetInstance load_garnet(std::istream& is) {
  std::string header;
  std::getline(is, header);
  if (header != "abrl-garnet v1")
    throw IoError("load_garnet: unsupported header '" + header + "'");
  std::string tag;
  GarnetSpec spec;
  unsigned long long seed = 0;
  std::string sigma_tok, seed_tag;
  is >> tag >> spec.num_states >> spec.num_actions >> spec.branching >>
      sigma_tok >> seed_tag >> seed;
  if (tag != "spec" || seed_tag != "seed")
    throw IoError("load_garnet: malformed spec line");
  spec.reward_sigma = std::strtod(sigma_tok.c_str(), nullptr);
  GarnetInstance inst = generate_garnet(spec, seed);

  if (is >> tag) {
    if (tag != "audit") throw IoError("load_garnet: unexpected token " + tag);
    auto verify = [&](const Eigen::MatrixXd& m, const char* what) {
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
          std::string v;
          if (!(is >> v)) throw IoError("load_garnet: truncated audit dump");
          if (std::strtod(v.c_str(), nullptr) != m(i, j))
            throw IoError(std::string("load_garnet: audit mismatch in ") +
                          what);
        }
    };
    verify(inst.mdp.rewards, "rewards");
    verify(inst.mean_rewards, "mean_rewards");
    for (const auto& p : inst.mdp.transitions) verify(p, "transitions");
  }
  return inst;
}

}  // namespace abrl
