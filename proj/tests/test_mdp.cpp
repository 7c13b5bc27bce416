#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "abrl/garnet.hpp"
#include "abrl/mdp.hpp"
#include "abrl/oracle.hpp"
#include "abrl/rng.hpp"

using namespace abrl;

namespace {

// single-action policy with zero features; the induced chain is the MDP's
// first transition matrix
SoftmaxPolicy<double> trivial_policy(int num_states, int num_actions = 1) {
  SoftmaxPolicy<double> p;
  p.num_actions = num_actions;
  p.actor_features = Eigen::MatrixXd::Zero(num_states * num_actions, 1);
  p.theta = Eigen::VectorXd::Zero(1);
  return p;
}

SoftmaxPolicy<double> garnet_policy(const GarnetInstance& inst,
                                    const CosineBasis<double>& basis,
                                    const Eigen::VectorXd& s0) {
  SoftmaxPolicy<double> p;
  p.num_actions = inst.spec.num_actions;
  p.actor_features = garnet_actor_features(basis, s0, p.num_actions);
  p.theta = Eigen::VectorXd::Zero(p.actor_features.cols());
  return p;
}

}  // namespace

TEST_SUITE("mdp") {

TEST_CASE("one-state chain pins every quantity") {
  FiniteMdp<double> mdp;
  mdp.transitions = {Eigen::MatrixXd::Ones(1, 1)};
  mdp.rewards = Eigen::VectorXd::Constant(1, 3.25);
  const auto chain = induced_chain(mdp, trivial_policy(1));
  CHECK(chain.stationary[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chain.average_reward == doctest::Approx(3.25).epsilon(1e-12));
  CHECK(chain.differential_value[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("two-state flip chain: symmetry forces D, J from the 2x2 solve") {
  FiniteMdp<double> mdp;
  Eigen::MatrixXd p(2, 2);
  p << 0, 1, 1, 0;
  mdp.transitions = {p};
  mdp.rewards.resize(2);
  mdp.rewards << 0, 2;
  const auto chain = induced_chain(mdp, trivial_policy(2));
  CHECK(chain.stationary[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(chain.stationary[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(chain.average_reward == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(chain.differential_value[chain.recurrent_state] == 0.0);
  // Bellman row at state 0: J(0) - J(1) = g(0) - eta
  CHECK(chain.differential_value[0] - chain.differential_value[1] ==
        doctest::Approx(mdp.rewards[0] - chain.average_reward).epsilon(1e-12));
  const auto tj = bellman_apply(chain, mdp, chain.differential_value);
  CHECK((tj - chain.differential_value).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("disconnected chain is rejected") {
  FiniteMdp<double> mdp;
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(2, 2);
  mdp.transitions = {p};
  mdp.rewards = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(induced_chain(mdp, trivial_policy(2)), NonErgodicChain);
}

TEST_CASE("garnet chain matches power-iteration and episodic-sum oracles") {
  const GarnetInstance inst = generate_garnet(GarnetSpec{5, 3, 2, 0.0}, 91);
  Rng rng(17);
  const auto basis = make_cosine_basis<double>(5, 2, rng);
  const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(1, 0.7);
  auto policy = garnet_policy(inst, basis, s0);
  for (Eigen::Index i = 0; i < policy.theta.size(); ++i)
    policy.theta[i] = rng.uniform(-0.5, 0.5);
  const auto chain = induced_chain(inst.mdp, policy);

  // stationary distribution vs long power iteration
  Eigen::RowVectorXd d = Eigen::RowVectorXd::Constant(5, 0.2);
  for (int it = 0; it < 1000000; ++it) {
    d = d * chain.transition;
    d /= d.sum();
  }
  CHECK((d.transpose() - chain.stationary).lpNorm<Eigen::Infinity>() < 1e-8);

  // differential value vs Monte-Carlo sums of (g - eta) until x* is hit
  const Eigen::Index xs = chain.recurrent_state;
  const int trajectories = 200000;
  for (Eigen::Index start = 0; start < 5; ++start) {
    double sum = 0.0, sum_sq = 0.0;
    for (int t = 0; t < trajectories; ++t) {
      double acc = 0.0;
      Eigen::Index x = start;
      for (int k = 0; k < 100000; ++k) {
        acc += inst.mdp.rewards[x] - chain.average_reward;
        x = rng.categorical(chain.transition.row(x).transpose());
        if (x == xs) break;
      }
      sum += acc;
      sum_sq += acc * acc;
    }
    const double mean = sum / trajectories;
    const double se = std::sqrt((sum_sq / trajectories - mean * mean) /
                                trajectories);
    CHECK(std::abs(mean - chain.differential_value[start]) <=
          3.0 * se + 1e-9);
  }
}

TEST_CASE("bellman_apply") {
  const GarnetInstance inst = generate_garnet(GarnetSpec{4, 2, 2, 0.0}, 5);
  Rng rng(3);
  const auto basis = make_cosine_basis<double>(4, 2, rng);
  const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(1, 0.5);
  const auto policy = garnet_policy(inst, basis, s0);
  const auto chain = induced_chain(inst.mdp, policy);

  SUBCASE("exact J is the fixed point") {
    const auto tj = bellman_apply(chain, inst.mdp, chain.differential_value);
    CHECK((tj - chain.differential_value).lpNorm<Eigen::Infinity>() < 1e-10);
  }
  SUBCASE("zero value returns centered rewards") {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    const auto tv = bellman_apply(chain, inst.mdp, zero);
    for (int x = 0; x < 4; ++x)
      CHECK(tv[x] == doctest::Approx(inst.mdp.rewards[x] -
                                     chain.average_reward));
  }
  SUBCASE("random vector matches entrywise hand expansion") {
    Eigen::VectorXd v(4);
    for (int i = 0; i < 4; ++i) v[i] = rng.normal();
    const auto tv = bellman_apply(chain, inst.mdp, v);
    for (int x = 0; x < 4; ++x) {
      double expect = inst.mdp.rewards[x] - chain.average_reward;
      for (int y = 0; y < 4; ++y) expect += chain.transition(x, y) * v[y];
      CHECK(tv[x] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  SUBCASE("length mismatch throws") {
    const Eigen::VectorXd bad = Eigen::VectorXd::Zero(5);
    CHECK_THROWS_AS(bellman_apply(chain, inst.mdp, bad), DimensionMismatch);
  }
}

TEST_CASE("projection_matrix") {
  Rng rng(11);
  SUBCASE("full basis projects onto everything") {
    const Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(4, 4);
    const Eigen::VectorXd d = Eigen::VectorXd::Constant(4, 0.25);
    CHECK((projection_matrix(phi, d) - Eigen::MatrixXd::Identity(4, 4))
              .norm() < 1e-12);
  }
  SUBCASE("constant basis under uniform weights averages") {
    const Eigen::MatrixXd phi = Eigen::MatrixXd::Ones(5, 1);
    const Eigen::VectorXd d = Eigen::VectorXd::Constant(5, 0.2);
    CHECK((projection_matrix(phi, d) -
           Eigen::MatrixXd::Constant(5, 5, 0.2))
              .norm() < 1e-12);
  }
  SUBCASE("matches the normal-equations least-squares oracle") {
    Eigen::MatrixXd phi(6, 3);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 3; ++j) phi(i, j) = rng.normal();
    Eigen::VectorXd d(6);
    for (int i = 0; i < 6; ++i) d[i] = rng.uniform(0.05, 1.0);
    d /= d.sum();
    const Eigen::MatrixXd proj = projection_matrix(phi, d);
    CHECK((proj * proj - proj).norm() < 1e-9);
    for (int rep = 0; rep < 5; ++rep) {
      Eigen::VectorXd v(6);
      for (int i = 0; i < 6; ++i) v[i] = rng.normal();
      const Eigen::MatrixXd gram =
          phi.transpose() * d.asDiagonal() * phi;
      const Eigen::VectorXd rhs = phi.transpose() * d.asDiagonal() * v;
      const Eigen::VectorXd r_hat = gram.fullPivLu().solve(rhs);
      CHECK((proj * v - phi * r_hat).lpNorm<Eigen::Infinity>() < 1e-10);
      // residual is D-orthogonal to the span
      CHECK(((v - proj * v).transpose() * d.asDiagonal() * phi).norm() <
            1e-10);
    }
  }
  SUBCASE("rank-deficient basis throws") {
    Eigen::MatrixXd phi(4, 2);
    phi.col(0).setOnes();
    phi.col(1).setOnes();
    const Eigen::VectorXd d = Eigen::VectorXd::Constant(4, 0.25);
    CHECK_THROWS_AS(projection_matrix(phi, d), RankDeficientBasis);
  }
}

TEST_CASE("likelihood_ratio") {
  Rng rng(23);
  SUBCASE("single action gives zero score") {
    auto policy = trivial_policy(3, 1);
    CHECK(likelihood_ratio(policy, 0, 0).norm() == 0.0);
  }
  SUBCASE("uniform softmax at theta=0 with two actions") {
    SoftmaxPolicy<double> policy;
    policy.num_actions = 2;
    policy.actor_features = Eigen::MatrixXd::Zero(2, 3);
    policy.actor_features.row(0) << 1.0, 2.0, -1.0;  // xi(x=0, u=0)
    policy.actor_features.row(1) << 0.5, -1.0, 3.0;  // xi(x=0, u=1)
    policy.theta = Eigen::VectorXd::Zero(3);
    const Eigen::VectorXd psi = likelihood_ratio(policy, 0, 0);
    const Eigen::VectorXd expect =
        (policy.actor_features.row(0) - policy.actor_features.row(1)) / 2.0;
    CHECK((psi - expect.transpose()).norm() < 1e-14);
  }
  SUBCASE("matches finite differences of log mu") {
    SoftmaxPolicy<double> policy;
    policy.num_actions = 3;
    policy.actor_features = Eigen::MatrixXd::Zero(6, 4);
    for (Eigen::Index i = 0; i < 6; ++i)
      for (int j = 0; j < 4; ++j) policy.actor_features(i, j) = rng.normal();
    policy.theta = Eigen::VectorXd::Zero(4);
    for (int j = 0; j < 4; ++j) policy.theta[j] = rng.normal();
    for (Eigen::Index x = 0; x < 2; ++x) {
      for (int u = 0; u < 3; ++u) {
        auto log_mu = [&](const Eigen::VectorXd& theta) {
          SoftmaxPolicy<double> p = policy;
          p.theta = theta;
          return std::log(action_probabilities(p, x)[u]);
        };
        const Eigen::VectorXd fd =
            finite_difference(log_mu, policy.theta, 1e-6);
        CHECK((likelihood_ratio(policy, x, u) - fd).lpNorm<Eigen::Infinity>() <
              1e-8);
      }
    }
  }
}

TEST_CASE("exact_policy_gradient") {
  SUBCASE("one-state MDP has zero gradient") {
    FiniteMdp<double> mdp;
    mdp.transitions = {Eigen::MatrixXd::Ones(1, 1),
                       Eigen::MatrixXd::Ones(1, 1)};
    mdp.rewards = Eigen::VectorXd::Constant(1, 2.0);
    auto policy = trivial_policy(1, 2);
    const auto chain = induced_chain(mdp, policy);
    const auto grad =
        exact_policy_gradient(mdp, policy, chain.differential_value, chain);
    CHECK(grad.norm() < 1e-14);
  }
  SUBCASE("identical actions give zero gradient") {
    const GarnetInstance inst = generate_garnet(GarnetSpec{4, 1, 2, 0.0}, 9);
    FiniteMdp<double> mdp = inst.mdp;
    mdp.transitions.push_back(mdp.transitions[0]);  // duplicate action
    Rng rng(4);
    const auto basis = make_cosine_basis<double>(4, 2, rng);
    SoftmaxPolicy<double> policy;
    policy.num_actions = 2;
    policy.actor_features = garnet_actor_features(
        basis, Eigen::VectorXd::Constant(1, 0.5), 2);
    policy.theta = Eigen::VectorXd::Zero(4);
    for (int i = 0; i < 4; ++i) policy.theta[i] = rng.normal();
    const auto chain = induced_chain(mdp, policy);
    const auto grad =
        exact_policy_gradient(mdp, policy, chain.differential_value, chain);
    CHECK(grad.lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SUBCASE("matches finite differences of eta on random garnets") {
    Rng rng(31);
    for (int it = 0; it < 3; ++it) {
      const GarnetInstance inst =
          generate_garnet(GarnetSpec{8, 3, 2, 0.1}, rng.raw());
      const auto basis = make_cosine_basis<double>(8, 4, rng);
      auto policy = garnet_policy(inst, basis,
                                  Eigen::VectorXd::Constant(1, 0.5));
      for (Eigen::Index i = 0; i < policy.theta.size(); ++i)
        policy.theta[i] = rng.uniform(-1.0, 1.0);
      CHECK(lemma1_check(inst.mdp, policy).pass);
    }
  }
}

TEST_CASE("exact_objectives") {
  Rng rng(47);
  SUBCASE("exact representation zeroes all three objectives") {
    const GarnetInstance inst = generate_garnet(GarnetSpec{4, 2, 2, 0.0}, 77);
    const auto basis = make_cosine_basis<double>(4, 4, rng);
    const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(1, 0.9);
    const auto policy = garnet_policy(inst, basis, s0);
    const auto chain = induced_chain(inst.mdp, policy);
    const Eigen::MatrixXd phi = feature_matrix(basis, s0, 4);
    const Eigen::VectorXd r =
        phi.fullPivLu().solve(chain.differential_value);
    const auto obj = exact_objectives(inst.mdp, policy, chain, phi, r);
    CHECK(obj.mse == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(obj.msbe == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(obj.mspbe == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("constant reward with zero weights gives zero objectives") {
    FiniteMdp<double> mdp;
    Eigen::MatrixXd p(2, 2);
    p << 0.5, 0.5, 0.5, 0.5;
    mdp.transitions = {p};
    mdp.rewards = Eigen::VectorXd::Constant(2, 1.5);
    const auto policy = trivial_policy(2);
    const auto chain = induced_chain(mdp, policy);
    Eigen::MatrixXd phi(2, 1);
    phi << 1.0, -1.0;
    const Eigen::VectorXd r = Eigen::VectorXd::Zero(1);
    const auto obj = exact_objectives(mdp, policy, chain, phi, r);
    CHECK(obj.mse == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(obj.msbe == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(obj.mspbe == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("identity holds and the projection only shrinks") {
    for (int it = 0; it < 10; ++it) {
      const GarnetInstance inst =
          generate_garnet(GarnetSpec{10, 3, 3, 0.1}, rng.raw());
      const auto basis = make_cosine_basis<double>(10, 3, rng);
      const Eigen::VectorXd s =
          Eigen::VectorXd::Constant(1, rng.uniform(0.2, 2.0));
      auto policy = garnet_policy(inst, basis, s);
      for (Eigen::Index i = 0; i < policy.theta.size(); ++i)
        policy.theta[i] = rng.uniform(-1.0, 1.0);
      const auto chain = induced_chain(inst.mdp, policy);
      const Eigen::MatrixXd phi = feature_matrix(basis, s, 10);
      Eigen::VectorXd r(3);
      for (int i = 0; i < 3; ++i) r[i] = rng.normal();
      // the w-form / norm-form agreement is asserted inside
      const auto obj = exact_objectives(inst.mdp, policy, chain, phi, r);
      CHECK(obj.mspbe >= 0.0);
      CHECK(2 * obj.msbe + 1e-12 >= obj.mspbe);  // MSBE carries the 1/2
    }
  }
}

TEST_CASE("chain invariants on random instances") {
  Rng rng(59);
  for (int it = 0; it < 5; ++it) {
    const int n = 3 + rng.uniform_int(8);
    const int nb = std::min(n, 2 + rng.uniform_int(n - 1));
    const GarnetInstance inst = generate_garnet(
        GarnetSpec{n, 1 + rng.uniform_int(3), nb, 0.0}, rng.raw());
    const auto basis = make_cosine_basis<double>(n, 2, rng);
    auto policy = garnet_policy(inst, basis, Eigen::VectorXd::Constant(1, 0.4));
    for (Eigen::Index i = 0; i < policy.theta.size(); ++i)
      policy.theta[i] = rng.uniform(-1.0, 1.0);
    const auto chain = induced_chain(inst.mdp, policy);

    CHECK((chain.stationary.transpose() * chain.transition -
           chain.stationary.transpose())
              .lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(chain.stationary.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(chain.average_reward ==
          doctest::Approx(chain.stationary.dot(inst.mdp.rewards))
              .epsilon(1e-12));

    double td_mean = 0.0;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        td_mean += chain.stationary[x] * chain.transition(x, y) *
                   exact_td(chain, inst.mdp, x, y);
    CHECK(std::abs(td_mean) < 1e-10);
  }
}

}  // TEST_SUITE
