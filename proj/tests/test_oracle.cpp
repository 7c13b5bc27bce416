#include <doctest.h>

#include <Eigen/Dense>

#include "abrl/garnet.hpp"
#include "abrl/oracle.hpp"
#include "abrl/validation.hpp"

using namespace abrl;

namespace {

SoftmaxPolicy<double> policy_for(const GarnetInstance& inst,
                                 const CosineBasis<double>& basis,
                                 const Eigen::VectorXd& s0, Rng* rng = nullptr) {
  SoftmaxPolicy<double> p;
  p.num_actions = inst.spec.num_actions;
  p.actor_features = garnet_actor_features(basis, s0, p.num_actions);
  p.theta = Eigen::VectorXd::Zero(p.actor_features.cols());
  if (rng)
    for (Eigen::Index i = 0; i < p.theta.size(); ++i)
      p.theta[i] = rng->uniform(-1.0, 1.0);
  return p;
}

// fault-injection adapter: correct features, sign-flipped Jacobian
struct FlippedJacobianBasis {
  using State = Eigen::Index;
  CosineBasis<double> inner;
  Eigen::Index num_states() const { return inner.num_states(); }
  Eigen::Index num_weights() const { return inner.num_weights(); }
  Eigen::Index num_params() const { return inner.num_params(); }
};

Eigen::VectorXd features(const FlippedJacobianBasis& b,
                         const Eigen::VectorXd& s, Eigen::Index x) {
  return features(b.inner, s, x);
}
Eigen::MatrixXd feature_jacobian(const FlippedJacobianBasis& b,
                                 const Eigen::VectorXd& s, Eigen::Index x) {
  return -feature_jacobian(b.inner, s, x);
}
Eigen::MatrixXd feature_matrix(const FlippedJacobianBasis& b,
                               const Eigen::VectorXd& s, Eigen::Index n) {
  return feature_matrix(b.inner, s, n);
}

// fault-injection adapter: Jacobian computed from a shifted phase table
struct WrongPhaseBasis {
  using State = Eigen::Index;
  CosineBasis<double> inner;
  CosineBasis<double> shifted;
  Eigen::Index num_states() const { return inner.num_states(); }
  Eigen::Index num_weights() const { return inner.num_weights(); }
  Eigen::Index num_params() const { return inner.num_params(); }
};

Eigen::VectorXd features(const WrongPhaseBasis& b, const Eigen::VectorXd& s,
                         Eigen::Index x) {
  return features(b.inner, s, x);
}
Eigen::MatrixXd feature_jacobian(const WrongPhaseBasis& b,
                                 const Eigen::VectorXd& s, Eigen::Index x) {
  return feature_jacobian(b.shifted, s, x);
}

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("finite differences are exact on quadratics and constants") {
  Eigen::VectorXd x(4);
  x << 1.0, -2.0, 0.5, 3.0;
  auto quadratic = [](const Eigen::VectorXd& v) { return 0.5 * v.dot(v); };
  CHECK((finite_difference(quadratic, x, 1e-4) - x).lpNorm<Eigen::Infinity>() <
        1e-10);
  auto constant = [](const Eigen::VectorXd&) { return 4.2; };
  CHECK(finite_difference(constant, x, 1e-4).norm() == 0.0);
  CHECK_THROWS_AS(finite_difference(constant, x, 0.0), ConfigError);
}

TEST_CASE("td_fixed_point") {
  Rng rng(301);
  SUBCASE("E[d phi] vanishes at r*, by exhaustive (x,u,y) summation") {
    const GarnetInstance inst = generate_garnet(GarnetSpec{10, 3, 2, 0.1}, 3);
    auto basis = make_cosine_basis<double>(10, 3, rng);
    const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(1, 0.6);
    auto policy = policy_for(inst, basis, s0, &rng);
    const auto chain = induced_chain(inst.mdp, policy);
    const Eigen::MatrixXd phi = feature_matrix(basis, s0, 10);
    const Eigen::VectorXd r_star = td_fixed_point(chain, inst.mdp, phi);

    Eigen::VectorXd edphi = Eigen::VectorXd::Zero(3);
    for (int x = 0; x < 10; ++x) {
      const Eigen::VectorXd probs = action_probabilities(policy, x);
      for (int u = 0; u < 3; ++u)
        for (int y = 0; y < 10; ++y) {
          const double w = chain.stationary[x] * probs[u] *
                           inst.mdp.transitions[u](x, y);
          if (w == 0.0) continue;
          const double d = inst.mdp.rewards[x] - chain.average_reward +
                           phi.row(y).dot(r_star) - phi.row(x).dot(r_star);
          edphi += w * d * phi.row(x).transpose();
        }
    }
    CHECK(edphi.lpNorm<Eigen::Infinity>() < 1e-10);
  }
  SUBCASE("zero offset forces r* = 0") {
    // constant rewards make b = Phi^T D (g - eta 1) = 0
    GarnetInstance inst = generate_garnet(GarnetSpec{6, 2, 2, 0.0}, 8);
    inst.mdp.rewards.setConstant(0.7);
    auto basis = make_cosine_basis<double>(6, 2, rng);
    const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(1, 0.9);
    const auto policy = policy_for(inst, basis, s0);
    const auto chain = induced_chain(inst.mdp, policy);
    const Eigen::MatrixXd phi = feature_matrix(basis, s0, 6);
    CHECK(td_fixed_point(chain, inst.mdp, phi).norm() < 1e-12);
  }
  SUBCASE("full basis fixed point reproduces J up to the null direction") {
    const GarnetInstance inst = generate_garnet(GarnetSpec{5, 2, 3, 0.0}, 13);
    auto basis = make_cosine_basis<double>(5, 5, rng);
    const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(1, 1.1);
    const auto policy = policy_for(inst, basis, s0);
    const auto chain = induced_chain(inst.mdp, policy);
    const Eigen::MatrixXd phi = feature_matrix(basis, s0, 5);
    const Eigen::VectorXd r_star = td_fixed_point(chain, inst.mdp, phi);
    const TdStatistics<double> st = td_statistics(chain, inst.mdp, phi);
    CHECK((st.A * r_star + st.b).lpNorm<Eigen::Infinity>() < 1e-9);
    // value agrees with J up to a constant shift along the ones direction
    const Eigen::VectorXd diff = phi * r_star - chain.differential_value;
    CHECK((diff.array() - diff.mean()).abs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("exact estimator bank matches its defining equations") {
  Rng rng(401);
  const GarnetInstance inst = generate_garnet(GarnetSpec{7, 2, 3, 0.1}, 17);
  auto basis = make_cosine_basis<double>(7, 3, rng);
  const Eigen::VectorXd s = Eigen::VectorXd::Constant(1, 0.8);
  auto policy = policy_for(inst, basis, s, &rng);
  const auto chain = induced_chain(inst.mdp, policy);
  const Eigen::MatrixXd phi = feature_matrix(basis, s, 7);
  Eigen::VectorXd r(3);
  r << 0.2, -0.5, 1.0;

  const auto bank = exact_estimator_bank(chain, inst.mdp, basis, s, r);
  const auto st = td_statistics(chain, inst.mdp, phi);
  const auto ds = td_statistics_derivs(chain, inst.mdp, basis, s);

  CHECK((st.M * bank.w - (st.A * r + st.b)).norm() < 1e-12);
  CHECK((st.M * bank.w_r - st.A).norm() < 1e-12);
  CHECK((st.M * bank.w_s.col(0) -
         (ds.dA[0] * r + ds.db.col(0) - ds.dM[0] * bank.w))
            .norm() < 1e-12);
}

TEST_CASE("gradient audits pass on random instances") {
  Rng rng(501);
  for (int it = 0; it < 3; ++it) {
    const GarnetInstance inst =
        generate_garnet(GarnetSpec{8, 3, 2, 0.0}, rng.raw());
    auto basis = make_cosine_basis<double>(8, 3, rng);
    Eigen::VectorXd s = Eigen::VectorXd::Constant(1, rng.uniform(0.3, 1.5));
    auto policy = policy_for(inst, basis, s, &rng);
    Eigen::VectorXd r(3);
    for (int i = 0; i < 3; ++i) r[i] = rng.normal();
    const AuditReport report = audit_gradients(inst.mdp, policy, basis, r, s);
    CHECK(report.pass());
  }
}

TEST_CASE("a sign flip in the s-update direction is caught") {
  Rng rng(601);
  const GarnetInstance inst = generate_garnet(GarnetSpec{8, 3, 2, 0.0}, 23);
  FlippedJacobianBasis bad{make_cosine_basis<double>(8, 3, rng)};
  Eigen::VectorXd s = Eigen::VectorXd::Constant(1, 0.8);
  SoftmaxPolicy<double> policy;
  policy.num_actions = 3;
  policy.actor_features = garnet_actor_features(bad.inner, s, 3);
  policy.theta = Eigen::VectorXd::Zero(policy.actor_features.cols());
  Eigen::VectorXd r(3);
  r << 0.7, -0.4, 0.2;
  const AuditReport report = audit_gradients(inst.mdp, policy, bad, r, s);
  CHECK_FALSE(report.pass());
}

TEST_CASE("a wrong phase table fails the jacobian audit") {
  Rng rng(701);
  WrongPhaseBasis bad{make_cosine_basis<double>(6, 2, rng),
                      make_cosine_basis<double>(6, 2, rng)};
  const double err = abrl::detail::jacobian_fd_error(
      bad,
      [](Rng& r) { return Eigen::VectorXd::Constant(1, r.uniform(0.2, 2.0)); },
      [](Rng& r) { return Eigen::Index(r.uniform_int(6)); }, 20, rng);
  CHECK(err > 1.0);  // normalized error far outside tolerance

  // the same audit accepts the honest basis
  const double good_err = abrl::detail::jacobian_fd_error(
      bad.inner,
      [](Rng& r) { return Eigen::VectorXd::Constant(1, r.uniform(0.2, 2.0)); },
      [](Rng& r) { return Eigen::Index(r.uniform_int(6)); }, 20, rng);
  CHECK(good_err <= 1.0);
}

TEST_CASE("assumption bounds come out finite") {
  Rng rng(801);
  const GarnetInstance inst = generate_garnet(GarnetSpec{6, 2, 2, 0.1}, 29);
  auto basis = make_cosine_basis<double>(6, 2, rng);
  const Eigen::VectorXd s0 = Eigen::VectorXd::Constant(1, 0.5);
  const auto policy = policy_for(inst, basis, s0);
  const auto bounds = measure_assumption_bounds(
      inst.mdp, policy, basis, uniform_box<double>(1, 0.01, 10.0), rng, 25);
  CHECK(std::isfinite(bounds.B_psi));
  CHECK(std::isfinite(bounds.B_phi));
  CHECK(bounds.B_phi <= 1.0 + 1e-12);
  CHECK(std::isfinite(bounds.L_phi));
  CHECK(std::isfinite(bounds.B_g));
  CHECK(std::isfinite(bounds.B_eta));
}

TEST_CASE("validation suite passes end to end" * doctest::timeout(300)) {
  ValidationOptions opts;
  opts.instances = 3;
  opts.jacobian_points = 30;
  const AuditReport report = run_validation(opts);
  CHECK(report.pass());
}

}  // TEST_SUITE
