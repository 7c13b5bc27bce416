#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "abrl/garnet.hpp"
#include "abrl/mountain_car.hpp"
#include "abrl/oracle.hpp"
#include "abrl/schedule.hpp"

namespace abrl {

struct ValidationOptions {
  std::uint64_t seed = 2024;
  int instances = 5;        // fresh Garnet instances per section
  int jacobian_points = 100;
};

namespace detail {

// Normalized Jacobian error: a point passes when the absolute error is
// within 1e-7 or the relative error within 1e-6; the reported value is
// the worst min(abs/1e-7, rel/1e-6) over all points (pass iff <= 1).
template <class Basis, class DrawS, class DrawX>
double jacobian_fd_error(const Basis& basis, DrawS&& draw_s, DrawX&& draw_x,
                         int points, Rng& rng) {
  double worst = 0.0;
  const double h = 1e-6;
  for (int it = 0; it < points; ++it) {
    const Eigen::VectorXd s = draw_s(rng);
    const auto x = draw_x(rng);
    const Eigen::MatrixXd jac = feature_jacobian(basis, s, x);
    for (Eigen::Index i = 0; i < basis.num_params(); ++i) {
      Eigen::VectorXd sp = s, sm = s;
      sp[i] += h;
      sm[i] -= h;
      const Eigen::VectorXd fd =
          (features(basis, sp, x) - features(basis, sm, x)) / (2 * h);
      for (Eigen::Index d = 0; d < basis.num_weights(); ++d) {
        const double abs_err = std::abs(fd[d] - jac(d, i));
        const double rel_err = abs_err / std::max(std::abs(jac(d, i)), 1e-12);
        worst = std::max(worst, std::min(abs_err / 1e-7, rel_err / 1e-6));
      }
    }
  }
  return worst;
}

}  // namespace detail

// The full audit program over freshly generated small instances: basis
// Jacobians against finite differences, chain solver invariants, the
// policy-gradient identity, projected-Bellman-error identities, TD fixed
// points, the expected-update-direction audits, and the default step
// schedule. Report-only entries never fail the run.
inline AuditReport run_validation(const ValidationOptions& opts = {}) {
  AuditReport rep;
  Rng rng(opts.seed);
  auto push = [&](const std::string& name, double value, double tol,
                  bool asserted, const std::string& note = "") {
    AuditEntry e{name, value, tol, asserted, true, note};
    if (asserted) e.pass = value <= tol;
    rep.entries.push_back(e);
  };

  {
    const ScheduleReport sr = validate_schedule(StepSchedule<double>::defaults());
    push("default step schedule", sr.pass ? 0.0 : 1.0, 0.5, true);
  }

  {
    CosineBasis<double> basis = make_cosine_basis<double>(10, 4, rng);
    const double err = detail::jacobian_fd_error(
        basis,
        [](Rng& r) { return Eigen::VectorXd::Constant(1, r.uniform(0.05, 5.0)); },
        [](Rng& r) { return Eigen::Index(r.uniform_int(10)); },
        opts.jacobian_points, rng);
    push("cosine jacobian vs FD (normalized)", err, 1.0, true);
  }
  {
    MountainCarParams car;
    RbfBasis<double> basis =
        make_rbf_basis<double>(9, car.p_max - car.p_min, 2 * car.v_max);
    const Eigen::VectorXd grid =
        rbf_grid_params<double>(3, car.p_min, car.p_max, -car.v_max, car.v_max);
    const double err = detail::jacobian_fd_error(
        basis,
        [&](Rng& r) {
          Eigen::VectorXd s = grid;
          for (Eigen::Index i = 0; i < s.size(); ++i)
            s[i] *= 1.0 + 0.2 * (r.uniform01() - 0.5);
          return s;
        },
        [&](Rng& r) {
          return RbfBasis<double>::State(r.uniform(car.p_min, car.p_max),
                                         r.uniform(-car.v_max, car.v_max));
        },
        opts.jacobian_points, rng);
    push("rbf jacobian vs FD (normalized)", err, 1.0, true);
  }

  double worst_stationarity = 0, worst_bellman = 0, worst_td_mean = 0;
  double worst_idem = 0, worst_orth = 0, worst_lemma1 = 0, worst_fp = 0;
  double worst_abbe_r = 0, worst_abbe_s = 0, worst_abpbe_r = 0,
         worst_abpbe_s = 0;
  double worst_abtd_info = 0;
  bool mspbe_identity_ok = true;
  double bound_max = 0;

  for (int it = 0; it < opts.instances; ++it) {
    const int n = 5 + rng.uniform_int(7);
    const int nu = 2 + rng.uniform_int(3);
    const int nb = 2 + rng.uniform_int(std::max(1, n - 2));
    GarnetInstance inst = generate_garnet(
        GarnetSpec{n, nu, std::min(nb, n), 0.1}, rng.raw());

    const int k_r = 2 + rng.uniform_int(2);
    CosineBasis<double> basis = make_cosine_basis<double>(n, k_r, rng);
    SoftmaxPolicy<double> policy;
    policy.num_actions = nu;
    Eigen::VectorXd s = Eigen::VectorXd::Constant(1, rng.uniform(0.3, 2.0));
    policy.actor_features = garnet_actor_features(basis, s, nu);
    policy.theta = Eigen::VectorXd::Zero(policy.actor_features.cols());
    for (Eigen::Index i = 0; i < policy.theta.size(); ++i)
      policy.theta[i] = rng.uniform(-1.0, 1.0);

    const InducedChain<double> chain = induced_chain(inst.mdp, policy);
    worst_stationarity = std::max(
        worst_stationarity,
        (chain.stationary.transpose() * chain.transition -
         chain.stationary.transpose())
            .template lpNorm<Eigen::Infinity>());
    worst_bellman = std::max(
        worst_bellman,
        (bellman_apply(chain, inst.mdp, chain.differential_value) -
         chain.differential_value)
            .template lpNorm<Eigen::Infinity>());

    double td_mean = 0;
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y)
        td_mean += chain.stationary[x] * chain.transition(x, y) *
                   exact_td(chain, inst.mdp, x, y);
    worst_td_mean = std::max(worst_td_mean, std::abs(td_mean));

    const Eigen::MatrixXd phi = feature_matrix(basis, s, n);
    const Eigen::MatrixXd proj = projection_matrix(phi, chain.stationary);
    worst_idem = std::max(worst_idem, (proj * proj - proj).norm());
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    worst_orth = std::max(
        worst_orth, ((v - proj * v).transpose() *
                     chain.stationary.asDiagonal() * phi)
                        .norm());

    Eigen::VectorXd r(k_r);
    for (int i = 0; i < k_r; ++i) r[i] = rng.normal();
    try {
      (void)exact_objectives(inst.mdp, policy, chain, phi, r);
    } catch (const IdentityMismatch&) {
      mspbe_identity_ok = false;
    }

    worst_lemma1 = std::max(worst_lemma1, lemma1_check(inst.mdp, policy).value);

    const Eigen::VectorXd r_star = td_fixed_point(chain, inst.mdp, phi);
    const TdStatistics<double> st = td_statistics(chain, inst.mdp, phi);
    worst_fp = std::max(
        worst_fp,
        (st.A * r_star + st.b).template lpNorm<Eigen::Infinity>());

    const AuditReport audits = audit_gradients(inst.mdp, policy, basis, r, s);
    for (const auto& e : audits.entries) {
      if (e.name.find("abbe r-direction") != std::string::npos)
        worst_abbe_r = std::max(worst_abbe_r, e.value);
      else if (e.name.find("abbe s-direction vs FD(E[d^2]") != std::string::npos)
        worst_abbe_s = std::max(worst_abbe_s, e.value);
      else if (e.name.find("abpbe r-direction") != std::string::npos)
        worst_abpbe_r = std::max(worst_abpbe_r, e.value);
      else if (e.name.find("abpbe s-direction") != std::string::npos)
        worst_abpbe_s = std::max(worst_abpbe_s, e.value);
      else if (e.name.find("abtd s-direction") != std::string::npos)
        worst_abtd_info = std::max(worst_abtd_info, e.value);
    }

    const AssumptionBounds bounds = measure_assumption_bounds(
        inst.mdp, policy, basis, uniform_box<double>(1, 0.01, 10.0), rng, 20);
    bound_max = std::max({bound_max, bounds.B_psi, bounds.B_phi, bounds.L_phi,
                          bounds.B_g, bounds.B_eta});
  }

  push("stationarity residual", worst_stationarity, 1e-10, true);
  push("Bellman fixed-point residual", worst_bellman, 1e-10, true);
  push("TD zero-mean residual", worst_td_mean, 1e-10, true);
  push("projection idempotence", worst_idem, 1e-9, true);
  push("projection D-orthogonality", worst_orth, 1e-9, true);
  push("MSPBE two-form identity", mspbe_identity_ok ? 0.0 : 1.0, 0.5, true,
       "checked inside exact_objectives at 1e-9");
  push("policy gradient vs FD(eta)", worst_lemma1, 1e-4, true);
  push("TD fixed point residual E[d phi]", worst_fp, 1e-10, true);
  push("abbe r-direction vs FD(E[d^2]/2)", worst_abbe_r, 1e-4, true);
  push("abbe s-direction vs FD(E[d^2]/2)", worst_abbe_s, 1e-4, true);
  push("abpbe r-direction vs FD(MSPBE)", worst_abpbe_r, 1e-2, true);
  push("abpbe s-direction vs FD(MSPBE)", worst_abpbe_s, 1e-2, true);
  push("abtd s-direction vs FD(MSE)", worst_abtd_info, 0.0, false,
       "bootstrapped direction; informational");
  push("assumption bounds finite", std::isfinite(bound_max) ? 0.0 : 1.0, 0.5,
       true);

  return rep;
}

}  // namespace abrl
