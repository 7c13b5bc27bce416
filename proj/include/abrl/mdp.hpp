#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <cstdio>
#include <string>
#include <vector>

#include "abrl/errors.hpp"

namespace abrl {

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Finite MDP with one row-stochastic transition matrix per action and a
// state-dependent reward vector. Exact solvers below assume desk scale
// (N up to ~1e4, dense factorizations).
template <class Scalar>
struct FiniteMdp {
  std::vector<MatrixX<Scalar>> transitions;  // per action, N x N, row x -> y
  VectorX<Scalar> rewards;                   // g, length N

  Eigen::Index num_states() const { return rewards.size(); }
  int num_actions() const { return static_cast<int>(transitions.size()); }
};

template <class Scalar>
void validate(const FiniteMdp<Scalar>& mdp) {
  const Eigen::Index n = mdp.num_states();
  if (n <= 0) throw InvalidState("FiniteMdp: empty state space");
  if (mdp.transitions.empty()) throw InvalidState("FiniteMdp: no actions");
  if (!mdp.rewards.allFinite())
    throw InvalidState("FiniteMdp: non-finite rewards");
  for (const auto& p : mdp.transitions) {
    if (p.rows() != n || p.cols() != n)
      throw DimensionMismatch("FiniteMdp: transition matrix shape");
    if ((p.array() < Scalar(0)).any())
      throw InvalidState("FiniteMdp: negative transition probability");
    for (Eigen::Index x = 0; x < n; ++x) {
      if (std::abs(double(p.row(x).sum() - Scalar(1))) > 1e-12)
        throw InvalidState("FiniteMdp: row " + std::to_string(x) +
                           " not stochastic");
    }
  }
}

// Tabular softmax policy: mu(u|x) ~ exp(theta . xi(x,u)). Actor features
// are stored flat with row index x * num_actions + u.
template <class Scalar>
struct SoftmaxPolicy {
  VectorX<Scalar> theta;            // K_theta
  MatrixX<Scalar> actor_features;   // (N * U) x K_theta
  int num_actions = 0;

  Eigen::Index num_states() const {
    return actor_features.rows() / num_actions;
  }
  auto xi(Eigen::Index x, int u) const {
    return actor_features.row(x * num_actions + u);
  }
};

template <class Scalar>
VectorX<Scalar> action_probabilities(const SoftmaxPolicy<Scalar>& policy,
                                     Eigen::Index x) {
  const int nu = policy.num_actions;
  VectorX<Scalar> logits(nu);
  for (int u = 0; u < nu; ++u) logits[u] = policy.xi(x, u).dot(policy.theta);
  logits.array() -= logits.maxCoeff();
  VectorX<Scalar> probs = logits.array().exp();
  probs /= probs.sum();
  return probs;
}

// psi(x,u) = grad_theta log mu(u|x); closed form for softmax.
template <class Scalar>
VectorX<Scalar> likelihood_ratio(const SoftmaxPolicy<Scalar>& policy,
                                 Eigen::Index x, int u) {
  const VectorX<Scalar> probs = action_probabilities(policy, x);
  VectorX<Scalar> mean = VectorX<Scalar>::Zero(policy.theta.size());
  for (int v = 0; v < policy.num_actions; ++v)
    mean += probs[v] * policy.xi(x, v).transpose();
  return policy.xi(x, u).transpose() - mean;
}

// Chain induced by a policy, solved exactly: stationary distribution,
// average reward, and the differential value anchored at J(x*) = 0.
template <class Scalar>
struct InducedChain {
  MatrixX<Scalar> transition;         // P_theta
  VectorX<Scalar> stationary;         // D
  Scalar average_reward = Scalar(0);  // eta
  VectorX<Scalar> differential_value; // J
  Eigen::Index recurrent_state = 0;   // x*
};

namespace detail {

// Unique-stationary-distribution check. The unit eigenvalue must be simple;
// other modulus-one eigenvalues only indicate periodicity, which leaves the
// stationary distribution unique, so they are accepted.
template <class Scalar>
void check_unique_stationary(const MatrixX<Scalar>& p) {
  Eigen::EigenSolver<MatrixX<Scalar>> es(p, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NonErgodicChain("eigen decomposition failed");
  int at_one = 0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const std::complex<double> lam(double(es.eigenvalues()[i].real()),
                                   double(es.eigenvalues()[i].imag()));
    if (std::abs(lam - std::complex<double>(1.0, 0.0)) < 1e-8) ++at_one;
  }
  if (at_one != 1)
    throw NonErgodicChain("stationary distribution is not unique (" +
                          std::to_string(at_one) +
                          " unit eigenvalues)");
}

template <class Scalar>
void check_conditioning(const MatrixX<Scalar>& m, const char* what) {
  if (m.rows() <= 512) {
    Eigen::BDCSVD<MatrixX<Scalar>> svd(m);
    const Scalar smin = svd.singularValues().minCoeff();
    const Scalar smax = svd.singularValues().maxCoeff();
    if (!(smin > Scalar(0)) || double(smax / smin) > 1e12)
      throw SingularSystem(std::string(what) + ": condition number > 1e12");
  }
}

}  // namespace detail

template <class Scalar>
InducedChain<Scalar> induced_chain(const FiniteMdp<Scalar>& mdp,
                                   const SoftmaxPolicy<Scalar>& policy) {
  const Eigen::Index n = mdp.num_states();
  if (policy.num_actions != mdp.num_actions() || policy.num_states() != n)
    throw DimensionMismatch("induced_chain: policy/mdp shapes disagree");

  InducedChain<Scalar> chain;
  chain.transition = MatrixX<Scalar>::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    const VectorX<Scalar> probs = action_probabilities(policy, x);
    for (int u = 0; u < policy.num_actions; ++u)
      chain.transition.row(x) += probs[u] * mdp.transitions[u].row(x);
  }

  detail::check_unique_stationary(chain.transition);

  // D solves (P^T - I) D = 0 with a normalization row.
  MatrixX<Scalar> lhs = chain.transition.transpose();
  lhs -= MatrixX<Scalar>::Identity(n, n);
  lhs.row(n - 1).setOnes();
  VectorX<Scalar> rhs = VectorX<Scalar>::Zero(n);
  rhs[n - 1] = Scalar(1);
  detail::check_conditioning(lhs, "stationary solve");
  VectorX<Scalar> d = lhs.partialPivLu().solve(rhs);
  if ((d.array() < Scalar(-1e-10)).any())
    throw NonErgodicChain("stationary solve produced negative mass");
  d = d.cwiseMax(Scalar(0));
  d /= d.sum();
  chain.stationary = d;

  chain.average_reward = d.dot(mdp.rewards);

  // anchor at the most-visited state
  d.maxCoeff(&chain.recurrent_state);

  MatrixX<Scalar> bell = MatrixX<Scalar>::Identity(n, n) - chain.transition;
  bell.row(chain.recurrent_state).setZero();
  bell(chain.recurrent_state, chain.recurrent_state) = Scalar(1);
  VectorX<Scalar> brhs =
      mdp.rewards.array() - chain.average_reward;
  brhs[chain.recurrent_state] = Scalar(0);
  detail::check_conditioning(bell, "differential value solve");
  chain.differential_value = bell.partialPivLu().solve(brhs);
  const double resid =
      double((bell * chain.differential_value - brhs).template lpNorm<Eigen::Infinity>());
  if (!(resid < 1e-8 * (1.0 + double(brhs.template lpNorm<Eigen::Infinity>()))))
    throw SingularSystem("differential value solve: residual " +
                         std::to_string(resid));
  return chain;
}

// One application of the average-reward Bellman operator: g - eta + P v.
template <class Scalar, class Derived>
VectorX<Scalar> bellman_apply(const InducedChain<Scalar>& chain,
                              const FiniteMdp<Scalar>& mdp,
                              const Eigen::MatrixBase<Derived>& v) {
  if (v.size() != mdp.num_states())
    throw DimensionMismatch("bellman_apply: value vector length");
  return (mdp.rewards.array() - chain.average_reward).matrix() +
         chain.transition * v;
}

// TD error d(x,y) = g(x) - eta + J(y) - J(x) under the exact value function.
template <class Scalar>
Scalar exact_td(const InducedChain<Scalar>& chain, const FiniteMdp<Scalar>& mdp,
                Eigen::Index x, Eigen::Index y) {
  return mdp.rewards[x] - chain.average_reward +
         chain.differential_value[y] - chain.differential_value[x];
}

// D-weighted projection onto the column span of the basis:
// Pi = Phi (Phi^T D Phi)^-1 Phi^T D.
template <class DerivedPhi, class DerivedD>
auto projection_matrix(const Eigen::MatrixBase<DerivedPhi>& phi,
                       const Eigen::MatrixBase<DerivedD>& stationary) {
  using Scalar = typename DerivedPhi::Scalar;
  if (phi.rows() != stationary.size())
    throw DimensionMismatch("projection_matrix: row count");
  const MatrixX<Scalar> weighted =
      stationary.asDiagonal() * phi.derived();      // D Phi
  const MatrixX<Scalar> gram = phi.derived().transpose() * weighted;
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(gram);
  if (eig.eigenvalues().minCoeff() <= Scalar(1e-10))
    throw RankDeficientBasis(
        "projection_matrix: weighted Gram matrix near-singular (min eig " +
        std::to_string(double(eig.eigenvalues().minCoeff())) + ")");
  const MatrixX<Scalar> inv_gram =
      eig.eigenvectors() *
      eig.eigenvalues().cwiseInverse().asDiagonal() *
      eig.eigenvectors().transpose();
  return MatrixX<Scalar>(phi.derived() * inv_gram * weighted.transpose());
}

// Exact gradient of the average reward (policy-gradient identity
// grad eta = E[psi d]), with d built from the exact differential value.
template <class Scalar>
VectorX<Scalar> exact_policy_gradient(const FiniteMdp<Scalar>& mdp,
                                      const SoftmaxPolicy<Scalar>& policy,
                                      const VectorX<Scalar>& value,
                                      const InducedChain<Scalar>& chain) {
  const Eigen::Index n = mdp.num_states();
  VectorX<Scalar> grad = VectorX<Scalar>::Zero(policy.theta.size());
  for (Eigen::Index x = 0; x < n; ++x) {
    const VectorX<Scalar> probs = action_probabilities(policy, x);
    for (int u = 0; u < policy.num_actions; ++u) {
      // q = E[d(x,y) | x,u]
      const Scalar q = mdp.rewards[x] - chain.average_reward - value[x] +
                       mdp.transitions[u].row(x).dot(value);
      grad += chain.stationary[x] * probs[u] * q *
              likelihood_ratio(policy, x, u);
    }
  }
  return grad;
}

// TD moment statistics under the stationary chain:
//   M = E[phi phi^T], A = E[phi (phi' - phi)^T], b = E[phi (g - eta)],
// so that E[d phi] = A r + b.
template <class Scalar>
struct TdStatistics {
  MatrixX<Scalar> M;
  MatrixX<Scalar> A;
  VectorX<Scalar> b;
};

template <class Scalar, class Derived>
TdStatistics<Scalar> td_statistics(const InducedChain<Scalar>& chain,
                                   const FiniteMdp<Scalar>& mdp,
                                   const Eigen::MatrixBase<Derived>& phi) {
  TdStatistics<Scalar> st;
  const MatrixX<Scalar> weighted = chain.stationary.asDiagonal() * phi.derived();
  st.M = phi.derived().transpose() * weighted;
  st.A = weighted.transpose() *
         (chain.transition * phi.derived() - phi.derived());
  st.b = weighted.transpose() *
         (mdp.rewards.array() - chain.average_reward).matrix();
  return st;
}

template <class Scalar>
struct Objectives {
  Scalar mse;
  Scalar msbe;
  Scalar mspbe;
};

// The three error criteria, each by closed-form matrix algebra. The
// projected Bellman error is evaluated through both of its closed forms
// (D-norm of the projected residual, and the w-form through the TD moment
// statistics); disagreement signals an implementation bug.
template <class Scalar, class Derived>
Objectives<Scalar> exact_objectives(const FiniteMdp<Scalar>& mdp,
                                    const SoftmaxPolicy<Scalar>& policy,
                                    const InducedChain<Scalar>& chain,
                                    const Eigen::MatrixBase<Derived>& phi,
                                    const VectorX<Scalar>& r) {
  (void)policy;
  const auto& d = chain.stationary;
  const VectorX<Scalar> jt = phi.derived() * r;
  const VectorX<Scalar> resid_value = jt - chain.differential_value;
  const VectorX<Scalar> bellman_resid =
      bellman_apply(chain, mdp, jt) - jt;

  Objectives<Scalar> out;
  out.mse = Scalar(0.5) * resid_value.dot(d.asDiagonal() * resid_value);
  out.msbe =
      Scalar(0.5) * bellman_resid.dot(d.asDiagonal() * bellman_resid);

  const TdStatistics<Scalar> st = td_statistics(chain, mdp, phi);
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(st.M);
  if (eig.eigenvalues().minCoeff() <= Scalar(1e-10))
    throw RankDeficientBasis("exact_objectives: E[phi phi^T] near-singular");
  const VectorX<Scalar> edphi = st.A * r + st.b;
  const Scalar w_form = edphi.dot(eig.eigenvectors() *
                                  eig.eigenvalues().cwiseInverse().asDiagonal() *
                                  eig.eigenvectors().transpose() * edphi);

  const MatrixX<Scalar> proj = projection_matrix(phi, d);
  const VectorX<Scalar> proj_resid = proj * bellman_resid;  // Pi(TJ~ - J~)
  const Scalar norm_form = proj_resid.dot(d.asDiagonal() * proj_resid);

  if (std::abs(double(norm_form - w_form)) >
      1e-9 * (1.0 + std::abs(double(w_form)))) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "exact_objectives: MSPBE forms disagree (norm %.17g vs w %.17g)",
                  double(norm_form), double(w_form));
    throw IdentityMismatch(msg);
  }
  out.mspbe = w_form;
  return out;
}

// Exact expected squared TD error 0.5 E[d^2] over the stationary pair
// (x, y); this is the quantity the Bellman-error learner descends (it
// differs from the D-norm Bellman residual by the conditional variance
// of d given x).
template <class Scalar, class Derived>
Scalar exact_squared_td(const InducedChain<Scalar>& chain,
                        const FiniteMdp<Scalar>& mdp,
                        const Eigen::MatrixBase<Derived>& phi,
                        const VectorX<Scalar>& r) {
  const Eigen::Index n = mdp.num_states();
  const VectorX<Scalar> jt = phi.derived() * r;
  Scalar acc = Scalar(0);
  for (Eigen::Index x = 0; x < n; ++x) {
    const Scalar base = mdp.rewards[x] - chain.average_reward - jt[x];
    for (Eigen::Index y = 0; y < n; ++y) {
      const Scalar p = chain.transition(x, y);
      if (p == Scalar(0)) continue;
      const Scalar d = base + jt[y];
      acc += chain.stationary[x] * p * d * d;
    }
  }
  return Scalar(0.5) * acc;
}

}  // namespace abrl
