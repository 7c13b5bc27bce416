#pragma once

#include <Eigen/Core>

#include "abrl/mdp.hpp"
#include "abrl/rng.hpp"

namespace abrl {

// Softmax actor over block one-hot features built on the fly from a
// frozen basis copy: xi(x, u) = (0, ..., phi(x, s0), ..., 0). Used for
// continuous-state tasks where a feature table cannot be precomputed.
template <class Scalar, class Basis>
struct BlockSoftmaxActor {
  using State = typename Basis::State;

  Basis basis;           // frozen
  VectorX<Scalar> s0;    // frozen basis parameters
  VectorX<Scalar> theta; // K_r * num_actions
  int num_actions = 0;

  Eigen::Index block_size() const { return basis.num_weights(); }
};

template <class Scalar, class Basis>
BlockSoftmaxActor<Scalar, Basis> make_block_actor(const Basis& basis,
                                                  const VectorX<Scalar>& s0,
                                                  int num_actions) {
  BlockSoftmaxActor<Scalar, Basis> actor{basis, s0,
                                         VectorX<Scalar>::Zero(
                                             basis.num_weights() * num_actions),
                                         num_actions};
  return actor;
}

template <class Scalar, class Basis>
VectorX<Scalar> action_probabilities(
    const BlockSoftmaxActor<Scalar, Basis>& actor,
    const typename Basis::State& x) {
  const VectorX<Scalar> phi = features(actor.basis, actor.s0, x);
  const Eigen::Index k = actor.block_size();
  VectorX<Scalar> logits(actor.num_actions);
  for (int u = 0; u < actor.num_actions; ++u)
    logits[u] = actor.theta.segment(u * k, k).dot(phi);
  logits.array() -= logits.maxCoeff();
  VectorX<Scalar> probs = logits.array().exp();
  probs /= probs.sum();
  return probs;
}

template <class Scalar, class Basis>
VectorX<Scalar> likelihood_ratio(const BlockSoftmaxActor<Scalar, Basis>& actor,
                                 const typename Basis::State& x, int u) {
  const VectorX<Scalar> phi = features(actor.basis, actor.s0, x);
  const VectorX<Scalar> probs = action_probabilities(actor, x);
  const Eigen::Index k = actor.block_size();
  VectorX<Scalar> psi = VectorX<Scalar>::Zero(actor.theta.size());
  for (int v = 0; v < actor.num_actions; ++v)
    psi.segment(v * k, k) = ((v == u ? Scalar(1) : Scalar(0)) - probs[v]) * phi;
  return psi;
}

template <class Scalar>
int sample_action(const SoftmaxPolicy<Scalar>& policy, Rng& rng,
                  Eigen::Index x) {
  const Eigen::VectorXd probs =
      action_probabilities(policy, x).template cast<double>();
  return rng.categorical(probs);
}

template <class Scalar, class Basis>
int sample_action(const BlockSoftmaxActor<Scalar, Basis>& actor, Rng& rng,
                  const typename Basis::State& x) {
  const Eigen::VectorXd probs =
      action_probabilities(actor, x).template cast<double>();
  return rng.categorical(probs);
}

}  // namespace abrl
