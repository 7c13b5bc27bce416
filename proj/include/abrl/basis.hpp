#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "abrl/errors.hpp"
#include "abrl/mdp.hpp"
#include "abrl/rng.hpp"

namespace abrl {

// Cosine family over a finite state space:
//   phi_d(x, s) = cos((x / d) s + rho_{x,d}),  d = 1..K_r,
// with a single nonlinear frequency parameter s (K_s = 1) and an N x K_r
// table of fixed random phases. State indices are 0-based in code; the
// formula uses the 1-based value x+1.
template <class Scalar>
struct CosineBasis {
  using State = Eigen::Index;

  MatrixX<Scalar> phases;  // N x K_r

  Eigen::Index num_states() const { return phases.rows(); }
  Eigen::Index num_weights() const { return phases.cols(); }
  Eigen::Index num_params() const { return 1; }
};

template <class Scalar>
CosineBasis<Scalar> make_cosine_basis(Eigen::Index num_states,
                                      Eigen::Index num_weights, Rng& rng) {
  CosineBasis<Scalar> basis;
  basis.phases.resize(num_states, num_weights);
  for (Eigen::Index x = 0; x < num_states; ++x)
    for (Eigen::Index d = 0; d < num_weights; ++d)
      basis.phases(x, d) =
          Scalar(rng.uniform(0.0, 2.0 * 3.14159265358979323846));
  return basis;
}

template <class Scalar>
VectorX<Scalar> features(const CosineBasis<Scalar>& basis,
                         const VectorX<Scalar>& s, Eigen::Index x) {
  if (x < 0 || x >= basis.num_states())
    throw InvalidState("cosine features: state index out of range");
  if (s.size() != 1)
    throw DimensionMismatch("cosine features: expected a single parameter");
  const Scalar xv = Scalar(x + 1);
  VectorX<Scalar> phi(basis.num_weights());
  for (Eigen::Index d = 0; d < basis.num_weights(); ++d)
    phi[d] = std::cos(xv / Scalar(d + 1) * s[0] + basis.phases(x, d));
  return phi;
}

template <class Scalar>
MatrixX<Scalar> feature_jacobian(const CosineBasis<Scalar>& basis,
                                 const VectorX<Scalar>& s, Eigen::Index x) {
  if (x < 0 || x >= basis.num_states())
    throw InvalidState("cosine jacobian: state index out of range");
  if (s.size() != 1)
    throw DimensionMismatch("cosine jacobian: expected a single parameter");
  const Scalar xv = Scalar(x + 1);
  MatrixX<Scalar> jac(basis.num_weights(), 1);
  for (Eigen::Index d = 0; d < basis.num_weights(); ++d) {
    const Scalar freq = xv / Scalar(d + 1);
    jac(d, 0) = -freq * std::sin(freq * s[0] + basis.phases(x, d));
  }
  return jac;
}

// Gaussian radial family over a 2-d (position, velocity) box:
//   phi_i = exp(-(p - cp_i)^2 / wp_i^2 - (v - cv_i)^2 / wv_i^2).
// The parameter vector is laid out as
//   s = [cp(M), cv(M), wp(M), wv(M)],  K_s = 4 M,
// so checkpoints are portable. Widths below the per-axis floor are
// rejected (the box projection keeps iterates above it).
template <class Scalar>
struct RbfBasis {
  using State = Eigen::Matrix<Scalar, 2, 1>;

  Eigen::Index centers = 0;         // M
  Scalar width_floor_p = Scalar(0);
  Scalar width_floor_v = Scalar(0);

  Eigen::Index num_weights() const { return centers; }
  Eigen::Index num_params() const { return 4 * centers; }
};

template <class Scalar>
RbfBasis<Scalar> make_rbf_basis(Eigen::Index centers, Scalar extent_p,
                                Scalar extent_v) {
  RbfBasis<Scalar> basis;
  basis.centers = centers;
  basis.width_floor_p = Scalar(1e-3) * extent_p;
  basis.width_floor_v = Scalar(1e-3) * extent_v;
  return basis;
}

namespace detail {

template <class Scalar>
void check_rbf_params(const RbfBasis<Scalar>& basis, const VectorX<Scalar>& s,
                      const typename RbfBasis<Scalar>::State& x) {
  if (s.size() != basis.num_params())
    throw DimensionMismatch("rbf: parameter vector length");
  if (!x.allFinite()) throw InvalidState("rbf: non-finite state");
  const Eigen::Index m = basis.centers;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (s[2 * m + i] < basis.width_floor_p || s[3 * m + i] < basis.width_floor_v)
      throw WidthUnderflow("rbf: width below floor at center " +
                           std::to_string(i));
  }
}

}  // namespace detail

template <class Scalar>
VectorX<Scalar> features(const RbfBasis<Scalar>& basis,
                         const VectorX<Scalar>& s,
                         const typename RbfBasis<Scalar>::State& x) {
  detail::check_rbf_params(basis, s, x);
  const Eigen::Index m = basis.centers;
  VectorX<Scalar> phi(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Scalar dp = (x[0] - s[i]) / s[2 * m + i];
    const Scalar dv = (x[1] - s[m + i]) / s[3 * m + i];
    phi[i] = std::exp(-dp * dp - dv * dv);
  }
  return phi;
}

template <class Scalar>
MatrixX<Scalar> feature_jacobian(const RbfBasis<Scalar>& basis,
                                 const VectorX<Scalar>& s,
                                 const typename RbfBasis<Scalar>::State& x) {
  detail::check_rbf_params(basis, s, x);
  const Eigen::Index m = basis.centers;
  MatrixX<Scalar> jac = MatrixX<Scalar>::Zero(m, 4 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Scalar wp = s[2 * m + i];
    const Scalar wv = s[3 * m + i];
    const Scalar ep = x[0] - s[i];
    const Scalar ev = x[1] - s[m + i];
    const Scalar phi = std::exp(-ep * ep / (wp * wp) - ev * ev / (wv * wv));
    jac(i, i) = phi * Scalar(2) * ep / (wp * wp);
    jac(i, m + i) = phi * Scalar(2) * ev / (wv * wv);
    jac(i, 2 * m + i) = phi * Scalar(2) * ep * ep / (wp * wp * wp);
    jac(i, 3 * m + i) = phi * Scalar(2) * ev * ev / (wv * wv * wv);
  }
  return jac;
}

// Uniform grid initialization on [lo, hi]^2 with widths equal to the grid
// spacing; per_axis^2 centers.
template <class Scalar>
VectorX<Scalar> rbf_grid_params(Eigen::Index per_axis, Scalar p_lo, Scalar p_hi,
                                Scalar v_lo, Scalar v_hi) {
  const Eigen::Index m = per_axis * per_axis;
  VectorX<Scalar> s(4 * m);
  const Scalar step_p = (p_hi - p_lo) / Scalar(per_axis);
  const Scalar step_v = (v_hi - v_lo) / Scalar(per_axis);
  for (Eigen::Index a = 0; a < per_axis; ++a) {
    for (Eigen::Index b = 0; b < per_axis; ++b) {
      const Eigen::Index i = a * per_axis + b;
      s[i] = p_lo + (Scalar(a) + Scalar(0.5)) * step_p;
      s[m + i] = v_lo + (Scalar(b) + Scalar(0.5)) * step_v;
      s[2 * m + i] = step_p;
      s[3 * m + i] = step_v;
    }
  }
  return s;
}

template <class Scalar>
struct FeatureMatrixReport {
  MatrixX<Scalar> phi;               // N x K_r
  VectorX<Scalar> singular_values;
  Eigen::Index rank = 0;
};

// Stacks features over all states of a finite-state family and verifies
// the columns are linearly independent.
template <class Scalar>
MatrixX<Scalar> feature_matrix(const CosineBasis<Scalar>& basis,
                               const VectorX<Scalar>& s,
                               Eigen::Index num_states) {
  if (num_states != basis.num_states())
    throw DimensionMismatch("feature_matrix: state count");
  MatrixX<Scalar> phi(num_states, basis.num_weights());
  for (Eigen::Index x = 0; x < num_states; ++x)
    phi.row(x) = features(basis, s, x).transpose();
  return phi;
}

template <class Scalar>
FeatureMatrixReport<Scalar> feature_matrix_checked(
    const CosineBasis<Scalar>& basis, const VectorX<Scalar>& s,
    Eigen::Index num_states) {
  FeatureMatrixReport<Scalar> report;
  report.phi = feature_matrix(basis, s, num_states);
  Eigen::BDCSVD<MatrixX<Scalar>> svd(report.phi);
  report.singular_values = svd.singularValues();
  const Scalar tol = Scalar(1e-10) * report.singular_values.maxCoeff();
  report.rank =
      (report.singular_values.array() > tol).template cast<int>().sum();
  if (report.rank < basis.num_weights()) {
    std::string sv = "singular values:";
    for (Eigen::Index i = 0; i < report.singular_values.size(); ++i)
      sv += " " + std::to_string(double(report.singular_values[i]));
    throw RankDeficientBasis("feature_matrix: rank " +
                             std::to_string(report.rank) + " < " +
                             std::to_string(basis.num_weights()) + "; " + sv);
  }
  return report;
}

}  // namespace abrl
