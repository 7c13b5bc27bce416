#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "abrl/basis.hpp"
#include "abrl/mountain_car.hpp"
#include "abrl/rng.hpp"

using namespace abrl;

TEST_SUITE("basis") {

TEST_CASE("cosine family") {
  Rng rng(5);
  auto basis = make_cosine_basis<double>(6, 3, rng);

  SUBCASE("zero frequency leaves only the phases") {
    const Eigen::VectorXd s = Eigen::VectorXd::Zero(1);
    for (Eigen::Index x = 0; x < 6; ++x) {
      const Eigen::VectorXd phi = features(basis, s, x);
      for (Eigen::Index d = 0; d < 3; ++d)
        CHECK(phi[d] == doctest::Approx(std::cos(basis.phases(x, d))));
    }
  }
  SUBCASE("direct evaluation with zero phases") {
    CosineBasis<double> plain;
    plain.phases = Eigen::MatrixXd::Zero(4, 2);
    const Eigen::VectorXd s = Eigen::VectorXd::Constant(1, 1.0);
    // 0-based state 2 is the formula's x = 3
    const Eigen::VectorXd phi = features(plain, s, 2);
    CHECK(phi[0] == doctest::Approx(std::cos(3.0)));
    CHECK(phi[1] == doctest::Approx(std::cos(1.5)));
  }
  SUBCASE("zero frequency and zero phases kill the jacobian") {
    CosineBasis<double> plain;
    plain.phases = Eigen::MatrixXd::Zero(4, 2);
    const Eigen::VectorXd s = Eigen::VectorXd::Zero(1);
    const Eigen::MatrixXd jac = feature_jacobian(plain, s, 3);
    CHECK(jac.norm() == 0.0);
  }
  SUBCASE("state index is validated") {
    const Eigen::VectorXd s = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(features(basis, s, 6), InvalidState);
    CHECK_THROWS_AS(features(basis, s, -1), InvalidState);
  }
}

TEST_CASE("rbf family") {
  MountainCarParams car;
  auto basis = make_rbf_basis<double>(4, car.p_max - car.p_min, 2 * car.v_max);
  const Eigen::VectorXd grid =
      rbf_grid_params<double>(2, car.p_min, car.p_max, -car.v_max, car.v_max);

  SUBCASE("unit response at a center") {
    const RbfBasis<double>::State at_center(grid[1], grid[4 + 1]);
    const Eigen::VectorXd phi = features(basis, grid, at_center);
    CHECK(phi[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("center derivative vanishes at the peak") {
    const RbfBasis<double>::State at_center(grid[0], grid[4]);
    const Eigen::MatrixXd jac = feature_jacobian(basis, grid, at_center);
    CHECK(jac(0, 0) == doctest::Approx(0.0));      // d phi_0 / d cp_0
    CHECK(jac(0, 4) == doctest::Approx(0.0));      // d phi_0 / d cv_0
  }
  SUBCASE("widths below the floor are rejected") {
    Eigen::VectorXd s = grid;
    s[2 * 4] = basis.width_floor_p / 2;
    const RbfBasis<double>::State x(0.0, 0.0);
    CHECK_THROWS_AS(features(basis, s, x), WidthUnderflow);
    CHECK_THROWS_AS(feature_jacobian(basis, s, x), WidthUnderflow);
  }
}

TEST_CASE("analytic jacobians match finite differences") {
  Rng rng(101);
  SUBCASE("cosine") {
    auto basis = make_cosine_basis<double>(8, 3, rng);
    for (int it = 0; it < 100; ++it) {
      const Eigen::VectorXd s =
          Eigen::VectorXd::Constant(1, rng.uniform(0.05, 4.0));
      const Eigen::Index x = rng.uniform_int(8);
      const Eigen::MatrixXd jac = feature_jacobian(basis, s, x);
      const double h = 1e-6;
      Eigen::VectorXd sp = s, sm = s;
      sp[0] += h;
      sm[0] -= h;
      const Eigen::VectorXd fd =
          (features(basis, sp, x) - features(basis, sm, x)) / (2 * h);
      for (Eigen::Index d = 0; d < 3; ++d) {
        const double err = std::abs(fd[d] - jac(d, 0));
        CHECK(err / std::max(std::abs(jac(d, 0)), 1.0) < 1e-6);
      }
    }
  }
  SUBCASE("rbf") {
    MountainCarParams car;
    auto basis = make_rbf_basis<double>(4, car.p_max - car.p_min, 2 * car.v_max);
    const Eigen::VectorXd grid =
        rbf_grid_params<double>(2, car.p_min, car.p_max, -car.v_max, car.v_max);
    for (int it = 0; it < 100; ++it) {
      Eigen::VectorXd s = grid;
      for (Eigen::Index i = 0; i < s.size(); ++i)
        s[i] *= 1.0 + 0.3 * (rng.uniform01() - 0.5);
      const RbfBasis<double>::State x(rng.uniform(car.p_min, car.p_max),
                                      rng.uniform(-car.v_max, car.v_max));
      const Eigen::MatrixXd jac = feature_jacobian(basis, s, x);
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < s.size(); ++i) {
        Eigen::VectorXd sp = s, sm = s;
        sp[i] += h;
        sm[i] -= h;
        const Eigen::VectorXd fd =
            (features(basis, sp, x) - features(basis, sm, x)) / (2 * h);
        for (Eigen::Index d = 0; d < 4; ++d) {
          const double err = std::abs(fd[d] - jac(d, i));
          const bool ok =
              err < 1e-7 || err / std::max(std::abs(jac(d, i)), 1e-12) < 1e-6;
          CHECK(ok);
        }
      }
    }
  }
}

TEST_CASE("features stay bounded by one") {
  Rng rng(7);
  auto cosine = make_cosine_basis<double>(12, 4, rng);
  MountainCarParams car;
  auto rbf = make_rbf_basis<double>(9, car.p_max - car.p_min, 2 * car.v_max);
  const Eigen::VectorXd grid =
      rbf_grid_params<double>(3, car.p_min, car.p_max, -car.v_max, car.v_max);
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd s =
        Eigen::VectorXd::Constant(1, rng.uniform(0.01, 10.0));
    CHECK(features(cosine, s, rng.uniform_int(12)).lpNorm<Eigen::Infinity>() <=
          1.0 + 1e-12);
    Eigen::VectorXd sr = grid;
    for (Eigen::Index i = 0; i < sr.size(); ++i)
      sr[i] *= 1.0 + 0.5 * (rng.uniform01() - 0.5);
    const RbfBasis<double>::State x(rng.uniform(car.p_min, car.p_max),
                                    rng.uniform(-car.v_max, car.v_max));
    CHECK(features(rbf, sr, x).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-12);
  }
}

TEST_CASE("lipschitz smoke: feature shift bounded by parameter shift") {
  Rng rng(13);
  auto basis = make_cosine_basis<double>(10, 3, rng);
  double worst_ratio = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double s1 = rng.uniform(0.05, 5.0);
    const double s2 = s1 + rng.uniform(-0.1, 0.1);
    const Eigen::Index x = rng.uniform_int(10);
    const Eigen::VectorXd sv1 = Eigen::VectorXd::Constant(1, s1);
    const Eigen::VectorXd sv2 = Eigen::VectorXd::Constant(1, s2);
    const Eigen::VectorXd phi1 = features(basis, sv1, x);
    const Eigen::VectorXd phi2 = features(basis, sv2, x);
    if (std::abs(s1 - s2) > 1e-12)
      worst_ratio =
          std::max(worst_ratio, (phi1 - phi2).norm() / std::abs(s1 - s2));
  }
  CHECK(std::isfinite(worst_ratio));
  CHECK(worst_ratio > 0.0);
  // frequencies are bounded by the largest state index
  CHECK(worst_ratio <= 10.0 * std::sqrt(3.0) + 1e-9);
}

TEST_CASE("feature_matrix rank report") {
  Rng rng(29);
  SUBCASE("square generic case has full rank") {
    auto basis = make_cosine_basis<double>(3, 3, rng);
    const Eigen::VectorXd s = Eigen::VectorXd::Constant(1, 0.8);
    const auto report = feature_matrix_checked(basis, s, 3);
    CHECK(report.rank == 3);
  }
  SUBCASE("constant columns collapse the rank") {
    CosineBasis<double> degenerate;
    degenerate.phases = Eigen::MatrixXd::Constant(4, 2, 1.0);
    const Eigen::VectorXd s = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(feature_matrix_checked(degenerate, s, 4),
                    RankDeficientBasis);
  }
  SUBCASE("garnet-sized case confirmed by the SVD oracle") {
    auto basis = make_cosine_basis<double>(30, 4, rng);
    const Eigen::VectorXd s = Eigen::VectorXd::Constant(1, 0.5);
    const auto report = feature_matrix_checked(basis, s, 30);
    CHECK(report.rank == 4);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(report.phi);
    CHECK(svd.singularValues().minCoeff() > 1e-6);
  }
}

}  // TEST_SUITE
