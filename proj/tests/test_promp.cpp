#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "promp.hpp"
#include "rng.hpp"

using namespace mlcur;
using namespace mlcur::promp;

namespace {

Trajectory make_traj(const Mat& states) {
  Trajectory t;
  t.states = states;
  t.times = Vec::LinSpaced(states.rows(), 0.0, 1.0);
  return t;
}

Mat oracle_basis(const BasisConfig& cfg, const Vec& times) {
  // element-wise recomputation of the Gaussian formula, normalized per row
  Mat phi(times.size(), cfg.n_basis);
  for (int t = 0; t < times.size(); ++t) {
    double sum = 0.0;
    for (int k = 0; k < cfg.n_basis; ++k) {
      phi(t, k) = std::exp(-std::pow(times[t] - cfg.centers[k], 2) /
                           (2.0 * cfg.bandwidth * cfg.bandwidth));
      sum += phi(t, k);
    }
    for (int k = 0; k < cfg.n_basis; ++k) phi(t, k) /= sum;
  }
  return phi;
}

}  // namespace

TEST_CASE("single basis normalizes to a column of ones") {
  BasisConfig cfg;
  cfg.n_basis = 1;
  cfg.centers = Vec::Constant(1, 0.5);
  cfg.bandwidth = 0.3;
  const Vec times = Vec::LinSpaced(7, 0.0, 1.0);
  const Mat phi = build_basis(cfg, times);
  CHECK(phi.rows() == 7);
  CHECK(phi.cols() == 1);
  CHECK((phi.array() - 1.0).abs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("two symmetric bases split the midpoint evenly") {
  BasisConfig cfg;
  cfg.n_basis = 2;
  cfg.centers = Vec(2);
  cfg.centers << 0.0, 1.0;
  cfg.bandwidth = 0.5;
  Vec times(1);
  times << 0.5;
  const Mat phi = build_basis(cfg, times);
  CHECK(phi(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(phi(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("basis matches the element-wise oracle") {
  BasisConfig cfg = BasisConfig::make(5, 0.15);
  const Vec times = Vec::LinSpaced(20, 0.0, 1.0);
  const Mat phi = build_basis(cfg, times);
  const Mat ref = oracle_basis(cfg, times);
  CHECK((phi - ref).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("basis input validation") {
  BasisConfig cfg = BasisConfig::make(3);
  CHECK_THROWS_AS(build_basis(cfg, Vec()), Error);
  Vec bad(2);
  bad << 0.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(build_basis(cfg, bad), Error);
  BasisConfig decreasing = cfg;
  std::swap(decreasing.centers[0], decreasing.centers[1]);
  CHECK_THROWS_AS(build_basis(decreasing, Vec::LinSpaced(4, 0, 1)), Error);
}

TEST_CASE("zero trajectory projects to zero weights") {
  BasisConfig cfg = BasisConfig::make(4);
  const auto traj = make_traj(Mat::Zero(12, 3));
  const Vec omega = project_trajectory(traj, cfg);
  CHECK(omega.size() == 12);
  CHECK(omega.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("projection recovers generating weights exactly without ridge") {
  BasisConfig cfg = BasisConfig::make(6);
  cfg.ridge = 0.0;
  Rng rng(7);
  Vec omega_true(2 * cfg.n_basis);
  for (int i = 0; i < omega_true.size(); ++i) omega_true[i] = rng.gaussian();
  const Vec times = Vec::LinSpaced(25, 0.0, 1.0);
  Trajectory traj;
  traj.states = reconstruct(omega_true, cfg, times);
  traj.times = times;
  const Vec omega = project_trajectory(traj, cfg);
  CHECK((omega - omega_true).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("3-point 2-basis ridge projection matches the hand-solved system") {
  BasisConfig cfg;
  cfg.n_basis = 2;
  cfg.centers = Vec(2);
  cfg.centers << 0.0, 1.0;
  cfg.bandwidth = 0.5;
  cfg.ridge = 0.1;
  Trajectory traj;
  traj.states = Mat(3, 1);
  traj.states << 1.0, 2.0, 0.5;
  traj.times = Vec::LinSpaced(3, 0.0, 1.0);

  // independent solve of the 2x2 normal equations by Cramer's rule
  const Mat phi = oracle_basis(cfg, traj.times);
  double m00 = cfg.ridge, m01 = 0.0, m11 = cfg.ridge, y0 = 0.0, y1 = 0.0;
  for (int t = 0; t < 3; ++t) {
    m00 += phi(t, 0) * phi(t, 0);
    m01 += phi(t, 0) * phi(t, 1);
    m11 += phi(t, 1) * phi(t, 1);
    y0 += phi(t, 0) * traj.states(t, 0);
    y1 += phi(t, 1) * traj.states(t, 0);
  }
  const double det = m00 * m11 - m01 * m01;
  const double w0 = (y0 * m11 - m01 * y1) / det;
  const double w1 = (m00 * y1 - y0 * m01) / det;

  const Vec omega = project_trajectory(traj, cfg);
  CHECK(omega[0] == doctest::Approx(w0).epsilon(1e-10));
  CHECK(omega[1] == doctest::Approx(w1).epsilon(1e-10));
  // frozen values from the oracle above
  CHECK(omega[0] == doctest::Approx(1.3737372867162805).epsilon(1e-9));
  CHECK(omega[1] == doctest::Approx(0.81376271328371974).epsilon(1e-9));
}

TEST_CASE("singular normal matrix without ridge is an error") {
  BasisConfig cfg = BasisConfig::make(8);
  cfg.ridge = 0.0;
  const auto traj = make_traj(Mat::Ones(3, 1));  // T < n_basis
  CHECK_THROWS_WITH_AS(project_trajectory(traj, cfg),
                       doctest::Contains("ridge"), Error);
}

TEST_CASE("zero weights reconstruct to a zero trajectory") {
  BasisConfig cfg = BasisConfig::make(5);
  const Mat states = reconstruct(Vec::Zero(10), cfg, Vec::LinSpaced(9, 0, 1));
  CHECK(states.rows() == 9);
  CHECK(states.cols() == 2);
  CHECK(states.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("single constant basis reconstructs a constant trajectory") {
  BasisConfig cfg;
  cfg.n_basis = 1;
  cfg.centers = Vec::Constant(1, 0.5);
  cfg.bandwidth = 0.4;
  Vec omega(1);
  omega << 3.25;
  const Mat states = reconstruct(omega, cfg, Vec::LinSpaced(11, 0, 1));
  CHECK((states.array() - 3.25).abs().maxCoeff() < 1e-14);
}

TEST_CASE("smooth sine round-trip stays within 1% of amplitude") {
  BasisConfig cfg = BasisConfig::make(10);
  cfg.ridge = 1e-6;
  const Vec times = Vec::LinSpaced(60, 0.0, 1.0);
  Mat states(60, 1);
  for (int t = 0; t < 60; ++t) states(t, 0) = 2.0 * std::sin(2.0 * M_PI * times[t]);
  Trajectory traj;
  traj.states = states;
  traj.times = times;
  const Mat rec = reconstruct(project_trajectory(traj, cfg), cfg, times);
  const double rmse = std::sqrt((rec - states).squaredNorm() / states.size());
  CHECK(rmse < 1e-2 * 2.0);
}

TEST_CASE("reconstruct rejects mismatched omega length") {
  BasisConfig cfg = BasisConfig::make(4);
  CHECK_THROWS_AS(reconstruct(Vec::Ones(6), cfg, Vec::LinSpaced(4, 0, 1)), Error);
}

TEST_CASE("round-trip is exact on the basis range when ridge is zero") {
  BasisConfig cfg = BasisConfig::make(7);
  cfg.ridge = 0.0;
  Rng rng(11);
  const Vec times = Vec::LinSpaced(30, 0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Vec omega(cfg.n_basis);
    for (int i = 0; i < omega.size(); ++i) omega[i] = rng.gaussian();
    Trajectory traj;
    traj.states = reconstruct(omega, cfg, times);
    traj.times = times;
    const Mat again = reconstruct(project_trajectory(traj, cfg), cfg, times);
    CHECK((again - traj.states).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("projection is linear in the trajectory") {
  BasisConfig cfg = BasisConfig::make(6);
  Rng rng(3);
  const Vec times = Vec::LinSpaced(18, 0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Mat s1(18, 2), s2(18, 2);
    for (int t = 0; t < 18; ++t)
      for (int j = 0; j < 2; ++j) {
        s1(t, j) = rng.gaussian();
        s2(t, j) = rng.gaussian();
      }
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    Trajectory t1, t2, tc;
    t1.states = s1;
    t2.states = s2;
    tc.states = a * s1 + b * s2;
    t1.times = t2.times = tc.times = times;
    const Vec lhs = project_trajectory(tc, cfg);
    const Vec rhs = a * project_trajectory(t1, cfg) + b * project_trajectory(t2, cfg);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("weight norm is non-increasing in the ridge") {
  Rng rng(5);
  const Vec times = Vec::LinSpaced(22, 0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    Mat s(22, 1);
    for (int t = 0; t < 22; ++t) s(t, 0) = rng.gaussian();
    Trajectory traj;
    traj.states = s;
    traj.times = times;
    double prev = std::numeric_limits<double>::infinity();
    for (const double ridge : {0.0, 1e-4, 1e-2, 1.0, 100.0}) {
      BasisConfig cfg = BasisConfig::make(8);
      cfg.ridge = ridge;
      const double norm = project_trajectory(traj, cfg).norm();
      CHECK(norm <= prev + 1e-9);
      prev = norm;
    }
  }
}
