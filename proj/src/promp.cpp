#include "promp.hpp"

#include <cmath>

namespace mlcur::promp {

Vec BasisConfig::default_centers(int n_basis, double pad) {
  require(n_basis >= 1, "n_basis must be >= 1");
  Vec c(n_basis);
  if (n_basis == 1) {
    c[0] = 0.5;
    return c;
  }
  const double lo = -pad;
  const double hi = 1.0 + pad;
  for (int k = 0; k < n_basis; ++k)
    c[k] = lo + (hi - lo) * static_cast<double>(k) / (n_basis - 1);
  return c;
}

BasisConfig BasisConfig::make(int n_basis, double bandwidth, double ridge) {
  BasisConfig cfg;
  cfg.n_basis = n_basis;
  cfg.centers = default_centers(n_basis);
  if (bandwidth <= 0.0) {
    // slightly wider than the center spacing
    cfg.bandwidth = n_basis > 1 ? 1.1 * (cfg.centers[1] - cfg.centers[0]) : 0.5;
  } else {
    cfg.bandwidth = bandwidth;
  }
  cfg.ridge = ridge;
  cfg.validate();
  return cfg;
}

void BasisConfig::validate() const {
  require(n_basis >= 1, "basis: n_basis must be >= 1");
  require(centers.size() == n_basis, "basis: centers size != n_basis");
  require(bandwidth > 0.0 && std::isfinite(bandwidth), "basis: bandwidth must be > 0");
  require(ridge >= 0.0 && std::isfinite(ridge), "basis: ridge must be >= 0");
  for (int k = 0; k < n_basis; ++k) {
    require(std::isfinite(centers[k]), "basis: non-finite center");
    // the outermost centers may sit slightly outside [0,1]
    require(centers[k] > -0.5 && centers[k] < 1.5, "basis: center far outside [0,1]");
    if (k > 0) require(centers[k] > centers[k - 1], "basis: centers must be strictly increasing");
  }
}

void Trajectory::validate() const {
  require(length() >= 2, "trajectory: needs at least 2 samples");
  require(times.size() == length(), "trajectory: times/states length mismatch");
  require(states.allFinite() && times.allFinite(), "trajectory: non-finite entries");
  require(std::abs(times[0]) < 1e-12, "trajectory: times[0] must be 0");
  require(std::abs(times[times.size() - 1] - 1.0) < 1e-12, "trajectory: times must end at 1");
  for (int t = 1; t < times.size(); ++t)
    require(times[t] > times[t - 1], "trajectory: times must be strictly increasing");
}

Mat build_basis(const BasisConfig& config, const Vec& times) {
  config.validate();
  require(times.size() > 0, "build_basis: empty times");
  require(times.allFinite(), "build_basis: non-finite times");

  const double inv2bw2 = 1.0 / (2.0 * config.bandwidth * config.bandwidth);
  Mat phi(times.size(), config.n_basis);
  for (int t = 0; t < times.size(); ++t) {
    require(times[t] >= -1e-12 && times[t] <= 1.0 + 1e-12, "build_basis: time outside [0,1]");
    for (int k = 0; k < config.n_basis; ++k) {
      const double d = times[t] - config.centers[k];
      phi(t, k) = std::exp(-d * d * inv2bw2);
    }
    const double s = phi.row(t).sum();
    require(s > 0.0, "build_basis: basis row underflowed to zero");
    phi.row(t) /= s;
  }
  return phi;
}

Vec project_trajectory(const Trajectory& traj, const BasisConfig& config) {
  traj.validate();
  const Mat phi = build_basis(config, traj.times);
  const int n = config.n_basis;
  const int d = traj.state_dim();

  Mat normal = phi.transpose() * phi;
  normal.diagonal().array() += config.ridge;

  Eigen::LDLT<Mat> ldlt(normal);
  const double dmin = ldlt.vectorD().minCoeff();
  const double dmax = ldlt.vectorD().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(dmin > dmax * 1e-13)) {
    fail("project_trajectory: singular normal matrix (T < n_basis or degenerate "
         "basis); use a positive ridge");
  }

  Vec omega(n * d);
  for (int j = 0; j < d; ++j)
    omega.segment(j * n, n) = ldlt.solve(phi.transpose() * traj.states.col(j));
  return omega;
}

Mat reconstruct(const Vec& omega, const BasisConfig& config, const Vec& times) {
  const int n = config.n_basis;
  require(omega.size() > 0 && omega.size() % n == 0,
          "reconstruct: omega length not divisible by n_basis");
  require(omega.allFinite(), "reconstruct: non-finite omega");
  const int d = static_cast<int>(omega.size()) / n;
  const Mat phi = build_basis(config, times);
  Mat states(times.size(), d);
  for (int j = 0; j < d; ++j) states.col(j) = phi * omega.segment(j * n, n);
  return states;
}

}  // namespace mlcur::promp
