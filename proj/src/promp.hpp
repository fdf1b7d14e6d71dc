#pragma once

#include "types.hpp"

namespace mlcur::promp {

/// Radial-basis layout used for the trajectory encoding. Centers live on the
/// phase axis; the default layout places the outermost two slightly outside
/// [0,1] so the ends of a trajectory are not underfit.
struct BasisConfig {
  int n_basis = 10;
  Vec centers;        // strictly increasing phase locations
  double bandwidth = 0.12;
  double ridge = 1e-6;

  static Vec default_centers(int n_basis, double pad = 0.1);
  static BasisConfig make(int n_basis, double bandwidth = -1.0, double ridge = 1e-6);

  void validate() const;
};

/// Recorded demonstration: T states over a monotone phase grid in [0,1].
struct Trajectory {
  Mat states;  // T x d_s
  Vec times;   // length T, times[0] = 0, times[T-1] = 1

  int length() const { return static_cast<int>(states.rows()); }
  int state_dim() const { return static_cast<int>(states.cols()); }
  void validate() const;
};

/// Phi[t,k] = exp(-(times[t]-centers[k])^2 / (2 bw^2)), rows normalized to sum 1.
Mat build_basis(const BasisConfig& config, const Vec& times);

/// Ridge regression per state dimension, omega = (Phi'Phi + ridge I)^-1 Phi' tau.
/// Dimension blocks are stacked: omega = [w_dim0; w_dim1; ...].
Vec project_trajectory(const Trajectory& traj, const BasisConfig& config);

/// states = Phi * w per dimension; inverse of project_trajectory's stacking.
Mat reconstruct(const Vec& omega, const BasisConfig& config, const Vec& times);

}  // namespace mlcur::promp
