#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "errors.hpp"

namespace mlcur {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Eigen::Vector2d;

/// One (context, primitive-weight) pair; `mode` is an optional generator
/// label kept for diagnostics (-1 when unknown).
struct Datum {
  Vec context;
  Vec omega;
  int mode = -1;
};

/// Projected dataset D = {(c_i, omega_i)}. Stored row-wise for the
/// weighted regressions.
struct Dataset {
  Mat contexts;  // N x d_c
  Mat omegas;    // N x d_omega
  std::vector<int> modes;  // empty or length N

  int size() const { return static_cast<int>(contexts.rows()); }
  int context_dim() const { return static_cast<int>(contexts.cols()); }
  int omega_dim() const { return static_cast<int>(omegas.cols()); }

  Datum at(int i) const {
    Datum d;
    d.context = contexts.row(i).transpose();
    d.omega = omegas.row(i).transpose();
    d.mode = modes.empty() ? -1 : modes[static_cast<size_t>(i)];
    return d;
  }

  void validate() const {
    require(contexts.rows() > 0, "dataset is empty");
    require(contexts.rows() == omegas.rows(), "dataset: context/omega row mismatch");
    require(modes.empty() || static_cast<int>(modes.size()) == size(),
            "dataset: mode label count mismatch");
    require(contexts.allFinite() && omegas.allFinite(), "dataset: non-finite entries");
  }
};

inline double logsumexp(const Vec& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;  // all -inf stays -inf
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) acc += std::exp(v[i] - m);
  return m + std::log(acc);
}

}  // namespace mlcur
