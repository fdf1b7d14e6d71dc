#pragma once

#include <vector>

#include "mixture_model.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace mlcur::baselines {

/// Softmax gate: logits(c) = W c + b.
struct SoftmaxGate {
  Mat w;  // K x d_c
  Vec b;  // K

  int components() const { return static_cast<int>(b.size()); }
  Vec log_posterior(const Vec& context) const;  // normalized log softmax
};

/// Standard mixture of experts p(omega|c) = sum_o p(o|c) N(omega|A_o c + b_o, S_o).
struct StandardMoE {
  std::vector<model::LinearGaussianExpert> experts;
  SoftmaxGate gate;

  int components() const { return static_cast<int>(experts.size()); }
  void validate() const;
};

struct EmConfig {
  int max_iters = 300;
  double rel_tol = 1e-9;
  int gate_newton_steps = 10;
  uint64_t seed = 0;
  double cov_floor = model::kCovFloor;
  double expert_ridge = 1e-8;
};

struct EmResult {
  StandardMoE moe;
  std::vector<double> loglik_trace;  // one entry per iteration
  bool converged = false;
};

/// Textbook EM: posterior responsibilities, weighted expert regression and a
/// damped-Newton gate fit (generalized M-step). Initialization mirrors the
/// trainer's farthest-point seeding for comparability.
EmResult train_em(const Dataset& data, int k, const EmConfig& config = {});

double marginal_log_likelihood(const StandardMoE& moe, const Dataset& data);
Vec predict_mean(const StandardMoE& moe, const Vec& context);
Vec sample(const StandardMoE& moe, const Vec& context, Rng& rng);

/// Mean omega of the k nearest contexts (standardized Euclidean distance,
/// ties broken by datum index).
Vec knn_predict(const Dataset& data, const Vec& context, int k);

}  // namespace mlcur::baselines
