#pragma once

#include <vector>

#include "rng.hpp"
#include "types.hpp"

namespace mlcur::model {

/// Diagonal floor added to every covariance at construction. Weighted
/// M-steps with few effective samples produce near-singular covariances.
inline constexpr double kCovFloor = 1e-6;

/// Gaussian with a cached Cholesky factor; all densities are evaluated in
/// log space through the factor.
struct GaussianChol {
  Mat sigma;          // floored, symmetric positive-definite
  Eigen::LLT<Mat> llt;
  double log_det = 0.0;

  GaussianChol() = default;
  explicit GaussianChol(Mat sigma_in, double floor = kCovFloor);
  int dim() const { return static_cast<int>(sigma.rows()); }
  double log_density(const Vec& x, const Vec& mean) const;
  Vec sample(const Vec& mean, Rng& rng) const;
};

/// p(omega | c, o) = N(omega | A c + b, Sigma).
struct LinearGaussianExpert {
  Mat A;  // d_omega x d_c
  Vec b;  // d_omega
  GaussianChol noise;

  LinearGaussianExpert() = default;
  LinearGaussianExpert(Mat A_in, Vec b_in, Mat sigma, double floor = kCovFloor);
  Vec mean(const Vec& context) const { return A * context + b; }
  int omega_dim() const { return static_cast<int>(b.size()); }
  int context_dim() const { return static_cast<int>(A.cols()); }
};

/// Per-component Gaussian over contexts, p(c | o).
struct ContextComponent {
  Vec mu;
  GaussianChol cov;

  ContextComponent() = default;
  ContextComponent(Vec mu_in, Mat sigma, double floor = kCovFloor);
  int dim() const { return static_cast<int>(mu.size()); }
};

/// Categorical prior over the K components, stored as log-probabilities.
struct GatingPrior {
  Vec log_lambda;

  GatingPrior() = default;
  static GatingPrior uniform(int k);
  static GatingPrior from_weights(const Vec& weights);  // normalizes
  static GatingPrior from_log(const Vec& log_lambda);   // validates sum
  int size() const { return static_cast<int>(log_lambda.size()); }
};

/// The curriculum mixture p(omega|c) = sum_o (p(c|o) p(o) / p(c)) pi(omega|c,o).
struct CurriculumMoE {
  std::vector<LinearGaussianExpert> experts;
  std::vector<ContextComponent> contexts;
  GatingPrior gating;

  int components() const { return static_cast<int>(experts.size()); }
  int omega_dim() const { return experts.at(0).omega_dim(); }
  int context_dim() const { return experts.at(0).context_dim(); }
  void validate() const;
};

double expert_log_density(const LinearGaussianExpert& expert, const Vec& omega,
                          const Vec& context);

double context_log_density(const ContextComponent& ctx, const Vec& context);

/// log p(o|c) prior to normalization, i.e. log p(c|o) + log lambda_o.
Vec gating_log_scores(const CurriculumMoE& model, const Vec& context);

/// p(o|c), normalized with log-sum-exp. Errors if every component is -inf.
Vec gating_posterior(const CurriculumMoE& model, const Vec& context);

/// Draw o ~ p(o|c), then omega ~ N(A_o c + b_o, Sigma_o).
Vec sample(const CurriculumMoE& model, const Vec& context, Rng& rng);

/// sum_i log sum_o p(o|c_i) pi(omega_i|c_i,o).
double marginal_log_likelihood(const CurriculumMoE& model, const Dataset& data);

/// Deterministic deployment: affine prediction of the argmax-gate component,
/// ties broken by lowest component index.
Vec predict_mean(const CurriculumMoE& model, const Vec& context);

}  // namespace mlcur::model
