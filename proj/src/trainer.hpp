#pragma once

#include <optional>
#include <vector>

#include "curriculum.hpp"
#include "mixture_model.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace mlcur::trainer {

enum class Mode { kAutotuned, kFixedAlpha };

enum class Ablation { kNone, kNoDataWeights, kLocalityViolation, kNoResponsibilities };

/// Which entropy the constraint binds: the lower-bound form with the log r
/// term, or the plain Shannon entropy of each row.
enum class EntropyForm { kLowerBound, kShannon };

struct TrainConfig {
  int k = 1;
  double n_eff = 10.0;          // autotuned mode: h_min = log(n_eff)
  Mode mode = Mode::kAutotuned;
  double alpha = 1.0;           // fixed-alpha mode
  int max_iters = 500;
  double rel_tol = 1e-6;
  int rel_tol_streak = 3;       // consecutive small changes required
  uint64_t seed = 0;
  Ablation ablation = Ablation::kNone;
  EntropyForm entropy_form = EntropyForm::kLowerBound;
  bool learn_gating = true;
  double cov_floor = model::kCovFloor;
  double expert_ridge = 1e-8;   // fallback ridge for degenerate M-steps
  curriculum::DualOptions dual;

  void validate(int n_data) const;
};

struct IterRecord {
  int iter = 0;
  double objective = 0.0;        // lower-bound objective after the M-step
  double weighted_loglik = 0.0;  // sum_{o,i} nu[o,i] s[o,i]
  double entropy_aggregate = 0.0;  // H of the aggregated weights
  double bound_gap = 0.0;        // |bound entropy + log K - aggregate entropy| at nu_old
  Vec alphas;                    // per-component alpha_o (0 where not solved)
  Vec comp_entropy;              // per-component H(nu_o)
  Vec comp_n_eff;                // exp of the above
  Mat context_means;             // K x d_c snapshot
  std::vector<Mat> context_covs; // K covariances
};

struct TrainTrace {
  std::vector<IterRecord> iters;
};

struct TrainResult {
  model::CurriculumMoE moe;
  curriculum::CurriculumWeights nu;
  TrainTrace trace;
  bool converged = false;
};

/// Weighted MLE for one linear-Gaussian expert. With `ridge_fallback` a
/// rank-deficient design falls back to ridge on the linear map (b stays
/// unpenalized, so a point mass yields A ~ 0, b = omega_1 - A c_1); without
/// it the degenerate solve is an error.
model::LinearGaussianExpert m_step_expert(const Dataset& data, const Vec& nu_row,
                                          double cov_floor = model::kCovFloor,
                                          bool ridge_fallback = true,
                                          double ridge = 1e-8);

model::ContextComponent m_step_context(const Dataset& data, const Vec& nu_row,
                                       double cov_floor = model::kCovFloor);

/// lambda_o proportional to the row masses of nu.
model::GatingPrior m_step_gating(const Mat& nu);

/// Farthest-point seeding on contexts plus locally weighted regression
/// around each seed.
model::CurriculumMoE init_model(const Dataset& data, int k, Rng& rng,
                                double cov_floor = model::kCovFloor,
                                double expert_ridge = 1e-8);

/// s[o,i] = expert lpdf + context lpdf + log lambda_o; the context term is
/// dropped when `include_context` is false (locality-violation ablation).
Mat joint_log_scores(const model::CurriculumMoE& moe, const Dataset& data,
                     bool include_context = true);

/// Full ML-Cur training loop. `init` overrides the built-in seeding (used by
/// the permutation-equivariance tests and the EM baseline for comparability).
TrainResult train_ml_cur(const Dataset& data, const TrainConfig& config,
                         const std::optional<model::CurriculumMoE>& init = std::nullopt);

/// Single-expert variant (requires config.k == 1).
TrainResult train_single(const Dataset& data, const TrainConfig& config);

}  // namespace mlcur::trainer
