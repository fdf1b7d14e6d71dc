#include "trainer.hpp"

#include <algorithm>
#include <cmath>

namespace mlcur::trainer {

using model::ContextComponent;
using model::CurriculumMoE;
using model::GatingPrior;
using model::LinearGaussianExpert;

void TrainConfig::validate(int n_data) const {
  require(k >= 1, "train config: K must be >= 1");
  require(n_data >= k, "train config: need at least K data points");
  require(max_iters >= 1, "train config: max_iters must be >= 1");
  require(rel_tol > 0.0, "train config: rel_tol must be > 0");
  if (mode == Mode::kAutotuned)
    require(n_eff >= 1.0 && n_eff <= static_cast<double>(n_data),
            "train config: n_eff must lie in [1, N]");
  if (mode == Mode::kFixedAlpha)
    require(alpha > 0.0 && std::isfinite(alpha), "train config: alpha must be > 0");
}

LinearGaussianExpert m_step_expert(const Dataset& data, const Vec& nu_row,
                                   double cov_floor, bool ridge_fallback,
                                   double ridge) {
  data.validate();
  const int n = data.size();
  const int dc = data.context_dim();
  require(nu_row.size() == n, "m_step_expert: weight length mismatch");
  require((nu_row.array() >= 0.0).all(), "m_step_expert: negative weight");
  const double mass = nu_row.sum();
  require(mass > 0.0, "m_step_expert: zero total weight");

  // design on augmented contexts z = [c; 1]
  Mat z(n, dc + 1);
  z.leftCols(dc) = data.contexts;
  z.col(dc).setOnes();
  const Mat zw = z.array().colwise() * nu_row.array();
  Mat normal = zw.transpose() * z;
  const Mat rhs = zw.transpose() * data.omegas;

  Eigen::LDLT<Mat> ldlt(normal);
  double dmin = ldlt.vectorD().minCoeff();
  double dmax = ldlt.vectorD().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(dmin > dmax * 1e-12)) {
    if (!ridge_fallback)
      fail("m_step_expert: rank-deficient weighted design; use a ridge fallback "
           "or provide more effective samples");
    // penalize only the linear map, never the offset
    normal.topLeftCorner(dc, dc).diagonal().array() += std::max(ridge, ridge * dmax);
    ldlt.compute(normal);
    require(ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0,
            "m_step_expert: ridge fallback failed");
  }
  const Mat params = ldlt.solve(rhs);  // (dc+1) x d_omega

  Mat a = params.topRows(dc).transpose();
  Vec b = params.row(dc).transpose();
  const Mat resid = data.omegas - z * params;
  Mat sigma = resid.transpose() * (resid.array().colwise() * nu_row.array()).matrix() / mass;
  return LinearGaussianExpert(std::move(a), std::move(b), std::move(sigma), cov_floor);
}

ContextComponent m_step_context(const Dataset& data, const Vec& nu_row,
                                double cov_floor) {
  const int n = data.size();
  require(nu_row.size() == n, "m_step_context: weight length mismatch");
  require((nu_row.array() >= 0.0).all(), "m_step_context: negative weight");
  const double mass = nu_row.sum();
  require(mass > 0.0, "m_step_context: zero total weight");

  const Vec mu = data.contexts.transpose() * nu_row / mass;
  const Mat centered = data.contexts.rowwise() - mu.transpose();
  Mat sigma =
      centered.transpose() * (centered.array().colwise() * nu_row.array()).matrix() / mass;
  return ContextComponent(mu, std::move(sigma), cov_floor);
}

GatingPrior m_step_gating(const Mat& nu) {
  require(nu.rows() >= 1, "m_step_gating: empty weights");
  require((nu.array() >= 0.0).all(), "m_step_gating: negative weight");
  return GatingPrior::from_weights(nu.rowwise().sum());
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Mat global_context_cov(const Dataset& data) {
  const Vec mu = data.contexts.colwise().mean();
  const Mat centered = data.contexts.rowwise() - mu.transpose();
  return centered.transpose() * centered / data.size();
}

/// Gaussian-weighted regression around a context seed.
LinearGaussianExpert local_expert(const Dataset& data, const Vec& seed,
                                  double cov_floor, double expert_ridge) {
  const int n = data.size();
  std::vector<double> dist(n);
  Vec w(n);
  for (int i = 0; i < n; ++i)
    dist[static_cast<size_t>(i)] = (data.contexts.row(i).transpose() - seed).norm();
  double h = median(dist);
  if (h <= 1e-12) h = 1.0;
  for (int i = 0; i < n; ++i) {
    const double d = dist[static_cast<size_t>(i)] / h;
    w[i] = std::exp(-0.5 * d * d);
  }
  return m_step_expert(data, w, cov_floor, /*ridge_fallback=*/true, expert_ridge);
}

int worst_explained_datum(const Mat& scores) {
  int worst = 0;
  double worst_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < scores.cols(); ++i) {
    const double best = scores.col(i).maxCoeff();
    if (best < worst_val) {
      worst_val = best;
      worst = i;
    }
  }
  return worst;
}

}  // namespace

CurriculumMoE init_model(const Dataset& data, int k, Rng& rng, double cov_floor,
                         double expert_ridge) {
  data.validate();
  require(k >= 1 && k <= data.size(), "init_model: K out of range");
  const int n = data.size();

  // farthest-point seeding on contexts
  std::vector<int> seeds;
  seeds.push_back(rng.uniform_int(n));
  Vec min_dist = Vec::Constant(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(seeds.size()) < k) {
    const Vec last = data.contexts.row(seeds.back()).transpose();
    int far = 0;
    for (int i = 0; i < n; ++i) {
      const double d = (data.contexts.row(i).transpose() - last).squaredNorm();
      min_dist[i] = std::min(min_dist[i], d);
      if (min_dist[i] > min_dist[far]) far = i;
    }
    seeds.push_back(far);
  }

  const Mat ctx_cov = global_context_cov(data);
  CurriculumMoE moe;
  for (int o = 0; o < k; ++o) {
    const Vec seed = data.contexts.row(seeds[static_cast<size_t>(o)]).transpose();
    moe.experts.push_back(local_expert(data, seed, cov_floor, expert_ridge));
    moe.contexts.emplace_back(seed, ctx_cov / k, cov_floor);
  }
  moe.gating = GatingPrior::uniform(k);
  moe.validate();
  return moe;
}

Mat joint_log_scores(const CurriculumMoE& moe, const Dataset& data,
                     bool include_context) {
  const int k = moe.components();
  Mat s(k, data.size());
  for (int i = 0; i < data.size(); ++i) {
    const Vec c = data.contexts.row(i).transpose();
    const Vec w = data.omegas.row(i).transpose();
    for (int o = 0; o < k; ++o) {
      double v = model::expert_log_density(moe.experts[static_cast<size_t>(o)], w, c) +
                 moe.gating.log_lambda[o];
      if (include_context)
        v += model::context_log_density(moe.contexts[static_cast<size_t>(o)], c);
      s(o, i) = v;
    }
  }
  return s;
}

namespace {

struct ObjectiveParts {
  double weighted_loglik = 0.0;
  double objective = 0.0;
  Vec comp_entropy;
  Vec comp_n_eff;
};

/// Objective after an iteration. In fixed-alpha mode this is the variational
/// lower bound (entropy aggregated with the 1/K factor plus log K so it
/// matches the joint-weight entropy when the bound is tight); in autotuned
/// mode it is the sum of the per-component Lagrangians at the solved alphas.
ObjectiveParts objective_parts(const Mat& scores, const Mat& nu, const Mat& resp,
                               const TrainConfig& config, const Vec& alphas) {
  ObjectiveParts parts;
  const int k = static_cast<int>(nu.rows());
  parts.comp_entropy.resize(k);
  parts.comp_n_eff.resize(k);
  parts.weighted_loglik = (scores.array() * nu.array()).sum();

  double entropy_term = 0.0;
  for (int o = 0; o < k; ++o) {
    const double h = curriculum::per_component_entropy(nu.row(o).transpose(),
                                                       resp.row(o).transpose());
    parts.comp_entropy[o] = h;
    parts.comp_n_eff[o] = std::exp(h);
    if (config.mode == Mode::kAutotuned)
      entropy_term += alphas[o] * (h - std::log(config.n_eff));
    else
      entropy_term += config.alpha * (h / k);
  }
  if (config.mode == Mode::kFixedAlpha)
    entropy_term += config.alpha * std::log(static_cast<double>(k));
  parts.objective = parts.weighted_loglik + entropy_term;
  return parts;
}

}  // namespace

TrainResult train_ml_cur(const Dataset& data, const TrainConfig& config,
                         const std::optional<CurriculumMoE>& init) {
  data.validate();
  config.validate(data.size());
  const int k = config.k;
  const int n = data.size();
  const bool use_resp = config.ablation != Ablation::kNoResponsibilities &&
                        config.entropy_form == EntropyForm::kLowerBound;
  const bool use_context_scores = config.ablation != Ablation::kLocalityViolation;
  const bool update_weights = config.ablation != Ablation::kNoDataWeights;

  Rng rng(splitmix64(config.seed ^ 0xc0ffee12345ULL));
  CurriculumMoE moe = init ? *init : init_model(data, k, rng, config.cov_floor,
                                                config.expert_ridge);
  moe.validate();
  require(moe.components() == k, "train: init model has wrong K");

  auto nu = curriculum::CurriculumWeights::uniform(k, n);
  const curriculum::EntropyBudget budget =
      curriculum::EntropyBudget::from_n_eff(config.n_eff);

  TrainResult result;
  std::vector<int> collapse_streak(static_cast<size_t>(k), 0);
  std::vector<bool> reseeded(static_cast<size_t>(k), false);
  double prev_obj = -std::numeric_limits<double>::infinity();
  int tol_streak = 0;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    // (1) responsibilities from the previous weights. Weights can underflow
    // to exact zero for data far from every component; such a datum gets a
    // uniform responsibility so a component can re-acquire it later.
    Mat resp;
    if (use_resp) {
      resp = nu.nu;
      for (int i = 0; i < n; ++i) {
        const double s = resp.col(i).sum();
        if (s > 0.0)
          resp.col(i) /= s;
        else
          resp.col(i).setConstant(1.0 / k);
      }
    } else {
      resp = Mat::Ones(k, n);
    }

    // (2) per-component weight update at the current model
    const Mat scores = joint_log_scores(moe, data, use_context_scores);

    double bound_gap = 0.0;
    if (use_resp) {
      // tightness of the bound at nu_old: aggregated entropy identity
      double bound_entropy = 0.0;
      for (int o = 0; o < k; ++o)
        bound_entropy += curriculum::per_component_entropy(nu.nu.row(o).transpose(),
                                                           resp.row(o).transpose());
      bound_entropy = bound_entropy / k + std::log(static_cast<double>(k));
      bound_gap = std::abs(bound_entropy - curriculum::weight_entropy(nu));
    }

    Vec alphas = Vec::Zero(k);
    if (update_weights) {
      if (config.mode == Mode::kFixedAlpha) {
        nu = curriculum::update_weights_fixed_alpha(scores, resp, config.alpha, k);
        alphas.setConstant(config.alpha);
      } else {
        for (int o = 0; o < k; ++o) {
          const auto sol = curriculum::solve_alpha_dual(
              scores.row(o).transpose(), resp.row(o).transpose(), budget, config.dual);
          nu.nu.row(o) = sol.nu.transpose();
          alphas[o] = sol.alpha;
        }
      }
    }

    // (3) weighted M-steps
    for (int o = 0; o < k; ++o) {
      moe.experts[static_cast<size_t>(o)] =
          m_step_expert(data, nu.nu.row(o).transpose(), config.cov_floor,
                        /*ridge_fallback=*/true, config.expert_ridge);
      moe.contexts[static_cast<size_t>(o)] =
          m_step_context(data, nu.nu.row(o).transpose(), config.cov_floor);
    }
    if (config.learn_gating) moe.gating = m_step_gating(nu.nu);

    // trace record at the updated model
    const Mat scores_post = joint_log_scores(moe, data, use_context_scores);
    ObjectiveParts parts = objective_parts(scores_post, nu.nu, resp, config, alphas);

    IterRecord rec;
    rec.iter = iter;
    rec.objective = parts.objective;
    rec.weighted_loglik = parts.weighted_loglik;
    rec.entropy_aggregate = curriculum::weight_entropy(nu);
    rec.bound_gap = bound_gap;
    rec.alphas = alphas;
    rec.comp_entropy = parts.comp_entropy;
    rec.comp_n_eff = parts.comp_n_eff;
    rec.context_means.resize(k, data.context_dim());
    for (int o = 0; o < k; ++o) {
      rec.context_means.row(o) = moe.contexts[static_cast<size_t>(o)].mu.transpose();
      rec.context_covs.push_back(moe.contexts[static_cast<size_t>(o)].cov.sigma);
    }
    result.trace.iters.push_back(std::move(rec));

    // dead-component rule: re-seed a collapsed component once
    if (update_weights) {
      for (int o = 0; o < k; ++o) {
        auto& streak = collapse_streak[static_cast<size_t>(o)];
        if (parts.comp_n_eff[o] < 1.0 + 1e-9)
          ++streak;
        else
          streak = 0;
        if (streak >= 5) {
          if (reseeded[static_cast<size_t>(o)])
            fail("train: component collapsed to a single sample repeatedly");
          reseeded[static_cast<size_t>(o)] = true;
          streak = 0;
          const int worst = worst_explained_datum(scores_post);
          const Vec seed = data.contexts.row(worst).transpose();
          moe.experts[static_cast<size_t>(o)] =
              local_expert(data, seed, config.cov_floor, config.expert_ridge);
          moe.contexts[static_cast<size_t>(o)] =
              ContextComponent(seed, global_context_cov(data) / k, config.cov_floor);
          nu.nu.row(o).setConstant(1.0 / n);
        }
      }
    }

    // convergence on the objective
    const double obj = parts.objective;
    if (std::isfinite(prev_obj) &&
        std::abs(obj - prev_obj) <= config.rel_tol * std::max(1.0, std::abs(prev_obj))) {
      if (++tol_streak >= config.rel_tol_streak) {
        result.converged = true;
        break;
      }
    } else {
      tol_streak = 0;
    }
    prev_obj = obj;
  }

  result.moe = std::move(moe);
  result.nu = std::move(nu);
  return result;
}

TrainResult train_single(const Dataset& data, const TrainConfig& config) {
  require(config.k == 1, "train_single: config.k must be 1");
  return train_ml_cur(data, config);
}

}  // namespace mlcur::trainer
