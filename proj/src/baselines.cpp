#include "baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trainer.hpp"

namespace mlcur::baselines {

Vec SoftmaxGate::log_posterior(const Vec& context) const {
  Vec logits = w * context + b;
  return logits.array() - logsumexp(logits);
}

void StandardMoE::validate() const {
  require(!experts.empty(), "standard moe: no experts");
  require(gate.components() == components(), "standard moe: gate size mismatch");
  require(gate.w.rows() == components(), "standard moe: gate W shape");
}

namespace {

/// One damped Newton step of the weighted multiclass logistic M-step
/// objective Q(W,b) = sum_i sum_o gamma[o,i] log softmax_o(W c_i + b).
/// The last class is pinned to zero logits for identifiability.
double gate_objective(const SoftmaxGate& gate, const Dataset& data, const Mat& gamma) {
  double q = 0.0;
  for (int i = 0; i < data.size(); ++i) {
    const Vec lp = gate.log_posterior(data.contexts.row(i).transpose());
    q += gamma.col(i).dot(lp);
  }
  return q;
}

void fit_gate(SoftmaxGate& gate, const Dataset& data, const Mat& gamma, int steps) {
  const int k = gate.components();
  if (k == 1) {
    gate.w.setZero();
    gate.b.setZero();
    return;
  }
  const int dc = data.context_dim();
  const int dz = dc + 1;
  const int dim = (k - 1) * dz;  // free parameters

  double q = gate_objective(gate, data, gamma);
  for (int step = 0; step < steps; ++step) {
    Vec grad = Vec::Zero(dim);
    Mat hess = Mat::Zero(dim, dim);
    Vec z(dz);
    for (int i = 0; i < data.size(); ++i) {
      const Vec c = data.contexts.row(i).transpose();
      z.head(dc) = c;
      z[dc] = 1.0;
      const Vec p = gate.log_posterior(c).array().exp();
      for (int o = 0; o + 1 < k; ++o) {
        grad.segment(o * dz, dz) += (gamma(o, i) - p[o]) * z;
        for (int o2 = 0; o2 + 1 < k; ++o2) {
          const double wgt = p[o] * ((o == o2 ? 1.0 : 0.0) - p[o2]);
          hess.block(o * dz, o2 * dz, dz, dz) -= wgt * z * z.transpose();
        }
      }
    }
    hess.diagonal().array() -= 1e-8 * std::max(1.0, hess.cwiseAbs().maxCoeff());
    const Vec dir = (-hess).ldlt().solve(grad);
    if (!dir.allFinite()) break;

    // backtracking so the generalized M-step never decreases Q
    const SoftmaxGate saved = gate;
    double scale = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 12; ++bt) {
      gate = saved;
      for (int o = 0; o + 1 < k; ++o) {
        gate.w.row(o) += scale * dir.segment(o * dz, dc).transpose();
        gate.b[o] += scale * dir[o * dz + dc];
      }
      const double q_new = gate_objective(gate, data, gamma);
      if (q_new >= q - 1e-12) {
        q = q_new;
        improved = true;
        break;
      }
      scale *= 0.5;
    }
    if (!improved) {
      gate = saved;
      break;
    }
    if (grad.norm() < 1e-10) break;
  }
}

}  // namespace

EmResult train_em(const Dataset& data, int k, const EmConfig& config) {
  data.validate();
  require(k >= 1 && k <= data.size(), "train_em: K out of range");
  const int n = data.size();

  Rng rng(splitmix64(config.seed ^ 0xc0ffee12345ULL));
  const model::CurriculumMoE seeded =
      trainer::init_model(data, k, rng, config.cov_floor, config.expert_ridge);

  EmResult result;
  result.moe.experts = seeded.experts;
  result.moe.gate.w = Mat::Zero(k, data.context_dim());
  result.moe.gate.b = Vec::Zero(k);

  std::vector<int> weak_streak(static_cast<size_t>(k), 0);
  Mat gamma(k, n);
  Vec terms(k);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    // E-step
    double loglik = 0.0;
    for (int i = 0; i < n; ++i) {
      const Vec c = data.contexts.row(i).transpose();
      const Vec w = data.omegas.row(i).transpose();
      const Vec gate_lp = result.moe.gate.log_posterior(c);
      for (int o = 0; o < k; ++o)
        terms[o] = gate_lp[o] +
                   model::expert_log_density(result.moe.experts[static_cast<size_t>(o)], w, c);
      const double lse = logsumexp(terms);
      require(std::isfinite(lse), "train_em: degenerate likelihood");
      gamma.col(i) = (terms.array() - lse).exp();
      loglik += lse;
    }
    result.loglik_trace.push_back(loglik);

    for (int o = 0; o < k; ++o) {
      auto& streak = weak_streak[static_cast<size_t>(o)];
      if (gamma.row(o).sum() < 1e-8) {
        if (++streak >= 5) fail("train_em: component starved of responsibility");
      } else {
        streak = 0;
      }
    }

    // M-step
    for (int o = 0; o < k; ++o)
      result.moe.experts[static_cast<size_t>(o)] =
          trainer::m_step_expert(data, gamma.row(o).transpose(), config.cov_floor,
                                 /*ridge_fallback=*/true, config.expert_ridge);
    fit_gate(result.moe.gate, data, gamma, config.gate_newton_steps);

    const size_t m = result.loglik_trace.size();
    if (m >= 2) {
      const double prev = result.loglik_trace[m - 2];
      if (std::abs(loglik - prev) <= config.rel_tol * std::max(1.0, std::abs(prev))) {
        result.converged = true;
        break;
      }
    }
  }
  result.moe.validate();
  return result;
}

double marginal_log_likelihood(const StandardMoE& moe, const Dataset& data) {
  data.validate();
  double total = 0.0;
  Vec terms(moe.components());
  for (int i = 0; i < data.size(); ++i) {
    const Vec c = data.contexts.row(i).transpose();
    const Vec w = data.omegas.row(i).transpose();
    const Vec gate_lp = moe.gate.log_posterior(c);
    for (int o = 0; o < moe.components(); ++o)
      terms[o] = gate_lp[o] +
                 model::expert_log_density(moe.experts[static_cast<size_t>(o)], w, c);
    total += logsumexp(terms);
  }
  return total;
}

Vec predict_mean(const StandardMoE& moe, const Vec& context) {
  const Vec lp = moe.gate.log_posterior(context);
  int best = 0;
  for (int o = 1; o < lp.size(); ++o)
    if (lp[o] > lp[best]) best = o;
  return moe.experts[static_cast<size_t>(best)].mean(context);
}

Vec sample(const StandardMoE& moe, const Vec& context, Rng& rng) {
  const Vec p = moe.gate.log_posterior(context).array().exp();
  const double u = rng.uniform();
  int o = moe.components() - 1;
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) {
      o = i;
      break;
    }
  }
  const auto& e = moe.experts[static_cast<size_t>(o)];
  return e.noise.sample(e.mean(context), rng);
}

Vec knn_predict(const Dataset& data, const Vec& context, int k) {
  data.validate();
  const int n = data.size();
  require(k >= 1 && k <= n, "knn_predict: k out of range");
  require(context.size() == data.context_dim(), "knn_predict: context dim mismatch");

  // standardize contexts for distance comparability
  const Vec mean = data.contexts.colwise().mean();
  Vec stddev(data.context_dim());
  for (int j = 0; j < data.context_dim(); ++j) {
    const double var =
        (data.contexts.col(j).array() - mean[j]).square().sum() / n;
    stddev[j] = var > 1e-300 ? std::sqrt(var) : 1.0;
  }

  std::vector<std::pair<double, int>> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Vec d = (data.contexts.row(i).transpose() - context).array() / stddev.array();
    order[static_cast<size_t>(i)] = {d.squaredNorm(), i};
  }
  std::partial_sort(order.begin(), order.begin() + k, order.end());

  Vec out = Vec::Zero(data.omega_dim());
  for (int j = 0; j < k; ++j) out += data.omegas.row(order[static_cast<size_t>(j)].second).transpose();
  return out / k;
}

}  // namespace mlcur::baselines
