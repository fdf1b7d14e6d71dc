#include "curriculum.hpp"

#include <cmath>

namespace mlcur::curriculum {

namespace {

constexpr double kWeightClamp = 1e-300;

// log Z, with Z = sum_i r_i exp(s_i / alpha); t holds s_i/alpha + log r_i.
double log_partition(double alpha, const Vec& s, const Vec& r, Vec& t) {
  for (int i = 0; i < s.size(); ++i)
    t[i] = r[i] > 0.0 ? s[i] / alpha + std::log(r[i])
                      : -std::numeric_limits<double>::infinity();
  return logsumexp(t);
}

void clamp_tiny(Vec& nu) {
  for (int i = 0; i < nu.size(); ++i)
    if (nu[i] < kWeightClamp) nu[i] = 0.0;
}

}  // namespace

void CurriculumWeights::validate() const {
  require(nu.rows() >= 1 && nu.cols() >= 1, "weights: empty");
  require(nu.allFinite(), "weights: non-finite entries");
  require((nu.array() >= 0.0).all(), "weights: negative entry");
  for (int o = 0; o < nu.rows(); ++o)
    require(std::abs(nu.row(o).sum() - 1.0) <= 1e-9, "weights: row does not sum to 1");
}

CurriculumWeights CurriculumWeights::uniform(int k, int n) {
  require(k >= 1 && n >= 1, "weights: K and N must be >= 1");
  return CurriculumWeights{Mat::Constant(k, n, 1.0 / n)};
}

void Responsibilities::validate() const {
  require(r.rows() >= 1 && r.cols() >= 1, "responsibilities: empty");
  require((r.array() >= 0.0).all(), "responsibilities: negative entry");
  for (int i = 0; i < r.cols(); ++i)
    require(std::abs(r.col(i).sum() - 1.0) <= 1e-9,
            "responsibilities: column does not sum to 1");
}

EntropyBudget EntropyBudget::from_n_eff(double n_eff) {
  require(n_eff > 0.0 && std::isfinite(n_eff), "entropy budget: n_eff must be > 0");
  return EntropyBudget{std::log(n_eff), n_eff};
}

Responsibilities responsibilities(const CurriculumWeights& nu_old) {
  nu_old.validate();
  Mat r = nu_old.nu;
  for (int i = 0; i < r.cols(); ++i) {
    const double s = r.col(i).sum();
    require(s > 0.0, "responsibilities: datum abandoned by every component");
    r.col(i) /= s;
  }
  return Responsibilities{std::move(r)};
}

double weight_entropy(const CurriculumWeights& nu) {
  nu.validate();
  const double inv_k = 1.0 / nu.components();
  double h = 0.0;
  for (int i = 0; i < nu.size(); ++i) {
    const double p = inv_k * nu.nu.col(i).sum();
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double per_component_entropy(const Vec& nu_row, const Vec& r_row) {
  require(nu_row.size() == r_row.size(), "per_component_entropy: length mismatch");
  double h = 0.0;
  for (int i = 0; i < nu_row.size(); ++i) {
    const double nu = nu_row[i];
    if (nu <= 0.0) continue;
    require(r_row[i] > 0.0,
            "per_component_entropy: positive weight on zero responsibility");
    h -= nu * (std::log(nu) - std::log(r_row[i]));
  }
  return h;
}

CurriculumWeights update_weights_fixed_alpha(const Mat& scores, const Mat& resp,
                                             double alpha, int k) {
  require(alpha > 0.0 && std::isfinite(alpha), "fixed-alpha update: alpha must be > 0");
  require(scores.rows() == k && resp.rows() == k && scores.cols() == resp.cols(),
          "fixed-alpha update: shape mismatch");
  const double exponent = static_cast<double>(k) / alpha;

  Mat nu(scores.rows(), scores.cols());
  Vec u(scores.cols());
  for (int o = 0; o < scores.rows(); ++o) {
    for (int i = 0; i < scores.cols(); ++i) {
      require(std::isfinite(scores(o, i)), "fixed-alpha update: non-finite score");
      u[i] = resp(o, i) > 0.0 ? exponent * scores(o, i) + std::log(resp(o, i))
                              : -std::numeric_limits<double>::infinity();
    }
    const double lse = logsumexp(u);
    require(std::isfinite(lse), "fixed-alpha update: row has no support");
    Vec row = (u.array() - lse).exp();
    clamp_tiny(row);
    nu.row(o) = row / row.sum();
  }
  return CurriculumWeights{std::move(nu)};
}

double dual_value(double alpha, const Vec& scores_row, const Vec& resp_row,
                  double h_min) {
  Vec t(scores_row.size());
  return alpha * (log_partition(alpha, scores_row, resp_row, t) - h_min);
}

Vec weights_for_alpha(double alpha, const Vec& scores_row, const Vec& resp_row) {
  Vec t(scores_row.size());
  const double lse = log_partition(alpha, scores_row, resp_row, t);
  require(std::isfinite(lse), "dual: weights have no support");
  Vec nu = (t.array() - lse).exp();
  clamp_tiny(nu);
  return nu / nu.sum();
}

DualResult solve_alpha_dual(const Vec& scores_row, const Vec& resp_row,
                            const EntropyBudget& budget, const DualOptions& opts) {
  const int n = static_cast<int>(scores_row.size());
  require(n >= 1 && resp_row.size() == n, "dual: shape mismatch");
  require(scores_row.allFinite(), "dual: non-finite scores");
  require((resp_row.array() >= 0.0).all() && resp_row.sum() > 0.0,
          "dual: responsibilities must be non-negative with support");
  require(budget.h_min <= std::log(static_cast<double>(n)) + 1e-12,
          "dual: infeasible budget, h_min exceeds log N");
  require(opts.alpha_floor > 0.0 && opts.alpha_cap > opts.alpha_floor,
          "dual: bad alpha bounds");

  // g'(alpha) = H(nu(alpha)) - h_min with H(nu) = log Z - (1/alpha) sum nu s.
  Vec t(n);
  auto entropy_at = [&](double alpha) {
    const double lse = log_partition(alpha, scores_row, resp_row, t);
    require(std::isfinite(lse), "dual: degenerate weights during line search");
    double mean_s = 0.0;
    for (int i = 0; i < n; ++i) mean_s += std::exp(t[i] - lse) * scores_row[i];
    return lse - mean_s / alpha;
  };

  double lo = std::log(opts.alpha_floor);
  double hi = std::log(opts.alpha_cap);
  double alpha;
  bool active;
  if (entropy_at(opts.alpha_floor) >= budget.h_min) {
    alpha = opts.alpha_floor;  // unconstrained solution already feasible
    active = false;
  } else if (entropy_at(opts.alpha_cap) <= budget.h_min) {
    alpha = opts.alpha_cap;  // dual decreasing everywhere; best effort at the cap
    active = true;
  } else {
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo) + std::abs(hi));
         ++it) {
      const double mid = 0.5 * (lo + hi);
      if (entropy_at(std::exp(mid)) < budget.h_min)
        lo = mid;
      else
        hi = mid;
    }
    alpha = std::exp(0.5 * (lo + hi));
    active = true;
  }

  DualResult res;
  res.alpha = alpha;
  res.nu = weights_for_alpha(alpha, scores_row, resp_row);
  res.dual_value = dual_value(alpha, scores_row, resp_row, budget.h_min);
  res.entropy = per_component_entropy(res.nu, resp_row);
  res.constraint_active = active;
  require(std::isfinite(res.dual_value), "dual: line search diverged");
  return res;
}

}  // namespace mlcur::curriculum
