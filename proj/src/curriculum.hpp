#pragma once

#include "types.hpp"

namespace mlcur::curriculum {

/// Per-component, per-datapoint curriculum weights nu[o,i]. Each row is a
/// distribution over the data points (the component's curriculum).
struct CurriculumWeights {
  Mat nu;  // K x N

  int components() const { return static_cast<int>(nu.rows()); }
  int size() const { return static_cast<int>(nu.cols()); }
  void validate() const;

  static CurriculumWeights uniform(int k, int n);
};

/// r[o,i] = nu_old[o,i] / sum_o' nu_old[o',i]; columns sum to 1.
struct Responsibilities {
  Mat r;  // K x N

  void validate() const;
};

/// s[o,i] = log pi(omega_i|c_i,o) + log p(c_i|o) + log lambda_o.
struct JointLogScores {
  Mat s;  // K x N
};

/// Minimum-entropy budget; h_min = log(n_eff) where n_eff is the desired
/// number of effective samples per component.
struct EntropyBudget {
  double h_min;
  double n_eff;

  static EntropyBudget from_n_eff(double n_eff);
};

Responsibilities responsibilities(const CurriculumWeights& nu_old);

/// Entropy of the aggregated weights nu_bar_i = (1/K) sum_o nu[o,i].
double weight_entropy(const CurriculumWeights& nu);

/// -sum_i nu[i] (log nu[i] - log r[i]), one component's entropy term in the
/// lower bound (before the 1/K factor). 0 log 0 := 0; errors where nu > 0
/// on r = 0.
double per_component_entropy(const Vec& nu_row, const Vec& r_row);

/// Closed-form update, row o of nu proportional to exp((K/alpha) s[o,i]) r[o,i].
CurriculumWeights update_weights_fixed_alpha(const Mat& scores, const Mat& resp,
                                             double alpha, int k);

struct DualOptions {
  double alpha_floor = 1e-6;
  double alpha_cap = 1e8;
};

struct DualResult {
  double alpha = 0.0;        // minimizer of the dual
  Vec nu;                    // normalized weights at alpha
  double dual_value = 0.0;   // g(alpha)
  double entropy = 0.0;      // -sum nu (log nu - log r) at the solution
  bool constraint_active = false;  // false iff alpha hit the floor with slack
};

/// g(alpha) = alpha (log sum_i r_i exp(s_i/alpha) - h_min); exposed for
/// diagnostics and trace output.
double dual_value(double alpha, const Vec& scores_row, const Vec& resp_row,
                  double h_min);

/// Normalized nu_i proportional to r_i exp(s_i/alpha).
Vec weights_for_alpha(double alpha, const Vec& scores_row, const Vec& resp_row);

/// Minimize the convex dual over [alpha_floor, alpha_cap]. The derivative of
/// g is H(nu(alpha)) - h_min and is non-decreasing, so the minimum is located
/// by safeguarded bisection on it; the returned weights satisfy the entropy
/// constraint whenever it is feasible on the given responsibilities.
DualResult solve_alpha_dual(const Vec& scores_row, const Vec& resp_row,
                            const EntropyBudget& budget, const DualOptions& opts = {});

}  // namespace mlcur::curriculum
