#include "mixture_model.hpp"

#include <cmath>

namespace mlcur::model {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

GaussianChol::GaussianChol(Mat sigma_in, double floor) {
  require(sigma_in.rows() == sigma_in.cols(), "covariance must be square");
  require(sigma_in.allFinite(), "covariance has non-finite entries");
  sigma = 0.5 * (sigma_in + sigma_in.transpose());
  if (floor > 0.0) {
    // clip eigenvalues at the floor: the exact maximizer of the weighted
    // likelihood over {S >= floor I}, which keeps the M-steps true argmax
    // steps (an additive floor would break coordinate ascent)
    Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
    require(es.info() == Eigen::Success, "covariance eigendecomposition failed");
    if (es.eigenvalues().minCoeff() < floor) {
      const Vec clipped = es.eigenvalues().cwiseMax(floor);
      sigma = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
      sigma = 0.5 * (sigma + sigma.transpose());
    }
  }
  llt.compute(sigma);
  require(llt.info() == Eigen::Success, "covariance not positive definite");
  log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double GaussianChol::log_density(const Vec& x, const Vec& mean) const {
  require(x.size() == sigma.rows() && mean.size() == sigma.rows(),
          "log_density: dimension mismatch");
  const Vec z = llt.matrixL().solve(x - mean);
  return -0.5 * (dim() * kLog2Pi + log_det + z.squaredNorm());
}

Vec GaussianChol::sample(const Vec& mean, Rng& rng) const {
  Vec z(dim());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.gaussian();
  return mean + llt.matrixL() * z;
}

LinearGaussianExpert::LinearGaussianExpert(Mat A_in, Vec b_in, Mat sigma, double floor)
    : A(std::move(A_in)), b(std::move(b_in)), noise(std::move(sigma), floor) {
  require(A.rows() == b.size() && A.rows() == noise.dim(),
          "expert: inconsistent dimensions");
  require(A.allFinite() && b.allFinite(), "expert: non-finite parameters");
}

ContextComponent::ContextComponent(Vec mu_in, Mat sigma, double floor)
    : mu(std::move(mu_in)), cov(std::move(sigma), floor) {
  require(mu.size() == cov.dim(), "context component: inconsistent dimensions");
  require(mu.allFinite(), "context component: non-finite mean");
}

GatingPrior GatingPrior::uniform(int k) {
  require(k >= 1, "gating: K must be >= 1");
  GatingPrior g;
  g.log_lambda = Vec::Constant(k, -std::log(static_cast<double>(k)));
  return g;
}

GatingPrior GatingPrior::from_weights(const Vec& weights) {
  require(weights.size() >= 1, "gating: K must be >= 1");
  require((weights.array() >= 0.0).all(), "gating: negative weight");
  const double s = weights.sum();
  require(s > 0.0, "gating: all-zero weights");
  GatingPrior g;
  g.log_lambda = (weights / s).array().log();
  return g;
}

GatingPrior GatingPrior::from_log(const Vec& log_lambda) {
  require(log_lambda.size() >= 1, "gating: K must be >= 1");
  double s = 0.0;
  for (int o = 0; o < log_lambda.size(); ++o) s += std::exp(log_lambda[o]);
  require(std::abs(s - 1.0) <= 1e-10, "gating: log-probabilities do not sum to 1");
  GatingPrior g;
  g.log_lambda = log_lambda;
  return g;
}

void CurriculumMoE::validate() const {
  require(!experts.empty(), "model: no experts");
  require(experts.size() == contexts.size(), "model: experts/contexts count mismatch");
  require(gating.size() == components(), "model: gating size mismatch");
  const int dw = experts[0].omega_dim();
  const int dc = experts[0].context_dim();
  for (const auto& e : experts)
    require(e.omega_dim() == dw && e.context_dim() == dc, "model: expert dims differ");
  for (const auto& c : contexts)
    require(c.dim() == dc, "model: context component dim mismatch");
}

double expert_log_density(const LinearGaussianExpert& expert, const Vec& omega,
                          const Vec& context) {
  require(context.size() == expert.context_dim(), "expert_log_density: context dim");
  return expert.noise.log_density(omega, expert.mean(context));
}

double context_log_density(const ContextComponent& ctx, const Vec& context) {
  return ctx.cov.log_density(context, ctx.mu);
}

Vec gating_log_scores(const CurriculumMoE& model, const Vec& context) {
  Vec s(model.components());
  for (int o = 0; o < model.components(); ++o)
    s[o] = context_log_density(model.contexts[o], context) + model.gating.log_lambda[o];
  return s;
}

Vec gating_posterior(const CurriculumMoE& model, const Vec& context) {
  const Vec s = gating_log_scores(model, context);
  const double lse = logsumexp(s);
  require(std::isfinite(lse), "gating_posterior: all components at -inf (degenerate model)");
  return (s.array() - lse).exp();
}

Vec sample(const CurriculumMoE& model, const Vec& context, Rng& rng) {
  const Vec post = gating_posterior(model, context);
  const double u = rng.uniform();
  int o = model.components() - 1;
  double acc = 0.0;
  for (int i = 0; i < post.size(); ++i) {
    acc += post[i];
    if (u < acc) {
      o = i;
      break;
    }
  }
  return model.experts[o].noise.sample(model.experts[o].mean(context), rng);
}

double marginal_log_likelihood(const CurriculumMoE& model, const Dataset& data) {
  data.validate();
  require(data.context_dim() == model.context_dim() &&
              data.omega_dim() == model.omega_dim(),
          "marginal_log_likelihood: dataset/model dimension mismatch");
  double total = 0.0;
  Vec terms(model.components());
  for (int i = 0; i < data.size(); ++i) {
    const Vec c = data.contexts.row(i).transpose();
    const Vec w = data.omegas.row(i).transpose();
    const Vec gate = gating_log_scores(model, c);
    const double norm = logsumexp(gate);
    require(std::isfinite(norm), "marginal_log_likelihood: degenerate gating");
    for (int o = 0; o < model.components(); ++o)
      terms[o] = gate[o] - norm + expert_log_density(model.experts[o], w, c);
    total += logsumexp(terms);
  }
  return total;
}

Vec predict_mean(const CurriculumMoE& model, const Vec& context) {
  const Vec post = gating_posterior(model, context);
  int best = 0;
  for (int o = 1; o < post.size(); ++o)
    if (post[o] > post[best]) best = o;
  return model.experts[best].mean(context);
}

}  // namespace mlcur::model
