#include "eval.hpp"

#include <cmath>
#include <sstream>

namespace mlcur::eval {

const char* rollout_name(RolloutMode mode) {
  return mode == RolloutMode::kArgmax ? "argmax" : "sample";
}

RolloutMode rollout_from_name(const std::string& name) {
  if (name == "argmax") return RolloutMode::kArgmax;
  if (name == "sample") return RolloutMode::kSample;
  fail("unknown rollout mode: " + name);
}

Predictor make_predictor(const model::CurriculumMoE& moe) {
  Predictor p;
  p.kind = "ml-cur";
  p.mean = [&moe](const Vec& c) { return model::predict_mean(moe, c); };
  p.draw = [&moe](const Vec& c, Rng& rng) { return model::sample(moe, c, rng); };
  p.loglik = [&moe](const Dataset& d) { return model::marginal_log_likelihood(moe, d); };
  return p;
}

Predictor make_predictor(const baselines::StandardMoE& moe) {
  Predictor p;
  p.kind = "em-moe";
  p.mean = [&moe](const Vec& c) { return baselines::predict_mean(moe, c); };
  p.draw = [&moe](const Vec& c, Rng& rng) { return baselines::sample(moe, c, rng); };
  p.loglik = [&moe](const Dataset& d) {
    return baselines::marginal_log_likelihood(moe, d);
  };
  return p;
}

Predictor make_predictor(const Dataset& knn_data, int k_neighbors) {
  Predictor p;
  p.kind = "knn";
  p.mean = [&knn_data, k_neighbors](const Vec& c) {
    return baselines::knn_predict(knn_data, c, k_neighbors);
  };
  p.draw = [&knn_data, k_neighbors](const Vec& c, Rng&) {
    return baselines::knn_predict(knn_data, c, k_neighbors);
  };
  return p;
}

EvalReport evaluate_model(const Predictor& pred, const reacher::ReacherWorld& world,
                          const Dataset& test, const promp::BasisConfig& basis,
                          const EvalConfig& config) {
  require(test.size() > 0, "evaluate: empty test set");
  require(test.context_dim() == 2, "evaluate: reacher contexts must be 2-D targets");
  require(config.n_phases >= 2, "evaluate: n_phases must be >= 2");

  Rng rng(splitmix64(config.seed ^ 0x5eedbeefULL));
  const Vec phases = Vec::LinSpaced(config.n_phases, 0.0, 1.0);

  int collided = 0;
  int free_count = 0;
  double dist_sum = 0.0;
  for (int i = 0; i < test.size(); ++i) {
    const Vec c = test.contexts.row(i).transpose();
    const Vec omega = config.rollout == RolloutMode::kArgmax ? pred.mean(c)
                                                             : pred.draw(c, rng);
    require(omega.size() == basis.n_basis * world.dof(),
            "evaluate: model/world dimension mismatch");
    const Mat joints = promp::reconstruct(omega, basis, phases);
    const bool hit = reacher::collision_check(joints, world).collided;
    if (hit) {
      ++collided;
      continue;
    }
    const Vector2d ee =
        reacher::end_effector(joints.row(joints.rows() - 1).transpose(), world.link_lengths);
    dist_sum += (ee - Vector2d(c[0], c[1])).norm();
    ++free_count;
  }

  EvalReport report;
  report.n_contexts = test.size();
  report.rollout_mode = rollout_name(config.rollout);
  report.collision_rate = static_cast<double>(collided) / test.size();
  report.mean_distance_error =
      free_count > 0 ? dist_sum / free_count : std::numeric_limits<double>::quiet_NaN();
  report.test_log_likelihood = std::numeric_limits<double>::quiet_NaN();
  if (pred.loglik && test.omega_dim() > 0)
    report.test_log_likelihood = pred.loglik(test) / test.size();
  return report;
}

void AblationSpec::validate() const {
  require(!variants.empty(), "ablation spec: no variants");
  require(!seeds.empty(), "ablation spec: no seeds");
  require(n_demos >= 2 && n_test >= 1, "ablation spec: dataset sizes");
  world.validate();
}

trainer::Ablation ablation_from_variant(const std::string& variant) {
  if (variant == "full") return trainer::Ablation::kNone;
  if (variant == "no-data-weights") return trainer::Ablation::kNoDataWeights;
  if (variant == "with-locality-violation" || variant == "locality-violation")
    return trainer::Ablation::kLocalityViolation;
  if (variant == "without-responsibilities" || variant == "no-responsibilities")
    return trainer::Ablation::kNoResponsibilities;
  fail("unknown variant: " + variant);
}

namespace {

struct Welford {
  int n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    if (!std::isfinite(x)) return;
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double std() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0; }
};

}  // namespace

namespace {

struct Split {
  Dataset train;
  Dataset test;
};

Split split_pool(const Dataset& pool, int n_train, int n_test, uint64_t seed) {
  const int n = pool.size();
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  Rng rng(splitmix64(seed ^ 0x5117));
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(rng.uniform_int(i + 1))]);

  const auto take = [&pool, &order](int from, int count) {
    Dataset out;
    out.contexts.resize(count, pool.context_dim());
    out.omegas.resize(count, pool.omega_dim());
    out.modes.resize(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
      const int src = order[static_cast<size_t>(from + i)];
      out.contexts.row(i) = pool.contexts.row(src);
      out.omegas.row(i) = pool.omegas.row(src);
      out.modes[static_cast<size_t>(i)] =
          pool.modes.empty() ? -1 : pool.modes[static_cast<size_t>(src)];
    }
    return out;
  };
  return {take(0, n_train), take(n_train, n_test)};
}

}  // namespace

ExperimentTable run_experiment(const AblationSpec& spec) {
  spec.validate();
  ExperimentTable table;
  table.n_train = spec.n_demos;
  table.n_test = spec.n_test;

  // one demonstration pool; seeds select train/test splits and inits
  const auto pool_raw = reacher::generate_reacher_dataset(
      spec.world, spec.n_demos + spec.n_test, spec.mode_mix, spec.pool_seed);
  const Dataset pool = reacher::project_dataset(pool_raw, spec.basis);

  for (const auto& variant : spec.variants) {
    Welford coll, mde, tll;
    int n_ok = 0;
    for (const uint64_t seed : spec.seeds) {
      ExperimentRow row;
      row.variant = variant;
      row.seed = seed;
      try {
        const uint64_t split_seed = splitmix64(seed ^ 0x11);
        const uint64_t train_seed = splitmix64(seed ^ 0x22);

        const auto split = split_pool(pool, spec.n_demos, spec.n_test, split_seed);
        const Dataset& train_data = split.train;
        const Dataset& test_data = split.test;

        EvalConfig eval_cfg = spec.eval;
        eval_cfg.seed = splitmix64(seed ^ 0x44);

        if (variant == "em") {
          baselines::EmConfig cfg;
          cfg.seed = train_seed;
          const auto em = baselines::train_em(train_data, spec.k, cfg);
          row.report = evaluate_model(make_predictor(em.moe), spec.world, test_data,
                                      spec.basis, eval_cfg);
        } else if (variant == "knn") {
          row.report = evaluate_model(make_predictor(train_data, std::min(5, spec.n_demos)),
                                      spec.world, test_data, spec.basis, eval_cfg);
        } else {
          trainer::TrainConfig cfg;
          cfg.k = spec.k;
          cfg.n_eff = spec.n_eff;
          cfg.max_iters = spec.max_iters;
          cfg.seed = train_seed;
          cfg.ablation = ablation_from_variant(variant);
          const auto fit = trainer::train_ml_cur(train_data, cfg);
          row.report = evaluate_model(make_predictor(fit.moe), spec.world, test_data,
                                      spec.basis, eval_cfg);
          row.report.per_component_n_eff = fit.trace.iters.back().comp_n_eff;
        }
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
      }
      if (row.ok) {
        ++n_ok;
        coll.add(row.report.collision_rate);
        mde.add(row.report.mean_distance_error);
        tll.add(row.report.test_log_likelihood);
      }
      table.rows.push_back(std::move(row));
    }
    ExperimentAggregate agg;
    agg.variant = variant;
    agg.n_ok = n_ok;
    agg.collision_mean = coll.mean;
    agg.collision_std = coll.std();
    agg.mde_mean = mde.mean;
    agg.mde_std = mde.std();
    agg.tll_mean = tll.mean;
    agg.tll_std = tll.std();
    table.aggregates.push_back(std::move(agg));
  }
  return table;
}

std::string curriculum_trace_csv(const trainer::TrainTrace& trace) {
  require(!trace.iters.empty(), "trace export: empty trace");
  const int k = static_cast<int>(trace.iters.front().alphas.size());
  const int dc = static_cast<int>(trace.iters.front().context_means.cols());

  std::ostringstream out;
  out.precision(17);
  out << "iter,component,alpha,entropy,n_eff,entropy_aggregate,objective";
  for (int j = 0; j < dc; ++j) out << ",mu_" << j;
  if (dc == 2)
    out << ",ellipse_a,ellipse_b,ellipse_theta";
  else
    for (int j = 0; j < dc; ++j) out << ",sigma_" << j << j;
  out << "\n";

  for (const auto& rec : trace.iters) {
    for (int o = 0; o < k; ++o) {
      require(std::isfinite(rec.objective) && std::isfinite(rec.comp_entropy[o]),
              "trace export: non-finite trace entry");
      out << rec.iter << ',' << o << ',' << rec.alphas[o] << ',' << rec.comp_entropy[o]
          << ',' << rec.comp_n_eff[o] << ',' << rec.entropy_aggregate << ','
          << rec.objective;
      for (int j = 0; j < dc; ++j) out << ',' << rec.context_means(o, j);
      const Mat& sig = rec.context_covs[static_cast<size_t>(o)];
      if (dc == 2) {
        // principal axes of the covariance ellipse
        const double a = sig(0, 0), b = sig(0, 1), c = sig(1, 1);
        const double tr = 0.5 * (a + c);
        const double det = a * c - b * b;
        const double disc = std::sqrt(std::max(0.0, tr * tr - det));
        const double l1 = tr + disc, l2 = std::max(0.0, tr - disc);
        const double theta = 0.5 * std::atan2(2.0 * b, a - c);
        out << ',' << std::sqrt(l1) << ',' << std::sqrt(l2) << ',' << theta;
      } else {
        for (int j = 0; j < dc; ++j) out << ',' << sig(j, j);
      }
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace mlcur::eval
