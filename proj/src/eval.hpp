#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "baselines.hpp"
#include "reacher.hpp"
#include "trainer.hpp"

namespace mlcur::eval {

enum class RolloutMode { kArgmax, kSample };

const char* rollout_name(RolloutMode mode);
RolloutMode rollout_from_name(const std::string& name);

/// Prediction interface shared by ML-Cur, the EM baseline and KNN. Only
/// density models provide a log-likelihood.
struct Predictor {
  std::string kind;
  std::function<Vec(const Vec&)> mean;
  std::function<Vec(const Vec&, Rng&)> draw;
  std::function<double(const Dataset&)> loglik;  // may be empty (KNN)
};

Predictor make_predictor(const model::CurriculumMoE& moe);
Predictor make_predictor(const baselines::StandardMoE& moe);
Predictor make_predictor(const Dataset& knn_data, int k_neighbors);

struct EvalReport {
  double collision_rate = 0.0;
  double mean_distance_error = 0.0;  // over collision-free rollouts; NaN if none
  double test_log_likelihood = 0.0;  // mean per datum; NaN when unavailable
  int n_contexts = 0;
  std::string rollout_mode;
  Vec per_component_n_eff;  // from training, empty for baselines
};

struct EvalConfig {
  RolloutMode rollout = RolloutMode::kArgmax;
  int n_phases = 50;
  uint64_t seed = 0;
};

/// Roll out one prediction per test context, check collisions and measure
/// the terminal end-effector distance to the target.
EvalReport evaluate_model(const Predictor& pred, const reacher::ReacherWorld& world,
                          const Dataset& test, const promp::BasisConfig& basis,
                          const EvalConfig& config = {});

/// One demonstration pool; each seed draws its own train/test split and
/// training initialization.
struct AblationSpec {
  std::vector<std::string> variants;  // full | no-data-weights | with-locality-violation...
  std::vector<uint64_t> seeds;
  // dataset parameters
  reacher::ReacherWorld world = reacher::ReacherWorld::make_default();
  int n_demos = 1000;                 // training share of the pool
  std::array<double, 3> mode_mix = {0.45, 0.45, 0.10};
  int n_test = 250;                   // held-out share of the pool
  uint64_t pool_seed = 0xD5;
  // training parameters
  int k = 6;
  double n_eff = 50.0;
  int max_iters = 200;
  promp::BasisConfig basis = promp::BasisConfig::make(10);
  EvalConfig eval;

  void validate() const;
};

struct ExperimentRow {
  std::string variant;
  uint64_t seed = 0;
  bool ok = false;
  std::string error;
  EvalReport report;
};

struct ExperimentAggregate {
  std::string variant;
  int n_ok = 0;
  double collision_mean = 0.0, collision_std = 0.0;
  double mde_mean = 0.0, mde_std = 0.0;
  double tll_mean = 0.0, tll_std = 0.0;
};

struct ExperimentTable {
  std::vector<ExperimentRow> rows;
  std::vector<ExperimentAggregate> aggregates;
  int n_train = 0;  // split sizes, recorded with every table
  int n_test = 0;
};

/// Known variant names: full, no-data-weights, with-locality-violation,
/// without-responsibilities, em, knn.
trainer::Ablation ablation_from_variant(const std::string& variant);

/// Train and evaluate every (variant, seed) pair; failures are recorded per
/// row and do not abort the batch.
ExperimentTable run_experiment(const AblationSpec& spec);

/// Plot-ready per-iteration CSV of the curriculum diagnostics.
std::string curriculum_trace_csv(const trainer::TrainTrace& trace);

}  // namespace mlcur::eval
