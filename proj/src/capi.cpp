#include "mlcur.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "io.hpp"

using namespace mlcur;

struct mlcur_dataset {
  io::LoadedDataset data;
};

struct mlcur_model {
  io::ModelFile file;
};

namespace {

thread_local std::string g_last_error;

int set_error(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return MLCUR_OK;
  } catch (const Error& e) {
    return set_error(MLCUR_ERR_INVALID, e.what());
  } catch (const std::exception& e) {
    return set_error(MLCUR_ERR_NUMERIC, e.what());
  }
}

promp::BasisConfig basis_from_config(const io::json& j) {
  if (j.contains("basis")) {
    const auto& b = j.at("basis");
    if (b.contains("centers")) return io::basis_from_json(b);
    return promp::BasisConfig::make(b.value("n_basis", 10),
                                    b.value("bandwidth", -1.0),
                                    b.value("ridge", 1e-6));
  }
  return promp::BasisConfig::make(10);
}

/// Resolve a dataset handle to projected form for training/evaluation.
Dataset projected_view(const io::LoadedDataset& d, const promp::BasisConfig& basis) {
  if (!d.raw) return d.projected;
  return reacher::project_dataset(d.raw_data, basis);
}

}  // namespace

extern "C" {

const char* mlcur_version(void) { return "1.0.0"; }

const char* mlcur_last_error(void) { return g_last_error.c_str(); }

void mlcur_string_free(char* s) { std::free(s); }

int mlcur_dataset_generate(const char* world_json, int n_demos,
                           const double mode_mix[3], uint64_t seed,
                           mlcur_dataset** out) {
  if (!out || !mode_mix) return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    reacher::ReacherWorld world =
        world_json ? io::world_from_json(io::json::parse(world_json))
                   : reacher::ReacherWorld::make_default();
    auto handle = std::make_unique<mlcur_dataset>();
    handle->data.raw = true;
    handle->data.raw_data = reacher::generate_reacher_dataset(
        world, n_demos, {mode_mix[0], mode_mix[1], mode_mix[2]}, seed);
    handle->data.world = world;
    *out = handle.release();
  });
}

int mlcur_dataset_load(const char* path, mlcur_dataset** out) {
  if (!out || !path) return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<mlcur_dataset>();
    handle->data = io::load_dataset(path);
    *out = handle.release();
  });
}

int mlcur_dataset_save(const mlcur_dataset* data, const char* path) {
  if (!data || !path) return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    if (data->data.raw) {
      io::save_raw_dataset(data->data.raw_data, path);
    } else {
      require(data->data.basis.has_value(), "projected dataset lacks basis");
      io::save_projected_dataset(data->data.projected, *data->data.basis,
                                 data->data.world, path);
    }
  });
}

int mlcur_dataset_size(const mlcur_dataset* data, int* n) {
  if (!data || !n) return set_error(MLCUR_ERR_INVALID, "null argument");
  *n = data->data.raw ? static_cast<int>(data->data.raw_data.demos.size())
                      : data->data.projected.size();
  return MLCUR_OK;
}

int mlcur_dataset_is_raw(const mlcur_dataset* data, int* raw) {
  if (!data || !raw) return set_error(MLCUR_ERR_INVALID, "null argument");
  *raw = data->data.raw ? 1 : 0;
  return MLCUR_OK;
}

int mlcur_dataset_mode_counts(const mlcur_dataset* data, int counts[3]) {
  if (!data || !counts) return set_error(MLCUR_ERR_INVALID, "null argument");
  counts[0] = counts[1] = counts[2] = 0;
  if (data->data.raw) {
    for (const auto& demo : data->data.raw_data.demos)
      ++counts[static_cast<int>(demo.mode)];
  } else {
    for (const int m : data->data.projected.modes)
      if (m >= 0 && m < 3) ++counts[m];
  }
  return MLCUR_OK;
}

int mlcur_dataset_project(const mlcur_dataset* data, const char* basis_json,
                          mlcur_dataset** out) {
  if (!data || !out) return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    require(data->data.raw, "dataset is already projected");
    const promp::BasisConfig basis =
        basis_json ? io::basis_from_json(io::json::parse(basis_json))
                   : promp::BasisConfig::make(10);
    auto handle = std::make_unique<mlcur_dataset>();
    handle->data.raw = false;
    handle->data.projected = reacher::project_dataset(data->data.raw_data, basis);
    handle->data.basis = basis;
    handle->data.world = data->data.world;
    *out = handle.release();
  });
}

void mlcur_dataset_free(mlcur_dataset* data) { delete data; }

int mlcur_train(const mlcur_dataset* data, const char* config_json,
                mlcur_model** out_model, char** out_trace_json) {
  if (!data || !config_json || !out_model)
    return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    const io::json cfg = io::json::parse(config_json);
    const std::string algo = cfg.value("algo", std::string("ml-cur"));

    promp::BasisConfig basis = basis_from_config(cfg);
    if (!data->data.raw && data->data.basis) basis = *data->data.basis;
    const Dataset train_data = projected_view(data->data, basis);

    auto handle = std::make_unique<mlcur_model>();
    handle->file.basis = basis;
    handle->file.config_echo = cfg;
    handle->file.world = data->data.world;

    std::string trace_json;
    if (algo == "ml-cur") {
      const trainer::TrainConfig tc = io::train_config_from_json(cfg);
      const auto fit = trainer::train_ml_cur(train_data, tc);
      handle->file.kind = "ml-cur";
      handle->file.mlcur = fit.moe;
      trace_json = io::trace_to_json(fit.trace).dump();
    } else if (algo == "em") {
      baselines::EmConfig ec;
      ec.max_iters = cfg.value("max_iters", ec.max_iters);
      ec.seed = cfg.value("seed", ec.seed);
      const auto fit = baselines::train_em(train_data, cfg.value("K", 1), ec);
      handle->file.kind = "em-moe";
      handle->file.em = fit.moe;
      io::json trace = {{"schema_version", io::kSchemaVersion},
                        {"loglik", fit.loglik_trace}};
      trace_json = trace.dump();
    } else if (algo == "knn") {
      handle->file.kind = "knn";
      handle->file.knn_data = train_data;
      handle->file.knn_k = cfg.value("k_neighbors", 5);
      require(handle->file.knn_k >= 1 && handle->file.knn_k <= train_data.size(),
              "knn: k_neighbors out of range");
    } else {
      fail("unknown algo: " + algo);
    }

    if (out_trace_json) *out_trace_json = dup_string(trace_json);
    *out_model = handle.release();
  });
}

int mlcur_model_load(const char* path, mlcur_model** out) {
  if (!path || !out) return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    auto handle = std::make_unique<mlcur_model>();
    handle->file = io::load_model(path);
    *out = handle.release();
  });
}

int mlcur_model_save(const mlcur_model* model, const char* path) {
  if (!model || !path) return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] { io::save_model(model->file, path); });
}

int mlcur_model_kind(const mlcur_model* model, char* buf, size_t cap) {
  if (!model || !buf || cap == 0) return set_error(MLCUR_ERR_INVALID, "null argument");
  std::snprintf(buf, cap, "%s", model->file.kind.c_str());
  return MLCUR_OK;
}

int mlcur_model_omega_dim(const mlcur_model* model, int* d_omega) {
  if (!model || !d_omega) return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    if (model->file.kind == "ml-cur")
      *d_omega = model->file.mlcur.omega_dim();
    else if (model->file.kind == "em-moe")
      *d_omega = model->file.em.experts.at(0).omega_dim();
    else
      *d_omega = model->file.knn_data.omega_dim();
  });
}

int mlcur_model_predict(const mlcur_model* model, const double* context, int d_c,
                        int sample, uint64_t seed, double* omega_out, int omega_cap) {
  if (!model || !context || !omega_out)
    return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    Vec c(d_c);
    for (int i = 0; i < d_c; ++i) c[i] = context[i];
    const eval::Predictor pred = model->file.predictor();
    Rng rng(splitmix64(seed ^ 0x9e1dULL));
    const Vec omega = sample ? pred.draw(c, rng) : pred.mean(c);
    require(static_cast<int>(omega.size()) <= omega_cap, "omega_out buffer too small");
    for (int i = 0; i < omega.size(); ++i) omega_out[i] = omega[i];
  });
}

void mlcur_model_free(mlcur_model* model) { delete model; }

int mlcur_evaluate(const mlcur_model* model, const mlcur_dataset* test,
                   const char* eval_config_json, char** out_report_json) {
  if (!model || !test || !out_report_json)
    return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    eval::EvalConfig cfg;
    if (eval_config_json) {
      const io::json j = io::json::parse(eval_config_json);
      if (j.contains("rollout"))
        cfg.rollout = eval::rollout_from_name(j.at("rollout").get<std::string>());
      cfg.n_phases = j.value("n_phases", cfg.n_phases);
      cfg.seed = j.value("seed", cfg.seed);
    }
    std::optional<reacher::ReacherWorld> world = test->data.world;
    if (!world) world = model->file.world;
    require(world.has_value(), "evaluate: no world in test dataset or model");

    const Dataset test_data = projected_view(test->data, model->file.basis);
    const eval::EvalReport report = eval::evaluate_model(
        model->file.predictor(), *world, test_data, model->file.basis, cfg);
    *out_report_json = dup_string(io::report_to_json(report).dump(2));
  });
}

int mlcur_run_ablation(const char* spec_json, char** out_table_json,
                       char** out_table_csv) {
  if (!spec_json) return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    const auto spec = io::ablation_spec_from_json(io::json::parse(spec_json));
    const auto table = eval::run_experiment(spec);
    if (out_table_json) *out_table_json = dup_string(io::table_to_json(table).dump(2));
    if (out_table_csv) *out_table_csv = dup_string(io::table_to_csv(table));
  });
}

int mlcur_trace_csv(const char* trace_json, char** out_csv) {
  if (!trace_json || !out_csv) return set_error(MLCUR_ERR_INVALID, "null argument");
  return guarded([&] {
    const auto trace = io::trace_from_json(io::json::parse(trace_json));
    *out_csv = dup_string(eval::curriculum_trace_csv(trace));
  });
}

}  // extern "C"
