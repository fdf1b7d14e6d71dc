#pragma once

#include <json.hpp>
#include <optional>
#include <string>

#include "eval.hpp"

namespace mlcur::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

json vec_to_json(const Vec& v);
Vec vec_from_json(const json& j);
json mat_to_json(const Mat& m);
Mat mat_from_json(const json& j);

json world_to_json(const reacher::ReacherWorld& world);
reacher::ReacherWorld world_from_json(const json& j);

json basis_to_json(const promp::BasisConfig& basis);
promp::BasisConfig basis_from_json(const json& j);

json train_config_to_json(const trainer::TrainConfig& config);
trainer::TrainConfig train_config_from_json(const json& j);

/// Datasets are JSON lines: a header object followed by one record per line.
/// Raw records carry (context, times, states); projected ones (context, omega).
struct LoadedDataset {
  bool raw = false;
  reacher::RawDataset raw_data;                  // when raw
  Dataset projected;                             // when !raw
  std::optional<promp::BasisConfig> basis;       // projected files
  std::optional<reacher::ReacherWorld> world;    // generated files
};

void save_raw_dataset(const reacher::RawDataset& data, const std::string& path);
void save_projected_dataset(const Dataset& data, const promp::BasisConfig& basis,
                            const std::optional<reacher::ReacherWorld>& world,
                            const std::string& path);
LoadedDataset load_dataset(const std::string& path);

/// Model files hold one of the three kinds plus the basis and a config echo.
struct ModelFile {
  std::string kind;  // "ml-cur" | "em-moe" | "knn"
  model::CurriculumMoE mlcur;
  baselines::StandardMoE em;
  Dataset knn_data;
  int knn_k = 1;
  promp::BasisConfig basis;
  json config_echo;
  std::optional<reacher::ReacherWorld> world;

  eval::Predictor predictor() const;
};

void save_model(const ModelFile& mf, const std::string& path);
ModelFile load_model(const std::string& path);

json trace_to_json(const trainer::TrainTrace& trace);
trainer::TrainTrace trace_from_json(const json& j);

json report_to_json(const eval::EvalReport& report);

json table_to_json(const eval::ExperimentTable& table);
std::string table_to_csv(const eval::ExperimentTable& table);

eval::AblationSpec ablation_spec_from_json(const json& j);

json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace mlcur::io
