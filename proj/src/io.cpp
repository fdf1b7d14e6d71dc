#include "io.hpp"

#include <fstream>
#include <sstream>

namespace mlcur::io {

namespace {

void check_version(const json& j, const std::string& what) {
  require(j.contains("schema_version"), what + ": missing schema_version");
  const int v = j.at("schema_version").get<int>();
  require(v == kSchemaVersion, what + ": unsupported schema_version " +
                                   std::to_string(v) + " (expected " +
                                   std::to_string(kSchemaVersion) + ")");
}

}  // namespace

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& j) {
  require(j.is_array(), "expected a JSON array");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(vec_to_json(m.row(i).transpose()));
  return rows;
}

Mat mat_from_json(const json& j) {
  require(j.is_array() && !j.empty(), "expected a non-empty JSON matrix");
  const size_t cols = j[0].size();
  Mat m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    require(j[i].size() == cols, "ragged JSON matrix");
    for (size_t k = 0; k < cols; ++k)
      m(static_cast<int>(i), static_cast<int>(k)) = j[i][k].get<double>();
  }
  return m;
}

json world_to_json(const reacher::ReacherWorld& world) {
  json obstacles = json::array();
  for (const auto& r : world.obstacles)
    obstacles.push_back({{"center", {r.center.x(), r.center.y()}},
                         {"half", {r.half.x(), r.half.y()}}});
  return {{"link_lengths", vec_to_json(world.link_lengths)},
          {"obstacles", obstacles},
          {"target_box",
           {{"x", {world.target_box.x_lo, world.target_box.x_hi}},
            {"y", {world.target_box.y_lo, world.target_box.y_hi}}}}};
}

reacher::ReacherWorld world_from_json(const json& j) {
  reacher::ReacherWorld w;
  w.link_lengths = vec_from_json(j.at("link_lengths"));
  for (const auto& r : j.at("obstacles")) {
    reacher::Rect rect;
    rect.center = Vector2d(r.at("center")[0].get<double>(), r.at("center")[1].get<double>());
    rect.half = Vector2d(r.at("half")[0].get<double>(), r.at("half")[1].get<double>());
    w.obstacles.push_back(rect);
  }
  const auto& box = j.at("target_box");
  w.target_box = {box.at("x")[0].get<double>(), box.at("x")[1].get<double>(),
                  box.at("y")[0].get<double>(), box.at("y")[1].get<double>()};
  w.validate();
  return w;
}

json basis_to_json(const promp::BasisConfig& basis) {
  return {{"n_basis", basis.n_basis},
          {"centers", vec_to_json(basis.centers)},
          {"bandwidth", basis.bandwidth},
          {"ridge", basis.ridge}};
}

promp::BasisConfig basis_from_json(const json& j) {
  promp::BasisConfig b;
  b.n_basis = j.at("n_basis").get<int>();
  b.centers = vec_from_json(j.at("centers"));
  b.bandwidth = j.at("bandwidth").get<double>();
  b.ridge = j.at("ridge").get<double>();
  b.validate();
  return b;
}

namespace {

const char* mode_str(trainer::Mode m) {
  return m == trainer::Mode::kAutotuned ? "autotuned-alpha" : "fixed-alpha";
}

const char* ablation_str(trainer::Ablation a) {
  switch (a) {
    case trainer::Ablation::kNone: return "none";
    case trainer::Ablation::kNoDataWeights: return "no-data-weights";
    case trainer::Ablation::kLocalityViolation: return "with-locality-violation";
    case trainer::Ablation::kNoResponsibilities: return "without-responsibilities";
  }
  return "none";
}

}  // namespace

json train_config_to_json(const trainer::TrainConfig& config) {
  return {{"K", config.k},
          {"n_eff", config.n_eff},
          {"mode", mode_str(config.mode)},
          {"alpha", config.alpha},
          {"max_iters", config.max_iters},
          {"rel_tol", config.rel_tol},
          {"seed", config.seed},
          {"ablation", ablation_str(config.ablation)},
          {"entropy_form",
           config.entropy_form == trainer::EntropyForm::kLowerBound ? "lower-bound"
                                                                    : "shannon"},
          {"learn_gating", config.learn_gating}};
}

trainer::TrainConfig train_config_from_json(const json& j) {
  trainer::TrainConfig c;
  c.k = j.value("K", c.k);
  c.n_eff = j.value("n_eff", c.n_eff);
  if (j.contains("mode")) {
    const std::string m = j.at("mode").get<std::string>();
    if (m == "autotuned-alpha" || m == "autotuned")
      c.mode = trainer::Mode::kAutotuned;
    else if (m == "fixed-alpha" || m == "fixed")
      c.mode = trainer::Mode::kFixedAlpha;
    else
      fail("train config: unknown mode " + m);
  }
  c.alpha = j.value("alpha", c.alpha);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.rel_tol = j.value("rel_tol", c.rel_tol);
  c.seed = j.value("seed", c.seed);
  if (j.contains("ablation")) {
    const std::string a = j.at("ablation").get<std::string>();
    c.ablation = a == "none" ? trainer::Ablation::kNone : eval::ablation_from_variant(a);
  }
  if (j.contains("entropy_form")) {
    const std::string e = j.at("entropy_form").get<std::string>();
    if (e == "lower-bound")
      c.entropy_form = trainer::EntropyForm::kLowerBound;
    else if (e == "shannon")
      c.entropy_form = trainer::EntropyForm::kShannon;
    else
      fail("train config: unknown entropy_form " + e);
  }
  c.learn_gating = j.value("learn_gating", c.learn_gating);
  return c;
}

void save_raw_dataset(const reacher::RawDataset& data, const std::string& path) {
  require(!data.demos.empty(), "save dataset: empty");
  std::ostringstream out;
  json header = {{"schema_version", kSchemaVersion},
                 {"kind", "raw"},
                 {"d_c", 2},
                 {"d_s", data.world.dof()},
                 {"world", world_to_json(data.world)}};
  out << header.dump() << "\n";
  for (const auto& demo : data.demos) {
    json rec = {{"context", {demo.target.x(), demo.target.y()}},
                {"times", vec_to_json(demo.traj.times)},
                {"states", mat_to_json(demo.traj.states)},
                {"mode", reacher::mode_name(demo.mode)}};
    out << rec.dump() << "\n";
  }
  write_text_file(path, out.str());
}

void save_projected_dataset(const Dataset& data, const promp::BasisConfig& basis,
                            const std::optional<reacher::ReacherWorld>& world,
                            const std::string& path) {
  data.validate();
  std::ostringstream out;
  json header = {{"schema_version", kSchemaVersion},
                 {"kind", "projected"},
                 {"d_c", data.context_dim()},
                 {"d_omega", data.omega_dim()},
                 {"basis", basis_to_json(basis)}};
  if (world) header["world"] = world_to_json(*world);
  out << header.dump() << "\n";
  for (int i = 0; i < data.size(); ++i) {
    json rec = {{"context", vec_to_json(data.contexts.row(i).transpose())},
                {"omega", vec_to_json(data.omegas.row(i).transpose())}};
    if (!data.modes.empty() && data.modes[static_cast<size_t>(i)] >= 0)
      rec["mode"] = reacher::mode_name(
          static_cast<reacher::DemoMode>(data.modes[static_cast<size_t>(i)]));
    out << rec.dump() << "\n";
  }
  write_text_file(path, out.str());
}

LoadedDataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open dataset file: " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "dataset file is empty: " + path);
  const json header = json::parse(line);
  check_version(header, "dataset " + path);

  LoadedDataset out;
  const std::string kind = header.at("kind").get<std::string>();
  if (header.contains("world")) out.world = world_from_json(header.at("world"));

  if (kind == "raw") {
    out.raw = true;
    require(out.world.has_value(), "raw dataset: missing world");
    out.raw_data.world = *out.world;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      reacher::ReacherDemo demo;
      demo.target = Vector2d(rec.at("context")[0].get<double>(),
                             rec.at("context")[1].get<double>());
      demo.traj.times = vec_from_json(rec.at("times"));
      demo.traj.states = mat_from_json(rec.at("states"));
      demo.mode = rec.contains("mode")
                      ? reacher::mode_from_name(rec.at("mode").get<std::string>())
                      : reacher::DemoMode::kMiddle;
      demo.traj.validate();
      out.raw_data.demos.push_back(std::move(demo));
    }
    require(!out.raw_data.demos.empty(), "raw dataset: no records");
  } else if (kind == "projected") {
    out.raw = false;
    out.basis = basis_from_json(header.at("basis"));
    const int d_c = header.at("d_c").get<int>();
    const int d_omega = header.at("d_omega").get<int>();
    std::vector<json> recs;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      recs.push_back(json::parse(line));
    }
    require(!recs.empty(), "projected dataset: no records");
    out.projected.contexts.resize(static_cast<int>(recs.size()), d_c);
    out.projected.omegas.resize(static_cast<int>(recs.size()), d_omega);
    out.projected.modes.assign(recs.size(), -1);
    for (size_t i = 0; i < recs.size(); ++i) {
      const Vec c = vec_from_json(recs[i].at("context"));
      const Vec w = vec_from_json(recs[i].at("omega"));
      require(c.size() == d_c && w.size() == d_omega,
              "projected dataset: inhomogeneous record dimensions");
      out.projected.contexts.row(static_cast<int>(i)) = c.transpose();
      out.projected.omegas.row(static_cast<int>(i)) = w.transpose();
      if (recs[i].contains("mode"))
        out.projected.modes[i] = static_cast<int>(
            reacher::mode_from_name(recs[i].at("mode").get<std::string>()));
    }
    out.projected.validate();
  } else {
    fail("dataset " + path + ": unknown kind " + kind);
  }
  return out;
}

namespace {

json expert_to_json(const model::LinearGaussianExpert& e) {
  return {{"A", mat_to_json(e.A)}, {"b", vec_to_json(e.b)},
          {"Sigma", mat_to_json(e.noise.sigma)}};
}

model::LinearGaussianExpert expert_from_json(const json& j) {
  // stored covariances are already floored; do not floor again
  return model::LinearGaussianExpert(mat_from_json(j.at("A")), vec_from_json(j.at("b")),
                                     mat_from_json(j.at("Sigma")), 0.0);
}

}  // namespace

eval::Predictor ModelFile::predictor() const {
  if (kind == "ml-cur") return eval::make_predictor(mlcur);
  if (kind == "em-moe") return eval::make_predictor(em);
  if (kind == "knn") return eval::make_predictor(knn_data, knn_k);
  fail("model file: unknown kind " + kind);
}

void save_model(const ModelFile& mf, const std::string& path) {
  json j = {{"schema_version", kSchemaVersion},
            {"kind", mf.kind},
            {"basis", basis_to_json(mf.basis)},
            {"config", mf.config_echo}};
  if (mf.world) j["world"] = world_to_json(*mf.world);

  if (mf.kind == "ml-cur") {
    mf.mlcur.validate();
    json experts = json::array(), contexts = json::array();
    for (const auto& e : mf.mlcur.experts) experts.push_back(expert_to_json(e));
    for (const auto& c : mf.mlcur.contexts)
      contexts.push_back({{"mu", vec_to_json(c.mu)}, {"Sigma", mat_to_json(c.cov.sigma)}});
    j["K"] = mf.mlcur.components();
    j["experts"] = experts;
    j["contexts"] = contexts;
    j["log_gating"] = vec_to_json(mf.mlcur.gating.log_lambda);
  } else if (mf.kind == "em-moe") {
    mf.em.validate();
    json experts = json::array();
    for (const auto& e : mf.em.experts) experts.push_back(expert_to_json(e));
    j["K"] = mf.em.components();
    j["experts"] = experts;
    j["gate"] = {{"W", mat_to_json(mf.em.gate.w)}, {"b", vec_to_json(mf.em.gate.b)}};
  } else if (mf.kind == "knn") {
    mf.knn_data.validate();
    j["K"] = 1;
    j["k_neighbors"] = mf.knn_k;
    j["contexts"] = mat_to_json(mf.knn_data.contexts);
    j["omegas"] = mat_to_json(mf.knn_data.omegas);
  } else {
    fail("save model: unknown kind " + mf.kind);
  }
  write_text_file(path, j.dump(2) + "\n");
}

ModelFile load_model(const std::string& path) {
  const json j = load_json_file(path);
  check_version(j, "model " + path);
  ModelFile mf;
  mf.kind = j.at("kind").get<std::string>();
  mf.basis = basis_from_json(j.at("basis"));
  mf.config_echo = j.value("config", json::object());
  if (j.contains("world")) mf.world = world_from_json(j.at("world"));

  if (mf.kind == "ml-cur") {
    for (const auto& e : j.at("experts")) mf.mlcur.experts.push_back(expert_from_json(e));
    for (const auto& c : j.at("contexts"))
      mf.mlcur.contexts.emplace_back(vec_from_json(c.at("mu")),
                                     mat_from_json(c.at("Sigma")), 0.0);
    mf.mlcur.gating = model::GatingPrior::from_log(vec_from_json(j.at("log_gating")));
    mf.mlcur.validate();
  } else if (mf.kind == "em-moe") {
    for (const auto& e : j.at("experts")) mf.em.experts.push_back(expert_from_json(e));
    mf.em.gate.w = mat_from_json(j.at("gate").at("W"));
    mf.em.gate.b = vec_from_json(j.at("gate").at("b"));
    mf.em.validate();
  } else if (mf.kind == "knn") {
    mf.knn_k = j.at("k_neighbors").get<int>();
    mf.knn_data.contexts = mat_from_json(j.at("contexts"));
    mf.knn_data.omegas = mat_from_json(j.at("omegas"));
    mf.knn_data.validate();
  } else {
    fail("model " + path + ": unknown kind " + mf.kind);
  }
  return mf;
}

json trace_to_json(const trainer::TrainTrace& trace) {
  json iters = json::array();
  for (const auto& rec : trace.iters) {
    json covs = json::array();
    for (const auto& sig : rec.context_covs) covs.push_back(mat_to_json(sig));
    iters.push_back({{"iter", rec.iter},
                     {"objective", rec.objective},
                     {"weighted_loglik", rec.weighted_loglik},
                     {"entropy_aggregate", rec.entropy_aggregate},
                     {"bound_gap", rec.bound_gap},
                     {"alphas", vec_to_json(rec.alphas)},
                     {"comp_entropy", vec_to_json(rec.comp_entropy)},
                     {"comp_n_eff", vec_to_json(rec.comp_n_eff)},
                     {"context_means", mat_to_json(rec.context_means)},
                     {"context_covs", covs}});
  }
  return {{"schema_version", kSchemaVersion}, {"iterations", iters}};
}

trainer::TrainTrace trace_from_json(const json& j) {
  check_version(j, "trace");
  trainer::TrainTrace trace;
  for (const auto& rec : j.at("iterations")) {
    trainer::IterRecord r;
    r.iter = rec.at("iter").get<int>();
    r.objective = rec.at("objective").get<double>();
    r.weighted_loglik = rec.at("weighted_loglik").get<double>();
    r.entropy_aggregate = rec.at("entropy_aggregate").get<double>();
    r.bound_gap = rec.at("bound_gap").get<double>();
    r.alphas = vec_from_json(rec.at("alphas"));
    r.comp_entropy = vec_from_json(rec.at("comp_entropy"));
    r.comp_n_eff = vec_from_json(rec.at("comp_n_eff"));
    r.context_means = mat_from_json(rec.at("context_means"));
    for (const auto& sig : rec.at("context_covs")) r.context_covs.push_back(mat_from_json(sig));
    trace.iters.push_back(std::move(r));
  }
  return trace;
}

json report_to_json(const eval::EvalReport& report) {
  json j = {{"schema_version", kSchemaVersion},
            {"collision_rate", report.collision_rate},
            {"n_contexts", report.n_contexts},
            {"rollout_mode", report.rollout_mode}};
  j["mean_distance_error"] = std::isfinite(report.mean_distance_error)
                                 ? json(report.mean_distance_error)
                                 : json(nullptr);
  j["test_log_likelihood"] = std::isfinite(report.test_log_likelihood)
                                 ? json(report.test_log_likelihood)
                                 : json(nullptr);
  if (report.per_component_n_eff.size() > 0)
    j["per_component_n_eff"] = vec_to_json(report.per_component_n_eff);
  return j;
}

json table_to_json(const eval::ExperimentTable& table) {
  json rows = json::array(), aggs = json::array();
  for (const auto& row : table.rows) {
    json r = {{"variant", row.variant}, {"seed", row.seed}, {"ok", row.ok}};
    if (row.ok)
      r["report"] = report_to_json(row.report);
    else
      r["error"] = row.error;
    rows.push_back(std::move(r));
  }
  for (const auto& a : table.aggregates)
    aggs.push_back({{"variant", a.variant},
                    {"n_ok", a.n_ok},
                    {"collision_mean", a.collision_mean},
                    {"collision_std", a.collision_std},
                    {"mde_mean", a.mde_mean},
                    {"mde_std", a.mde_std},
                    {"tll_mean", a.tll_mean},
                    {"tll_std", a.tll_std}});
  json j = {{"schema_version", kSchemaVersion}, {"rows", rows}, {"aggregates", aggs}};
  if (table.n_train > 0) {
    const double total = table.n_train + table.n_test;
    j["split"] = {{"n_train", table.n_train},
                  {"n_test", table.n_test},
                  {"train_fraction", table.n_train / total}};
  }
  return j;
}

std::string table_to_csv(const eval::ExperimentTable& table) {
  std::ostringstream out;
  out.precision(17);
  out << "variant,seed,ok,collision_rate,mean_distance_error,test_log_likelihood,"
         "collision_std,mde_std,tll_std\n";
  for (const auto& row : table.rows) {
    out << row.variant << ',' << row.seed << ',' << (row.ok ? 1 : 0) << ',';
    if (row.ok)
      out << row.report.collision_rate << ',' << row.report.mean_distance_error << ','
          << row.report.test_log_likelihood << ",,,\n";
    else
      out << ",,,,,\n";
  }
  // one aggregate row per variant: means plus standard deviations
  for (const auto& a : table.aggregates) {
    out << a.variant << ",aggregate," << a.n_ok << ',' << a.collision_mean << ','
        << a.mde_mean << ',' << a.tll_mean << ',' << a.collision_std << ','
        << a.mde_std << ',' << a.tll_std << "\n";
  }
  return out.str();
}

eval::AblationSpec ablation_spec_from_json(const json& j) {
  check_version(j, "ablation spec");
  eval::AblationSpec spec;
  spec.variants.clear();
  for (const auto& v : j.at("variants")) spec.variants.push_back(v.get<std::string>());
  spec.seeds.clear();
  for (const auto& s : j.at("seeds")) spec.seeds.push_back(s.get<uint64_t>());
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    spec.n_demos = d.value("n_demos", spec.n_demos);
    spec.n_test = d.value("n_test", spec.n_test);
    spec.pool_seed = d.value("pool_seed", spec.pool_seed);
    if (d.contains("mode_mix")) {
      const auto& m = d.at("mode_mix");
      require(m.size() == 3, "ablation spec: mode_mix needs 3 entries");
      spec.mode_mix = {m[0].get<double>(), m[1].get<double>(), m[2].get<double>()};
    }
    if (d.contains("world")) spec.world = world_from_json(d.at("world"));
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    spec.k = t.value("K", spec.k);
    spec.n_eff = t.value("n_eff", spec.n_eff);
    spec.max_iters = t.value("max_iters", spec.max_iters);
    if (t.contains("basis")) spec.basis = basis_from_json(t.at("basis"));
  }
  if (j.contains("eval")) {
    const auto& e = j.at("eval");
    if (e.contains("rollout"))
      spec.eval.rollout = eval::rollout_from_name(e.at("rollout").get<std::string>());
    spec.eval.n_phases = e.value("n_phases", spec.eval.n_phases);
  }
  spec.validate();
  return spec;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail("cannot parse " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open file for writing: " + path);
  out << content;
  require(out.good(), "failed writing file: " + path);
}

}  // namespace mlcur::io
