// Command-line front end for the mlcur shared library. Every verb goes
// through the C API; this file only parses flags and shuttles files.

#include <mlcur.h>

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;

[[noreturn]] void die(const std::string& context) {
  std::cerr << "error: " << context << ": " << mlcur_last_error() << "\n";
  std::exit(1);
}

void check(int rc, const std::string& context) {
  if (rc != MLCUR_OK) die(context);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    std::cerr << "error: cannot open " << path << "\n";
    std::exit(1);
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) {
    std::cerr << "error: cannot write " << path << "\n";
    std::exit(1);
  }
  out << content;
}

std::array<double, 3> parse_mix(const std::string& mix) {
  std::array<double, 3> out{};
  std::stringstream ss(mix);
  std::string tok;
  int i = 0;
  while (std::getline(ss, tok, ',') && i < 3) out[i++] = std::stod(tok);
  if (i != 3) {
    std::cerr << "error: --mix needs three comma-separated proportions\n";
    std::exit(1);
  }
  return out;
}

struct StringHolder {
  char* s = nullptr;
  ~StringHolder() { mlcur_string_free(s); }
};

std::string strip(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\'')))
    v = v.substr(1, v.size() - 2);
  return v;
}

// key -> value pairs from a flat TOML-style or JSON config file
std::vector<std::pair<std::string, std::string>> read_config(const std::string& path) {
  const std::string text = read_file(path);
  std::vector<std::pair<std::string, std::string>> out;
  const std::string body = strip(text);
  if (!body.empty() && body.front() == '{') {
    const json j = json::parse(body);
    for (const auto& [key, value] : j.items()) {
      if (value.is_string())
        out.emplace_back(key, value.get<std::string>());
      else
        out.emplace_back(key, value.dump());
    }
    return out;
  }
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(strip(line.substr(0, eq)), unquote(strip(line.substr(eq + 1))));
  }
  return out;
}

// Expand `verb --config file ...` into `verb <config flags> ...` so that
// explicit command-line flags take precedence (last value wins).
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  if (args.size() < 2) return args;
  std::string config;
  for (size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
      break;
    }
  }
  if (config.empty()) return args;
  std::vector<std::string> expanded = {args[0], args[1]};
  for (const auto& [key, value] : read_config(config)) {
    if (key == "config") continue;
    expanded.push_back("--" + key);
    expanded.push_back(value);
  }
  expanded.insert(expanded.end(), args.begin() + 2, args.end());
  return expanded;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ML-Cur: curriculum-based mixture-of-experts imitation learning"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  std::string config_path;
  const std::vector<std::string> args = expand_config_args(argc, argv);
  std::vector<const char*> argp;
  argp.reserve(args.size());
  for (const auto& a : args) argp.push_back(a.c_str());
  argc = static_cast<int>(argp.size());
  argv = const_cast<char**>(argp.data());

  // generate ---------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "Generate reacher demonstrations");
  gen->add_option("--config", config_path,
                 "Key-value config file (TOML or JSON) mirroring the flags; "
                 "explicit flags override it");
  int gen_n = 500;
  std::string gen_mix = "0.45,0.45,0.10";
  uint64_t gen_seed = 0;
  std::string gen_out, gen_world;
  gen->add_option("--n", gen_n, "Number of demonstrations");
  gen->add_option("--mix", gen_mix, "upper,middle,lower mode proportions");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "Output dataset path (JSON lines)")->required();
  gen->add_option("--world", gen_world, "World JSON file (default: built-in)");

  // train ------------------------------------------------------------------
  auto* train = app.add_subcommand("train", "Train a model on a dataset");
  train->add_option("--config", config_path,
                 "Key-value config file (TOML or JSON) mirroring the flags; "
                 "explicit flags override it");
  std::string tr_data, tr_algo = "ml-cur", tr_out, tr_trace_out, tr_ablation = "none";
  std::string tr_mode, tr_entropy = "lower-bound";
  int tr_k = 2, tr_max_iters = 500, tr_knn = 5, tr_n_basis = 10;
  double tr_n_eff = 50.0, tr_alpha = 0.0, tr_rel_tol = 1e-6;
  double tr_bandwidth = -1.0, tr_ridge = 1e-6;
  uint64_t tr_seed = 0;
  train->add_option("--data", tr_data, "Training dataset")->required();
  train->add_option("--algo", tr_algo, "ml-cur | em | knn");
  train->add_option("-K,--components", tr_k, "Number of mixture components");
  train->add_option("--n-eff", tr_n_eff, "Effective samples per component (autotuned)");
  train->add_option("--alpha", tr_alpha, "Fixed entropy scaling (selects fixed-alpha mode)");
  train->add_option("--ablation", tr_ablation,
                    "none | no-data-weights | with-locality-violation | "
                    "without-responsibilities");
  train->add_option("--entropy-form", tr_entropy, "lower-bound | shannon");
  train->add_option("--max-iters", tr_max_iters, "Iteration cap");
  train->add_option("--rel-tol", tr_rel_tol, "Convergence threshold");
  train->add_option("--seed", tr_seed, "RNG seed");
  train->add_option("--k-neighbors", tr_knn, "K for the KNN baseline");
  train->add_option("--n-basis", tr_n_basis, "ProMP basis count");
  train->add_option("--bandwidth", tr_bandwidth, "ProMP basis bandwidth (<=0: auto)");
  train->add_option("--ridge", tr_ridge, "ProMP ridge regularizer");
  train->add_option("--out", tr_out, "Output model path")->required();
  train->add_option("--trace-out", tr_trace_out, "Training trace JSON path");

  // eval -------------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "Evaluate a model on a test dataset");
  ev->add_option("--config", config_path,
                 "Key-value config file (TOML or JSON) mirroring the flags; "
                 "explicit flags override it");
  std::string ev_model, ev_data, ev_rollout = "argmax", ev_out, ev_csv;
  int ev_phases = 50;
  uint64_t ev_seed = 0;
  ev->add_option("--model", ev_model, "Model file")->required();
  ev->add_option("--data", ev_data, "Test dataset")->required();
  ev->add_option("--rollout", ev_rollout, "argmax | sample");
  ev->add_option("--n-phases", ev_phases, "Rollout phase resolution");
  ev->add_option("--seed", ev_seed, "RNG seed (sample mode)");
  ev->add_option("--out", ev_out, "Report JSON path")->required();
  ev->add_option("--csv", ev_csv, "Optional report CSV path");

  // ablation ---------------------------------------------------------------
  auto* ab = app.add_subcommand("ablation", "Run a (variant x seed) experiment batch");
  ab->add_option("--config", config_path,
                 "Key-value config file (TOML or JSON) mirroring the flags; "
                 "explicit flags override it");
  std::string ab_spec, ab_out, ab_json;
  ab->add_option("--spec", ab_spec, "Ablation spec JSON file")->required();
  ab->add_option("--out", ab_out, "Results CSV path")->required();
  ab->add_option("--json", ab_json, "Optional results JSON path");

  // trace-export -----------------------------------------------------------
  auto* tx = app.add_subcommand("trace-export", "Convert a training trace to CSV");
  tx->add_option("--config", config_path,
                 "Key-value config file (TOML or JSON) mirroring the flags; "
                 "explicit flags override it");
  std::string tx_trace, tx_out;
  tx->add_option("--trace", tx_trace, "Trace JSON file")->required();
  tx->add_option("--out", tx_out, "CSV output path")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const auto mix = parse_mix(gen_mix);
    std::string world_json;
    if (!gen_world.empty()) world_json = read_file(gen_world);
    mlcur_dataset* data = nullptr;
    check(mlcur_dataset_generate(world_json.empty() ? nullptr : world_json.c_str(),
                                 gen_n, mix.data(), gen_seed, &data),
          "generate");
    check(mlcur_dataset_save(data, gen_out.c_str()), "save dataset");
    int counts[3] = {0, 0, 0};
    mlcur_dataset_mode_counts(data, counts);
    int n = 0;
    mlcur_dataset_size(data, &n);
    mlcur_dataset_free(data);
    std::cout << "wrote " << n << " collision-free demos to " << gen_out
              << " (upper " << counts[0] << ", middle " << counts[1] << ", lower "
              << counts[2] << ")\n";
    return 0;
  }

  if (train->parsed()) {
    mlcur_dataset* data = nullptr;
    check(mlcur_dataset_load(tr_data.c_str(), &data), "load dataset");

    json cfg = {{"algo", tr_algo},
                {"K", tr_k},
                {"n_eff", tr_n_eff},
                {"max_iters", tr_max_iters},
                {"rel_tol", tr_rel_tol},
                {"seed", tr_seed},
                {"ablation", tr_ablation},
                {"entropy_form", tr_entropy},
                {"k_neighbors", tr_knn},
                {"basis", {{"n_basis", tr_n_basis},
                           {"bandwidth", tr_bandwidth},
                           {"ridge", tr_ridge}}}};
    if (tr_alpha > 0.0) {
      cfg["mode"] = "fixed-alpha";
      cfg["alpha"] = tr_alpha;
    } else {
      cfg["mode"] = "autotuned-alpha";
    }

    mlcur_model* model = nullptr;
    StringHolder trace;
    check(mlcur_train(data, cfg.dump().c_str(), &model, &trace.s), "train");
    mlcur_dataset_free(data);
    check(mlcur_model_save(model, tr_out.c_str()), "save model");
    mlcur_model_free(model);
    if (!tr_trace_out.empty() && trace.s) write_file(tr_trace_out, trace.s);

    std::cout << "wrote model to " << tr_out << "\n";
    if (trace.s && tr_algo == "ml-cur") {
      const json t = json::parse(trace.s);
      if (!t.at("iterations").empty()) {
        const auto& last = t.at("iterations").back();
        std::cout << "final objective " << last.at("objective").get<double>()
                  << " after " << t.at("iterations").size() << " iterations; "
                  << "per-component n_eff =";
        for (const auto& v : last.at("comp_n_eff")) std::cout << ' ' << v.get<double>();
        std::cout << "\n";
      }
    }
    return 0;
  }

  if (ev->parsed()) {
    mlcur_model* model = nullptr;
    check(mlcur_model_load(ev_model.c_str(), &model), "load model");
    mlcur_dataset* data = nullptr;
    check(mlcur_dataset_load(ev_data.c_str(), &data), "load dataset");

    const json cfg = {{"rollout", ev_rollout}, {"n_phases", ev_phases}, {"seed", ev_seed}};
    StringHolder report;
    check(mlcur_evaluate(model, data, cfg.dump().c_str(), &report.s), "evaluate");
    mlcur_dataset_free(data);
    mlcur_model_free(model);

    write_file(ev_out, std::string(report.s) + "\n");
    const json r = json::parse(report.s);
    if (!ev_csv.empty()) {
      std::ostringstream csv;
      csv.precision(17);
      csv << "collision_rate,mean_distance_error,test_log_likelihood,n_contexts,"
             "rollout_mode\n";
      csv << r.at("collision_rate").get<double>() << ',';
      if (r.at("mean_distance_error").is_null())
        csv << "nan,";
      else
        csv << r.at("mean_distance_error").get<double>() << ',';
      if (r.at("test_log_likelihood").is_null())
        csv << "nan,";
      else
        csv << r.at("test_log_likelihood").get<double>() << ',';
      csv << r.at("n_contexts").get<int>() << ',' << ev_rollout << "\n";
      write_file(ev_csv, csv.str());
    }
    std::cout << "collision rate " << r.at("collision_rate").get<double>()
              << ", MDE "
              << (r.at("mean_distance_error").is_null()
                      ? "n/a"
                      : std::to_string(r.at("mean_distance_error").get<double>()))
              << "; report written to " << ev_out << "\n";
    return 0;
  }

  if (ab->parsed()) {
    const std::string spec = read_file(ab_spec);
    StringHolder table_json, table_csv;
    check(mlcur_run_ablation(spec.c_str(), &table_json.s, &table_csv.s), "ablation");
    write_file(ab_out, table_csv.s);
    if (!ab_json.empty()) write_file(ab_json, std::string(table_json.s) + "\n");
    const json t = json::parse(table_json.s);
    for (const auto& agg : t.at("aggregates"))
      std::cout << agg.at("variant").get<std::string>() << ": collision "
                << agg.at("collision_mean").get<double>() << " +- "
                << agg.at("collision_std").get<double>() << ", MDE "
                << agg.at("mde_mean").get<double>() << " +- "
                << agg.at("mde_std").get<double>() << " (" << agg.at("n_ok").get<int>()
                << " runs)\n";
    std::cout << "wrote " << ab_out << "\n";
    return 0;
  }

  if (tx->parsed()) {
    const std::string trace = read_file(tx_trace);
    StringHolder csv;
    check(mlcur_trace_csv(trace.c_str(), &csv.s), "trace-export");
    write_file(tx_out, csv.s);
    std::cout << "wrote " << tx_out << "\n";
    return 0;
  }
  return 0;
}
