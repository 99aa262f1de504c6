#include "survmi/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>

#include "survmi/assessment.hpp"
#include "survmi/csv.hpp"
#include "survmi/parallel.hpp"
#include "survmi/pipelines.hpp"
#include "survmi/report.hpp"
#include "survmi/rng.hpp"
#include "survmi/simulation.hpp"

namespace survmi::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint64_t kTagRun = 13;  // replicate streams, shared with
                                       // the scenario runner's derivation

int default_workers() {
  if (const char* env = std::getenv("SURVMI_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  return 1;
}

CombineRule combine_from_name(const std::string& name) {
  if (name == "mean") return CombineRule::Mean;
  if (name == "median") return CombineRule::Median;
  if (name == "logit-mean" || name == "logit_mean")
    return CombineRule::LogitMean;
  throw ParameterError("unknown combine rule '" + name + "'");
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir);
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

DatasetSchema resolve_schema(const std::string& data_path,
                             const std::string& schema_path,
                             const std::string& time_col,
                             const std::string& status_col,
                             const std::string& missing_token) {
  if (!schema_path.empty()) return schema_from_json_file(schema_path);
  return infer_schema(data_path, time_col, status_col, missing_token);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------------------
// crossval

struct CrossvalConfig {
  std::string data_path;
  std::string schema_path;
  std::string out_dir = ".";
  std::string time_col = "time";
  std::string status_col = "status";
  std::string missing_token = "NA";
  std::vector<std::string> methods{"ap1"};
  int K = 10;
  int folds = 10;
  int replicates = 1;
  std::vector<double> horizons{12.0, 60.0};
  std::string combine = "mean";
  std::uint64_t seed = 1;
  int workers = 1;
};

json crossval_to_json(const CrossvalConfig& c) {
  return json{{"data", c.data_path},
              {"schema", c.schema_path},
              {"time_col", c.time_col},
              {"status_col", c.status_col},
              {"missing_token", c.missing_token},
              {"methods", c.methods},
              {"K", c.K},
              {"folds", c.folds},
              {"replicates", c.replicates},
              {"horizons", c.horizons},
              {"combine", c.combine},
              {"seed", c.seed}};
}

void crossval_from_json(const json& j, CrossvalConfig& c) {
  if (j.contains("data")) c.data_path = j["data"].get<std::string>();
  if (j.contains("schema")) c.schema_path = j["schema"].get<std::string>();
  if (j.contains("time_col")) c.time_col = j["time_col"].get<std::string>();
  if (j.contains("status_col"))
    c.status_col = j["status_col"].get<std::string>();
  if (j.contains("missing_token"))
    c.missing_token = j["missing_token"].get<std::string>();
  if (j.contains("methods"))
    c.methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("K")) c.K = j["K"].get<int>();
  if (j.contains("folds")) c.folds = j["folds"].get<int>();
  if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
  if (j.contains("horizons"))
    c.horizons = j["horizons"].get<std::vector<double>>();
  if (j.contains("combine")) c.combine = j["combine"].get<std::string>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
}

struct StratumMetrics {
  double brier = std::numeric_limits<double>::quiet_NaN();
  double r_individual = std::numeric_limits<double>::quiet_NaN();
};

// Per-(method, replicate) results kept slim so large K runs fit in memory.
struct ReplicateSlim {
  Eigen::MatrixXd combined;  // n x horizons
  // [horizon][stratum]
  std::vector<std::array<StratumMetrics, 3>> metrics;
};

bool stratum_contains(int stratum, bool is_missing) {
  return stratum == 0 || (stratum == 1 && is_missing) ||
         (stratum == 2 && !is_missing);
}

constexpr std::array<const char*, 3> kStratumNames{"all", "missing",
                                                   "observed"};

void run_crossval(const CrossvalConfig& cfg) {
  if (cfg.data_path.empty()) throw ParameterError("crossval needs --data");
  if (cfg.horizons.empty()) throw ParameterError("crossval needs horizons");
  for (std::size_t h = 1; h < cfg.horizons.size(); ++h)
    if (cfg.horizons[h] <= cfg.horizons[h - 1])
      throw ParameterError("horizons must be positive and sorted");
  if (cfg.horizons[0] <= 0.0)
    throw ParameterError("horizons must be positive and sorted");
  if (cfg.replicates < 1) throw ParameterError("replicates must be >= 1");

  const DatasetSchema schema =
      resolve_schema(cfg.data_path, cfg.schema_path, cfg.time_col,
                     cfg.status_col, cfg.missing_token);
  const SurvivalDataset data = load_csv(cfg.data_path, schema);
  const int n = static_cast<int>(data.n());
  const std::size_t n_horizons = cfg.horizons.size();

  std::vector<Method> methods;
  for (const std::string& name : cfg.methods)
    methods.push_back(method_from_name(name));

  PipelineOptions options;
  options.combine = combine_from_name(cfg.combine);
  // Parallelize across replicates when there are enough of them, otherwise
  // inside the pipeline; results are identical either way.
  options.workers = (cfg.replicates >= cfg.workers) ? 1 : cfg.workers;

  ensure_out_dir(cfg.out_dir);

  AssessmentReport report;
  std::vector<std::string> outputs;

  for (std::size_t m = 0; m < methods.size(); ++m) {
    const std::string method = method_name(methods[m]);
    std::vector<ReplicateSlim> reps(static_cast<std::size_t>(cfg.replicates));
    PredictionSet first_replicate;

    const auto t0 = std::chrono::steady_clock::now();
    parallel_for(static_cast<std::size_t>(cfg.replicates), cfg.workers,
                 [&](std::size_t r) {
      CvSpec cv;
      cv.folds = cfg.folds;
      cv.K = cfg.K;
      cv.seed = derive_seed(cfg.seed, kTagRun, 0, static_cast<std::uint64_t>(r));
      PredictionSet ps = run_method_cv(methods[m], data, cv, cfg.horizons,
                                       options);
      ReplicateSlim slim;
      slim.combined = ps.combined;
      slim.metrics.resize(n_horizons);
      for (std::size_t h = 0; h < n_horizons; ++h) {
        for (int stratum = 0; stratum < 3; ++stratum) {
          std::vector<int> keep;
          for (int i = 0; i < n; ++i)
            if (stratum_contains(stratum,
                                 ps.had_missing[static_cast<std::size_t>(i)]))
              keep.push_back(i);
          if (keep.empty()) continue;
          Eigen::VectorXd sub_pred(static_cast<Eigen::Index>(keep.size()));
          Eigen::VectorXd sub_time(static_cast<Eigen::Index>(keep.size()));
          Eigen::VectorXi sub_status(static_cast<Eigen::Index>(keep.size()));
          for (std::size_t i = 0; i < keep.size(); ++i) {
            sub_pred[static_cast<Eigen::Index>(i)] =
                ps.combined(keep[i], static_cast<Eigen::Index>(h));
            sub_time[static_cast<Eigen::Index>(i)] = data.time[keep[i]];
            sub_status[static_cast<Eigen::Index>(i)] = data.status[keep[i]];
          }
          slim.metrics[h][static_cast<std::size_t>(stratum)].brier =
              brier_ipcw(sub_pred, sub_time, sub_status, cfg.horizons[h]);
          if (cfg.K >= 2) {
            std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
            for (int i = 0; i < n; ++i) {
              const double mean = ps.per_imputation[h].row(i).mean();
              mask[static_cast<std::size_t>(i)] =
                  stratum_contains(stratum,
                                   ps.had_missing[static_cast<std::size_t>(i)]) &&
                  mean >= 0.2 && mean <= 0.8;
            }
            try {
              slim.metrics[h][static_cast<std::size_t>(stratum)].r_individual =
                  variation_R_filtered(ps.per_imputation[h], mask);
            } catch (const EmptyFilterError&) {
            }
          }
        }
      }
      if (r == 0) first_replicate = std::move(ps);
      reps[r] = std::move(slim);
    });
    const auto t1 = std::chrono::steady_clock::now();
    std::fprintf(stderr, "crossval %s: %d replicate(s) in %.1fs\n",
                 method.c_str(), cfg.replicates,
                 std::chrono::duration<double>(t1 - t0).count());

    // Report rows.
    for (std::size_t h = 0; h < n_horizons; ++h) {
      for (int stratum = 0; stratum < 3; ++stratum) {
        std::vector<double> briers;
        std::vector<double> r_ind;
        for (const ReplicateSlim& rep : reps) {
          const StratumMetrics& sm =
              rep.metrics[h][static_cast<std::size_t>(stratum)];
          if (std::isfinite(sm.brier)) briers.push_back(sm.brier);
          if (std::isfinite(sm.r_individual)) r_ind.push_back(sm.r_individual);
        }
        if (!briers.empty()) {
          double mean = 0.0;
          for (double b : briers) mean += b;
          mean /= static_cast<double>(briers.size());
          report.rows.push_back({method, cfg.K, cfg.horizons[h],
                                 kStratumNames[static_cast<std::size_t>(stratum)],
                                 "brier_mean", mean});
          if (briers.size() >= 2) {
            double ss = 0.0;
            for (double b : briers) ss += (b - mean) * (b - mean);
            report.rows.push_back(
                {method, cfg.K, cfg.horizons[h],
                 kStratumNames[static_cast<std::size_t>(stratum)], "brier_sd",
                 std::sqrt(ss / static_cast<double>(briers.size() - 1))});
          }
        }
        if (!r_ind.empty()) {
          double mean = 0.0;
          for (double v : r_ind) mean += v;
          report.rows.push_back(
              {method, cfg.K, cfg.horizons[h],
               kStratumNames[static_cast<std::size_t>(stratum)],
               "R_individual_mean",
               mean / static_cast<double>(r_ind.size())});
        }
        // Between-replicate variation of the combined predictions.
        if (cfg.replicates >= 2) {
          Eigen::MatrixXd across(n, cfg.replicates);
          for (int r = 0; r < cfg.replicates; ++r)
            across.col(r) = reps[static_cast<std::size_t>(r)].combined.col(
                static_cast<Eigen::Index>(h));
          std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
          for (int i = 0; i < n; ++i) {
            const double mean = across.row(i).mean();
            mask[static_cast<std::size_t>(i)] =
                stratum_contains(
                    stratum,
                    first_replicate.had_missing[static_cast<std::size_t>(i)]) &&
                mean >= 0.2 && mean <= 0.8;
          }
          try {
            report.rows.push_back(
                {method, cfg.K, cfg.horizons[h],
                 kStratumNames[static_cast<std::size_t>(stratum)],
                 "R_replicates", variation_R_filtered(across, mask)});
          } catch (const EmptyFilterError&) {
          }
        }
      }
    }

    // Prediction files.
    const std::string pred_name = "predictions_" + method + ".csv";
    {
      std::ofstream out(join_path(cfg.out_dir, pred_name));
      if (!out) throw IoError("cannot write " + pred_name);
      out << "replicate,subject,horizon,had_missing,combined\n";
      for (int r = 0; r < cfg.replicates; ++r)
        for (int i = 0; i < n; ++i)
          for (std::size_t h = 0; h < n_horizons; ++h)
            out << r << ',' << i << ',' << format_double(cfg.horizons[h], 12)
                << ','
                << static_cast<int>(
                       first_replicate.had_missing[static_cast<std::size_t>(i)])
                << ','
                << format_double(reps[static_cast<std::size_t>(r)].combined(
                       i, static_cast<Eigen::Index>(h)))
                << '\n';
    }
    outputs.push_back(pred_name);
    const std::string matrix_name = "predictions_matrix_" + method + ".csv";
    write_prediction_matrix_csv(join_path(cfg.out_dir, matrix_name),
                                first_replicate);
    outputs.push_back(matrix_name);
  }

  write_report_csv(join_path(cfg.out_dir, "report.csv"), report);
  write_report_json(join_path(cfg.out_dir, "report.json"), report);
  outputs.insert(outputs.begin(), {"report.csv", "report.json"});

  json manifest{{"command", "crossval"},
                {"version", 1},
                {"seed", cfg.seed},
                {"config", crossval_to_json(cfg)},
                {"config_hash", fnv1a_hex(crossval_to_json(cfg).dump())},
                {"inputs",
                 {{"data",
                   {{"path", cfg.data_path},
                    {"fnv1a", file_fnv1a_hex(cfg.data_path)}}}}},
                {"outputs", outputs}};
  write_text(join_path(cfg.out_dir, "manifest.json"), manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateConfig {
  int scenario = 1;
  std::string mechanism = "mcar";
  bool all_cells = false;
  bool desk = false;
  int n = -1;
  int simulations = -1;
  int replicates = -1;
  int K = -1;
  int L = -1;
  std::vector<std::string> methods{"ap1", "ap2A", "ap2B"};
  std::vector<double> horizons{12.0, 60.0};
  std::string combine = "mean";
  std::uint64_t seed = 20240101;
  std::string covariance_path;
  std::string out_dir = ".";
  int workers = 1;
};

json simulate_to_json(const SimulateConfig& c) {
  return json{{"scenario", c.scenario}, {"mechanism", c.mechanism},
              {"all", c.all_cells},     {"desk", c.desk},
              {"n", c.n},               {"simulations", c.simulations},
              {"replicates", c.replicates},
              {"K", c.K},               {"L", c.L},
              {"methods", c.methods},   {"horizons", c.horizons},
              {"combine", c.combine},   {"seed", c.seed},
              {"covariance", c.covariance_path}};
}

void simulate_from_json(const json& j, SimulateConfig& c) {
  if (j.contains("scenario")) c.scenario = j["scenario"].get<int>();
  if (j.contains("mechanism")) c.mechanism = j["mechanism"].get<std::string>();
  if (j.contains("all")) c.all_cells = j["all"].get<bool>();
  if (j.contains("desk")) c.desk = j["desk"].get<bool>();
  if (j.contains("n")) c.n = j["n"].get<int>();
  if (j.contains("simulations")) c.simulations = j["simulations"].get<int>();
  if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
  if (j.contains("K")) c.K = j["K"].get<int>();
  if (j.contains("L")) c.L = j["L"].get<int>();
  if (j.contains("methods"))
    c.methods = j["methods"].get<std::vector<std::string>>();
  if (j.contains("horizons"))
    c.horizons = j["horizons"].get<std::vector<double>>();
  if (j.contains("combine")) c.combine = j["combine"].get<std::string>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("covariance"))
    c.covariance_path = j["covariance"].get<std::string>();
}

Eigen::Matrix4d covariance_from_csv(const std::string& path) {
  const auto rows = read_csv_rows(path);
  if (rows.size() != 4) throw ValidationError("covariance file needs 4 rows");
  Eigen::Matrix4d sigma;
  for (int i = 0; i < 4; ++i) {
    if (rows[static_cast<std::size_t>(i)].size() != 4)
      throw ValidationError("covariance file needs 4 columns per row");
    for (int j = 0; j < 4; ++j) {
      char* end = nullptr;
      sigma(i, j) = std::strtod(
          rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].c_str(),
          &end);
    }
  }
  return sigma;
}

ScenarioConfig scenario_from_simulate(const SimulateConfig& c, int scenario,
                                      Mechanism mech) {
  ScenarioConfig cfg = ScenarioConfig::from_id(scenario, mech);
  cfg.seed = c.seed;
  if (c.desk) {
    cfg.n = 500;
    cfg.simulations = 10;
    cfg.replicates = 5;
    cfg.K = 10;
    cfg.L = 10;
  }
  if (c.n > 0) cfg.n = c.n;
  if (c.simulations > 0) cfg.simulations = c.simulations;
  if (c.replicates > 0) cfg.replicates = c.replicates;
  if (c.K > 0) cfg.K = c.K;
  if (c.L > 0) cfg.L = c.L;
  if (!c.covariance_path.empty())
    cfg.covariance = covariance_from_csv(c.covariance_path);
  return cfg;
}

void run_simulate(const SimulateConfig& c) {
  if (c.horizons.empty() || c.horizons[0] <= 0.0)
    throw ParameterError("horizons must be positive and sorted");
  for (std::size_t h = 1; h < c.horizons.size(); ++h)
    if (c.horizons[h] <= c.horizons[h - 1])
      throw ParameterError("horizons must be positive and sorted");
  std::vector<std::pair<int, Mechanism>> cells;
  if (c.all_cells) {
    for (int id = 1; id <= 4; ++id)
      for (Mechanism mech : {Mechanism::MCAR, Mechanism::MAR})
        cells.emplace_back(id, mech);
  } else {
    cells.emplace_back(c.scenario, mechanism_from_name(c.mechanism));
  }

  std::vector<Method> methods;
  for (const std::string& name : c.methods)
    methods.push_back(method_from_name(name));

  PipelineOptions options;
  options.combine = combine_from_name(c.combine);
  options.workers = c.workers;

  ensure_out_dir(c.out_dir);
  json manifest{{"command", "simulate"},
                {"version", 1},
                {"seed", c.seed},
                {"config", simulate_to_json(c)},
                {"config_hash", fnv1a_hex(simulate_to_json(c).dump())},
                {"cells", json::array()},
                {"outputs", json::array()}};

  for (const auto& [scenario, mech] : cells) {
    const ScenarioConfig cfg = scenario_from_simulate(c, scenario, mech);
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioRunResult result = run_scenario(
        cfg, methods, c.horizons, options,
        [&](std::size_t done, std::size_t total) {
          if (done % 25 == 0 || done == total)
            std::fprintf(stderr, "scenario %d %s: %zu/%zu tasks\n", scenario,
                         mechanism_name(mech), done, total);
        });
    const auto t1 = std::chrono::steady_clock::now();
    std::fprintf(stderr, "scenario %d %s finished in %.1fs\n", scenario,
                 mechanism_name(mech),
                 std::chrono::duration<double>(t1 - t0).count());

    const std::string stem =
        "report_s" + std::to_string(scenario) + "_" + mechanism_name(mech);
    write_report_csv(join_path(c.out_dir, stem + ".csv"), result.report);
    write_report_json(join_path(c.out_dir, stem + ".json"), result.report);
    manifest["outputs"].push_back(stem + ".csv");
    manifest["outputs"].push_back(stem + ".json");

    json cell{{"scenario", scenario},
              {"mechanism", mechanism_name(mech)},
              {"n", cfg.n},
              {"simulations", cfg.simulations},
              {"replicates", cfg.replicates},
              {"K", cfg.K},
              {"L", cfg.L},
              {"dataset_seeds", result.dataset_seeds},
              {"run_seeds", result.run_seeds}};
    manifest["cells"].push_back(cell);
  }
  write_text(join_path(c.out_dir, "manifest.json"), manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// fit / predict

json model_to_json(const CoxFit& fit) {
  json design{{"columns", json::array()}, {"design_cols", json::array()}};
  for (std::size_t j = 0; j < fit.design_spec.columns.size(); ++j) {
    const ColumnInfo& col = fit.design_spec.columns[j];
    json jc{{"name", col.name},
            {"kind", col.kind == ColumnKind::Continuous ? "continuous"
                     : col.kind == ColumnKind::Binary   ? "binary"
                                                        : "categorical"},
            {"reference", fit.design_spec.reference_level[j]}};
    if (col.kind == ColumnKind::Categorical) {
      jc["levels"] = col.levels;
      jc["level_names"] = col.level_names;
    }
    design["columns"].push_back(jc);
  }
  for (const auto& dc : fit.design_spec.design_cols)
    design["design_cols"].push_back({{"source", dc.source}, {"level", dc.level}});
  return json{
      {"beta", std::vector<double>(fit.beta.data(),
                                   fit.beta.data() + fit.beta.size())},
      {"baseline",
       {{"knots", fit.baseline_cumhaz.knots},
        {"values", fit.baseline_cumhaz.values}}},
      {"design", design}};
}

CoxFit model_from_json(const json& j) {
  CoxFit fit;
  const auto beta = j.at("beta").get<std::vector<double>>();
  fit.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(),
                                               static_cast<Eigen::Index>(beta.size()));
  fit.baseline_cumhaz.knots =
      j.at("baseline").at("knots").get<std::vector<double>>();
  fit.baseline_cumhaz.values =
      j.at("baseline").at("values").get<std::vector<double>>();
  fit.baseline_cumhaz.validate();
  for (const auto& jc : j.at("design").at("columns")) {
    ColumnInfo col;
    col.name = jc.at("name").get<std::string>();
    const std::string kind = jc.at("kind").get<std::string>();
    col.kind = kind == "continuous" ? ColumnKind::Continuous
               : kind == "binary"   ? ColumnKind::Binary
                                    : ColumnKind::Categorical;
    if (col.kind == ColumnKind::Categorical) {
      col.levels = jc.at("levels").get<int>();
      if (jc.contains("level_names"))
        col.level_names = jc["level_names"].get<std::vector<std::string>>();
    }
    fit.design_spec.columns.push_back(col);
    fit.design_spec.reference_level.push_back(jc.at("reference").get<int>());
  }
  for (const auto& jc : j.at("design").at("design_cols"))
    fit.design_spec.design_cols.push_back(
        {jc.at("source").get<int>(), jc.at("level").get<int>()});
  return fit;
}

struct FitConfig {
  std::string data_path;
  std::string schema_path;
  std::string out_path = "model.json";
  std::string time_col = "time";
  std::string status_col = "status";
  std::string missing_token = "NA";
  bool complete_case = false;
};

void run_fit(const FitConfig& cfg) {
  const DatasetSchema schema =
      resolve_schema(cfg.data_path, cfg.schema_path, cfg.time_col,
                     cfg.status_col, cfg.missing_token);
  SurvivalDataset data = load_csv(cfg.data_path, schema);
  if (data.any_missing()) {
    if (!cfg.complete_case)
      throw ValidationError(
          "data has missing predictor cells; pass --complete-case to drop "
          "incomplete rows or use `predict`/`crossval` for imputation");
    std::vector<int> keep;
    for (int i = 0; i < data.n(); ++i)
      if (!data.row_has_missing(i)) keep.push_back(i);
    if (keep.size() < 2)
      throw ValidationError("fewer than 2 complete rows after filtering");
    data = data.subset(keep);
  }
  const DesignSpec spec = DesignSpec::from_dataset(data);
  CoxFit fit = fit_cox(spec.encode(data.predictors), data.time, data.status);
  fit.design_spec = spec;
  write_text(cfg.out_path, model_to_json(fit).dump(2) + "\n");
  std::fprintf(stderr, "wrote %s (%d coefficients, %zu baseline knots)\n",
               cfg.out_path.c_str(), static_cast<int>(fit.beta.size()),
               fit.baseline_cumhaz.knots.size());
}

struct PredictConfig {
  std::string model_path;
  std::string calib_path;
  std::string new_path;
  std::string schema_path;
  std::string out_dir = ".";
  std::string time_col = "time";
  std::string status_col = "status";
  std::string missing_token = "NA";
  std::string method = "ap1";
  int K = 10;
  std::vector<double> horizons{12.0, 60.0};
  std::string combine = "mean";
  std::uint64_t seed = 1;
  int workers = 1;
};

void run_predict(const PredictConfig& cfg) {
  if (cfg.new_path.empty()) throw ParameterError("predict needs --new");
  if (cfg.model_path.empty() == cfg.calib_path.empty())
    throw ParameterError("predict needs exactly one of --model or --calib");
  ensure_out_dir(cfg.out_dir);

  PredictionSet ps;
  json manifest{{"command", "predict"}, {"version", 1}, {"seed", cfg.seed}};
  if (!cfg.model_path.empty()) {
    std::ifstream in(cfg.model_path);
    if (!in) throw IoError("cannot open " + cfg.model_path);
    json jm;
    in >> jm;
    const CoxFit fit = model_from_json(jm);
    const PredictorBlock block = load_predictor_csv(
        cfg.new_path, fit.design_spec.columns, cfg.missing_token);
    for (Eigen::Index i = 0; i < block.rows(); ++i)
      if (block.row_has_missing(i))
        throw ValidationError(
            "row " + std::to_string(i + 1) +
            " has missing predictors; use --calib for imputation-based "
            "prediction");
    ps.horizons = cfg.horizons;
    ps.combine = CombineRule::Mean;
    ps.per_imputation.assign(cfg.horizons.size(),
                             Eigen::MatrixXd::Zero(block.rows(), 1));
    ps.had_missing.assign(static_cast<std::size_t>(block.rows()), 0);
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      const Eigen::VectorXd x =
          fit.design_spec.encode_row(block.values.row(i).transpose());
      const Eigen::VectorXd s = predict_survival(fit, x, cfg.horizons);
      for (std::size_t h = 0; h < cfg.horizons.size(); ++h)
        ps.per_imputation[h](i, 0) = s[static_cast<Eigen::Index>(h)];
    }
    ps.combined.resize(block.rows(),
                       static_cast<Eigen::Index>(cfg.horizons.size()));
    for (std::size_t h = 0; h < cfg.horizons.size(); ++h)
      ps.combined.col(static_cast<Eigen::Index>(h)) =
          ps.per_imputation[h].col(0);
    manifest["inputs"] = {{"model",
                           {{"path", cfg.model_path},
                            {"fnv1a", file_fnv1a_hex(cfg.model_path)}}},
                          {"new",
                           {{"path", cfg.new_path},
                            {"fnv1a", file_fnv1a_hex(cfg.new_path)}}}};
  } else {
    const DatasetSchema schema =
        resolve_schema(cfg.calib_path, cfg.schema_path, cfg.time_col,
                       cfg.status_col, cfg.missing_token);
    const SurvivalDataset calib = load_csv(cfg.calib_path, schema);
    const PredictorBlock block =
        load_predictor_csv(cfg.new_path, calib.columns, cfg.missing_token);
    PipelineOptions options;
    options.combine = combine_from_name(cfg.combine);
    options.workers = cfg.workers;
    const Method method = method_from_name(cfg.method);
    if (method == Method::Ap1)
      ps = run_approach1_direct(calib, block, cfg.K, cfg.seed, cfg.horizons,
                                options);
    else if (method == Method::Ap2A)
      ps = run_approach2_direct(calib, block, cfg.K, cfg.seed, Variant::V2A,
                                cfg.horizons, options);
    else if (method == Method::Ap2B)
      ps = run_approach2_direct(calib, block, cfg.K, cfg.seed, Variant::V2B,
                                cfg.horizons, options);
    else
      throw ParameterError(
          "naive methods are cross-validation protocols; use ap1/ap2A/ap2B");
    manifest["inputs"] = {{"calib",
                           {{"path", cfg.calib_path},
                            {"fnv1a", file_fnv1a_hex(cfg.calib_path)}}},
                          {"new",
                           {{"path", cfg.new_path},
                            {"fnv1a", file_fnv1a_hex(cfg.new_path)}}}};
    manifest["config"] = {{"method", cfg.method},
                          {"K", cfg.K},
                          {"horizons", cfg.horizons},
                          {"combine", cfg.combine}};
  }

  write_combined_predictions_csv(join_path(cfg.out_dir, "predictions.csv"),
                                 {&ps});
  write_prediction_matrix_csv(
      join_path(cfg.out_dir, "predictions_matrix.csv"), ps);
  manifest["outputs"] = {"predictions.csv", "predictions_matrix.csv"};
  write_text(join_path(cfg.out_dir, "manifest.json"), manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// assess

struct AssessConfig {
  std::string data_path;
  std::string schema_path;
  std::string predictions_path;
  std::string out_dir = ".";
  std::string time_col = "time";
  std::string status_col = "status";
  std::string missing_token = "NA";
  std::string method_label = "external";
};

void run_assess(const AssessConfig& cfg) {
  if (cfg.data_path.empty() || cfg.predictions_path.empty())
    throw ParameterError("assess needs --data and --predictions");
  const DatasetSchema schema =
      resolve_schema(cfg.data_path, cfg.schema_path, cfg.time_col,
                     cfg.status_col, cfg.missing_token);
  const SurvivalDataset data = load_csv(cfg.data_path, schema);
  const int n = static_cast<int>(data.n());

  // predictions.csv layout: replicate,subject,horizon,had_missing,combined
  const auto rows = read_csv_rows(cfg.predictions_path);
  if (rows[0] != std::vector<std::string>{"replicate", "subject", "horizon",
                                          "had_missing", "combined"})
    throw ValidationError(cfg.predictions_path +
                          " does not look like a predictions file");
  struct Key {
    int replicate;
    int subject;
  };
  std::vector<double> horizons;
  std::vector<std::uint8_t> had_missing(static_cast<std::size_t>(n), 0);
  // [horizon] -> n x R, discovered sizes.
  int max_replicate = -1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double h = std::strtod(rows[r][2].c_str(), nullptr);
    if (std::find(horizons.begin(), horizons.end(), h) == horizons.end())
      horizons.push_back(h);
    max_replicate = std::max(max_replicate, std::atoi(rows[r][0].c_str()));
  }
  const int R = max_replicate + 1;
  if (R < 1) throw ValidationError("predictions file has no rows");
  std::vector<Eigen::MatrixXd> preds(
      horizons.size(), Eigen::MatrixXd::Constant(
                           n, R, std::numeric_limits<double>::quiet_NaN()));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const int rep = std::atoi(rows[r][0].c_str());
    const int subject = std::atoi(rows[r][1].c_str());
    const double h = std::strtod(rows[r][2].c_str(), nullptr);
    if (subject < 0 || subject >= n)
      throw ValidationError("prediction subject out of range");
    const std::size_t hi = static_cast<std::size_t>(
        std::find(horizons.begin(), horizons.end(), h) - horizons.begin());
    had_missing[static_cast<std::size_t>(subject)] =
        static_cast<std::uint8_t>(std::atoi(rows[r][3].c_str()));
    preds[hi](subject, rep) = std::strtod(rows[r][4].c_str(), nullptr);
  }
  for (const auto& m : preds)
    if (!m.allFinite())
      throw ValidationError("predictions file has gaps (subject x replicate)");

  AssessmentReport report;
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    for (int stratum = 0; stratum < 3; ++stratum) {
      std::vector<int> keep;
      for (int i = 0; i < n; ++i)
        if (stratum_contains(stratum,
                             had_missing[static_cast<std::size_t>(i)]))
          keep.push_back(i);
      if (keep.empty()) continue;
      Eigen::VectorXd sub_time(static_cast<Eigen::Index>(keep.size()));
      Eigen::VectorXi sub_status(static_cast<Eigen::Index>(keep.size()));
      for (std::size_t i = 0; i < keep.size(); ++i) {
        sub_time[static_cast<Eigen::Index>(i)] = data.time[keep[i]];
        sub_status[static_cast<Eigen::Index>(i)] = data.status[keep[i]];
      }
      std::vector<double> briers;
      for (int r = 0; r < R; ++r) {
        Eigen::VectorXd sub_pred(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i)
          sub_pred[static_cast<Eigen::Index>(i)] = preds[h](keep[i], r);
        briers.push_back(brier_ipcw(sub_pred, sub_time, sub_status,
                                    horizons[h]));
      }
      double mean = 0.0;
      for (double b : briers) mean += b;
      mean /= static_cast<double>(briers.size());
      report.rows.push_back({cfg.method_label, 0, horizons[h],
                             kStratumNames[static_cast<std::size_t>(stratum)],
                             "brier_mean", mean});
      if (briers.size() >= 2) {
        double ss = 0.0;
        for (double b : briers) ss += (b - mean) * (b - mean);
        report.rows.push_back(
            {cfg.method_label, 0, horizons[h],
             kStratumNames[static_cast<std::size_t>(stratum)], "brier_sd",
             std::sqrt(ss / static_cast<double>(briers.size() - 1))});
      }
      if (R >= 2) {
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(n), 0);
        for (int i = 0; i < n; ++i) {
          const double m = preds[h].row(i).mean();
          mask[static_cast<std::size_t>(i)] =
              stratum_contains(stratum,
                               had_missing[static_cast<std::size_t>(i)]) &&
              m >= 0.2 && m <= 0.8;
        }
        try {
          report.rows.push_back(
              {cfg.method_label, 0, horizons[h],
               kStratumNames[static_cast<std::size_t>(stratum)],
               "R_replicates", variation_R_filtered(preds[h], mask)});
        } catch (const EmptyFilterError&) {
        }
      }
    }
  }
  ensure_out_dir(cfg.out_dir);
  write_report_csv(join_path(cfg.out_dir, "report.csv"), report);
  write_report_json(join_path(cfg.out_dir, "report.json"), report);
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad JSON in ") + path + ": " + e.what());
  }
  return j;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{
      "Cox survival prediction with multiply imputed predictors: "
      "calibration (approaches 1/2A/2B and naive variants), cross-validated "
      "assessment, and the simulation study driver"};
  app.require_subcommand(1);

  // fit ---------------------------------------------------------------
  FitConfig fit_cfg;
  CLI::App* fit = app.add_subcommand("fit", "fit a Cox model on complete data");
  fit->add_option("--data", fit_cfg.data_path, "dataset CSV")->required();
  fit->add_option("--schema", fit_cfg.schema_path, "schema JSON");
  fit->add_option("--out", fit_cfg.out_path, "output model JSON");
  fit->add_option("--time-col", fit_cfg.time_col, "time column name");
  fit->add_option("--status-col", fit_cfg.status_col, "status column name");
  fit->add_option("--missing-token", fit_cfg.missing_token, "missing token");
  fit->add_flag("--complete-case", fit_cfg.complete_case,
                "drop rows with missing predictors");

  // predict -----------------------------------------------------------
  PredictConfig pred_cfg;
  pred_cfg.workers = default_workers();
  CLI::App* predict = app.add_subcommand(
      "predict", "predict new rows from a model or via imputation");
  predict->add_option("--model", pred_cfg.model_path, "model JSON");
  predict->add_option("--calib", pred_cfg.calib_path, "calibration CSV");
  predict->add_option("--new", pred_cfg.new_path, "new predictor rows CSV")
      ->required();
  predict->add_option("--schema", pred_cfg.schema_path, "schema JSON");
  predict->add_option("--out", pred_cfg.out_dir, "output directory");
  predict->add_option("--time-col", pred_cfg.time_col, "time column name");
  predict->add_option("--status-col", pred_cfg.status_col,
                      "status column name");
  predict->add_option("--missing-token", pred_cfg.missing_token,
                      "missing token");
  predict->add_option("--method", pred_cfg.method, "ap1 | ap2A | ap2B")
      ->check(CLI::IsMember({"ap1", "ap2A", "ap2B"}));
  predict->add_option("--K", pred_cfg.K, "imputation count")
      ->check(CLI::PositiveNumber);
  predict->add_option("--horizons", pred_cfg.horizons,
                      "prediction horizons (months)");
  predict->add_option("--combine", pred_cfg.combine,
                      "mean | median | logit-mean")
      ->check(CLI::IsMember({"mean", "median", "logit-mean"}));
  predict->add_option("--seed", pred_cfg.seed, "master seed");
  predict->add_option("--workers", pred_cfg.workers, "worker threads");

  // crossval ----------------------------------------------------------
  CrossvalConfig cv_cfg;
  cv_cfg.workers = default_workers();
  std::string cv_config_path;
  std::string cv_manifest_path;
  CLI::App* crossval = app.add_subcommand(
      "crossval", "cross-validated calibration and assessment");
  crossval->add_option("--data", cv_cfg.data_path, "dataset CSV");
  crossval->add_option("--schema", cv_cfg.schema_path, "schema JSON");
  crossval->add_option("--out", cv_cfg.out_dir, "output directory");
  crossval->add_option("--time-col", cv_cfg.time_col, "time column name");
  crossval->add_option("--status-col", cv_cfg.status_col,
                       "status column name");
  crossval->add_option("--missing-token", cv_cfg.missing_token,
                       "missing token");
  crossval
      ->add_option("--method", cv_cfg.methods,
                   "methods: ap1 ap2A ap2B nv1 nv2A nv2B")
      ->check(CLI::IsMember({"ap1", "ap2A", "ap2B", "nv1", "nv2A", "nv2B"}));
  crossval->add_option("--K", cv_cfg.K, "imputation count")
      ->check(CLI::PositiveNumber);
  crossval->add_option("--folds", cv_cfg.folds, "cross-validation folds")
      ->check(CLI::Range(2, 1000000));
  crossval->add_option("--replicates", cv_cfg.replicates,
                       "replicate calibrations")
      ->check(CLI::PositiveNumber);
  crossval->add_option("--horizons", cv_cfg.horizons,
                       "prediction horizons (months)");
  crossval->add_option("--combine", cv_cfg.combine,
                       "mean | median | logit-mean")
      ->check(CLI::IsMember({"mean", "median", "logit-mean"}));
  crossval->add_option("--seed", cv_cfg.seed, "master seed");
  crossval->add_option("--workers", cv_cfg.workers, "worker threads");
  crossval->add_option("--config", cv_config_path,
                       "JSON config (overrides flags)");
  crossval->add_option("--from-manifest", cv_manifest_path,
                       "re-run a previous crossval from its manifest");

  // simulate ----------------------------------------------------------
  SimulateConfig sim_cfg;
  sim_cfg.workers = default_workers();
  std::string sim_config_path;
  std::string sim_manifest_path;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "run simulation-grid scenarios and emit reports");
  simulate->add_option("--scenario", sim_cfg.scenario, "scenario id (1..4)")
      ->check(CLI::Range(1, 4));
  simulate->add_option("--mechanism", sim_cfg.mechanism, "mcar | mar")
      ->check(CLI::IsMember({"mcar", "mar"}));
  simulate->add_flag("--all", sim_cfg.all_cells,
                     "run the full 4 x {mcar, mar} grid");
  simulate->add_flag("--desk", sim_cfg.desk,
                     "desk-scale preset (n=500, S=10, R=5, K=10)");
  simulate->add_option("--n", sim_cfg.n, "subjects per simulated dataset");
  simulate->add_option("--simulations", sim_cfg.simulations,
                       "simulated datasets (S)");
  simulate->add_option("--replicates", sim_cfg.replicates,
                       "replicate analyses (R)");
  simulate->add_option("--K", sim_cfg.K, "imputation count");
  simulate->add_option("--L", sim_cfg.L, "cross-validation folds");
  simulate
      ->add_option("--method", sim_cfg.methods,
                   "methods: ap1 ap2A ap2B nv1 nv2A nv2B")
      ->check(CLI::IsMember({"ap1", "ap2A", "ap2B", "nv1", "nv2A", "nv2B"}));
  simulate->add_option("--horizons", sim_cfg.horizons,
                       "prediction horizons (months)");
  simulate->add_option("--combine", sim_cfg.combine,
                       "mean | median | logit-mean")
      ->check(CLI::IsMember({"mean", "median", "logit-mean"}));
  simulate->add_option("--seed", sim_cfg.seed, "master seed");
  simulate->add_option("--covariance", sim_cfg.covariance_path,
                       "4x4 covariance CSV (overrides the default)");
  simulate->add_option("--out", sim_cfg.out_dir, "output directory");
  simulate->add_option("--workers", sim_cfg.workers, "worker threads");
  simulate->add_option("--config", sim_config_path,
                       "JSON config (overrides flags)");
  simulate->add_option("--from-manifest", sim_manifest_path,
                       "re-run a previous simulate from its manifest");

  // assess ------------------------------------------------------------
  AssessConfig assess_cfg;
  CLI::App* assess = app.add_subcommand(
      "assess", "recompute report statistics from a predictions file");
  assess->add_option("--data", assess_cfg.data_path, "dataset CSV")
      ->required();
  assess->add_option("--schema", assess_cfg.schema_path, "schema JSON");
  assess->add_option("--predictions", assess_cfg.predictions_path,
                     "predictions CSV from crossval/predict")
      ->required();
  assess->add_option("--out", assess_cfg.out_dir, "output directory");
  assess->add_option("--time-col", assess_cfg.time_col, "time column name");
  assess->add_option("--status-col", assess_cfg.status_col,
                     "status column name");
  assess->add_option("--missing-token", assess_cfg.missing_token,
                     "missing token");
  assess->add_option("--label", assess_cfg.method_label,
                     "method label for the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (fit->parsed()) {
      run_fit(fit_cfg);
    } else if (predict->parsed()) {
      run_predict(pred_cfg);
    } else if (crossval->parsed()) {
      if (!cv_manifest_path.empty()) {
        const json manifest = load_json_file(cv_manifest_path);
        if (manifest.value("command", "") != "crossval")
          throw ValidationError("manifest is not from a crossval run");
        CrossvalConfig from_manifest;
        from_manifest.out_dir = cv_cfg.out_dir;
        from_manifest.workers = cv_cfg.workers;
        crossval_from_json(manifest.at("config"), from_manifest);
        const std::string recorded =
            manifest.at("inputs").at("data").at("fnv1a").get<std::string>();
        if (file_fnv1a_hex(from_manifest.data_path) != recorded)
          throw ValidationError(
              "input data changed since the manifest was written");
        run_crossval(from_manifest);
      } else {
        if (!cv_config_path.empty())
          crossval_from_json(load_json_file(cv_config_path), cv_cfg);
        run_crossval(cv_cfg);
      }
    } else if (simulate->parsed()) {
      if (!sim_manifest_path.empty()) {
        const json manifest = load_json_file(sim_manifest_path);
        if (manifest.value("command", "") != "simulate")
          throw ValidationError("manifest is not from a simulate run");
        SimulateConfig from_manifest;
        from_manifest.out_dir = sim_cfg.out_dir;
        from_manifest.workers = sim_cfg.workers;
        simulate_from_json(manifest.at("config"), from_manifest);
        run_simulate(from_manifest);
      } else {
        if (!sim_config_path.empty())
          simulate_from_json(load_json_file(sim_config_path), sim_cfg);
        run_simulate(sim_cfg);
      }
    } else if (assess->parsed()) {
      run_assess(assess_cfg);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("survmi");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace survmi::cli
