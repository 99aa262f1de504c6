#include "survmi/simulation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <atomic>
#include <cmath>

#include "survmi/assessment.hpp"
#include "survmi/parallel.hpp"
#include "survmi/rng.hpp"

namespace survmi {

namespace {

constexpr std::uint64_t kTagData = 11;
constexpr std::uint64_t kTagAmputate = 12;
constexpr std::uint64_t kTagRun = 13;

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

const char* mechanism_name(Mechanism m) {
  return m == Mechanism::MCAR ? "mcar" : "mar";
}

Mechanism mechanism_from_name(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "mcar") return Mechanism::MCAR;
  if (lower == "mar") return Mechanism::MAR;
  throw ParameterError("unknown mechanism '" + name + "' (use mcar or mar)");
}

Eigen::Matrix4d default_covariance() {
  // Stand-in correlation structure for the standardized continuous
  // covariates of a cardiology cohort (age, renal function, haemoglobin,
  // ejection fraction).
  Eigen::Matrix4d sigma;
  sigma << 1.00, -0.45, -0.19, 0.05,  //
      -0.45, 1.00, 0.40, -0.04,       //
      -0.19, 0.40, 1.00, 0.03,        //
      0.05, -0.04, 0.03, 1.00;
  return sigma;
}

ScenarioConfig::ScenarioConfig()
    : beta1(std::log(1.1)),
      fixed_betas{std::log(1.2), std::log(0.85), std::log(0.75)},
      covariance(default_covariance()) {}

ScenarioConfig ScenarioConfig::from_id(int id, Mechanism mech) {
  ScenarioConfig cfg;
  cfg.scenario_id = id;
  cfg.mechanism = mech;
  switch (id) {
    case 1:
      cfg.beta1 = std::log(1.1);
      cfg.missing_fraction = 0.10;
      break;
    case 2:
      cfg.beta1 = std::log(2.0);
      cfg.missing_fraction = 0.10;
      break;
    case 3:
      cfg.beta1 = std::log(1.1);
      cfg.missing_fraction = 0.50;
      break;
    case 4:
      cfg.beta1 = std::log(2.0);
      cfg.missing_fraction = 0.50;
      break;
    default:
      throw ParameterError("scenario id must be 1..4");
  }
  return cfg;
}

Eigen::Vector4d ScenarioConfig::betas() const {
  Eigen::Vector4d b;
  b << beta1, fixed_betas[0], fixed_betas[1], fixed_betas[2];
  return b;
}

void ScenarioConfig::validate() const {
  if (n < 2 || simulations < 1 || replicates < 1 || K < 1 || L < 2)
    throw ParameterError("scenario counts must be positive (n >= 2, L >= 2)");
  if (missing_fraction <= 0.0 || missing_fraction >= 1.0)
    throw ParameterError("missing fraction must lie in (0,1)");
  if (lambda <= 0.0) throw ParameterError("baseline hazard must be positive");
  if (censor_interval[0] <= 0.0 || censor_interval[1] <= censor_interval[0])
    throw ParameterError("censoring interval must be positive and ordered");
  if (admin_censor <= 0.0)
    throw ParameterError("administrative censoring time must be positive");
  if (!covariance.isApprox(covariance.transpose(), 1e-12))
    throw ParameterError("covariance must be symmetric");
  Eigen::LLT<Eigen::Matrix4d> llt(covariance);
  if (llt.info() != Eigen::Success)
    throw ParameterError("covariance must be positive-definite");
}

std::vector<ScenarioConfig> scenario_grid() {
  std::vector<ScenarioConfig> grid;
  for (int id = 1; id <= 4; ++id)
    for (Mechanism mech : {Mechanism::MCAR, Mechanism::MAR})
      grid.push_back(ScenarioConfig::from_id(id, mech));
  return grid;
}

SimulatedDataset gen_dataset(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const int n = cfg.n;
  Eigen::LLT<Eigen::Matrix4d> llt(cfg.covariance);
  const Eigen::Matrix4d chol = llt.matrixL();
  const Eigen::Vector4d beta = cfg.betas();

  SimulatedDataset sim;
  sim.lambda = cfg.lambda;
  sim.linear_predictor.resize(n);
  SurvivalDataset& d = sim.data;
  d.time.resize(n);
  d.status.resize(n);
  d.predictors.resize(n, 4);
  d.missing.setZero(n, 4);
  d.columns = {{"x1", ColumnKind::Continuous, 0, {}},
               {"x2", ColumnKind::Continuous, 0, {}},
               {"x3", ColumnKind::Continuous, 0, {}},
               {"x4", ColumnKind::Continuous, 0, {}}};

  Rng rng(derive_seed(seed, kTagData));
  Eigen::Vector4d z;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) z[j] = rng.normal();
    const Eigen::Vector4d x = chol * z;
    d.predictors.row(i) = x.transpose();
    const double eta = x.dot(beta);
    sim.linear_predictor[i] = eta;

    const double u = rng.uniform_pos();
    const double event_time = -std::log(u) / (cfg.lambda * std::exp(eta));
    const double censor_time =
        cfg.censor_interval[0] +
        rng.uniform() * (cfg.censor_interval[1] - cfg.censor_interval[0]);
    const double cutoff = std::min(censor_time, cfg.admin_censor);
    d.time[i] = std::min(event_time, cutoff);
    d.status[i] = (event_time <= cutoff) ? 1 : 0;
  }
  return sim;
}

void induce_mcar(SurvivalDataset& data, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw ParameterError("missing fraction must lie in (0,1)");
  Rng rng(derive_seed(seed, kTagAmputate));
  for (Eigen::Index i = 0; i < data.n(); ++i)
    if (rng.uniform() < fraction) data.missing(i, 0) = 1;
}

void induce_mar(SurvivalDataset& data, double fraction, std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0)
    throw ParameterError("missing fraction must lie in (0,1)");
  if (data.p() < 2)
    throw ParameterError("MAR amputation needs the X2 column");
  const Eigen::Index n = data.n();
  const double x2_min = data.predictors.col(1).minCoeff();
  const double x2_max = data.predictors.col(1).maxCoeff();
  if (x2_max <= x2_min)
    throw DegenerateError("X2 is constant; MAR probabilities are undefined");

  Eigen::VectorXd x2_star(n);
  for (Eigen::Index i = 0; i < n; ++i)
    x2_star[i] = (data.predictors(i, 1) - x2_min) / (x2_max - x2_min);
  const double x2_mean = x2_star.mean();

  // Expected clipped fraction is continuous and non-decreasing in M;
  // bisect until it is within half a percentage point of the target.
  const auto expected = [&](double m) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      total += std::min(x2_star[i] * m / x2_mean, 1.0);
    return total / static_cast<double>(n);
  };
  double lo = 0.0;
  double hi = 1.0;
  while (expected(hi) < fraction && hi < 1e6) hi *= 2.0;
  double m = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    m = 0.5 * (lo + hi);
    const double e = expected(m);
    if (std::abs(e - fraction) <= 0.005) break;
    if (e < fraction)
      lo = m;
    else
      hi = m;
  }
  if (std::abs(expected(m) - fraction) > 0.005)
    throw DegenerateError("could not calibrate the MAR missing fraction");

  Rng rng(derive_seed(seed, kTagAmputate));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = std::min(x2_star[i] * m / x2_mean, 1.0);
    if (rng.uniform() < p) data.missing(i, 0) = 1;
  }
}

void induce_missing(SurvivalDataset& data, Mechanism mechanism,
                    double fraction, std::uint64_t seed) {
  if (mechanism == Mechanism::MCAR)
    induce_mcar(data, fraction, seed);
  else
    induce_mar(data, fraction, seed);
}

ScenarioRunResult run_scenario(
    const ScenarioConfig& cfg, std::span<const Method> methods,
    std::span<const double> horizons, const PipelineOptions& options,
    const std::function<void(std::size_t, std::size_t)>& progress) {
  cfg.validate();
  if (methods.empty()) throw ParameterError("run_scenario needs methods");
  if (horizons.empty()) throw ParameterError("run_scenario needs horizons");

  const int S = cfg.simulations;
  const int R = cfg.replicates;
  const std::size_t n_methods = methods.size();
  const std::size_t n_horizons = horizons.size();

  ScenarioRunResult result;
  result.methods.assign(methods.begin(), methods.end());
  result.horizons.assign(horizons.begin(), horizons.end());

  // Generate and amputate the S datasets up front; seeds are recorded so
  // any run can be reproduced from the manifest.
  std::vector<SimulatedDataset> sims(static_cast<std::size_t>(S));
  result.dataset_seeds.resize(static_cast<std::size_t>(S));
  result.run_seeds.assign(static_cast<std::size_t>(S),
                          std::vector<std::uint64_t>(static_cast<std::size_t>(R)));
  result.missing_stratum.resize(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    const std::uint64_t data_seed =
        derive_seed(cfg.seed, kTagData, static_cast<std::uint64_t>(s));
    result.dataset_seeds[static_cast<std::size_t>(s)] = data_seed;
    sims[static_cast<std::size_t>(s)] = gen_dataset(cfg, data_seed);
    induce_missing(sims[static_cast<std::size_t>(s)].data, cfg.mechanism,
                   cfg.missing_fraction,
                   derive_seed(cfg.seed, kTagAmputate,
                               static_cast<std::uint64_t>(s)));
    auto& stratum = result.missing_stratum[static_cast<std::size_t>(s)];
    stratum.resize(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i)
      stratum[static_cast<std::size_t>(i)] =
          sims[static_cast<std::size_t>(s)].data.row_has_missing(i);
    for (int r = 0; r < R; ++r)
      result.run_seeds[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)] =
          derive_seed(cfg.seed, kTagRun, static_cast<std::uint64_t>(s),
                      static_cast<std::uint64_t>(r));
  }

  result.truth.assign(n_horizons, std::vector<Eigen::VectorXd>(
                                      static_cast<std::size_t>(S)));
  for (std::size_t h = 0; h < n_horizons; ++h)
    for (int s = 0; s < S; ++s)
      result.truth[h][static_cast<std::size_t>(s)] =
          sims[static_cast<std::size_t>(s)].true_survival_at(horizons[h]);
  result.sim_time.resize(static_cast<std::size_t>(S));
  result.sim_status.resize(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s) {
    result.sim_time[static_cast<std::size_t>(s)] =
        sims[static_cast<std::size_t>(s)].data.time;
    result.sim_status[static_cast<std::size_t>(s)] =
        sims[static_cast<std::size_t>(s)].data.status;
  }

  // combined[m][h][s] is n x R.
  result.combined.assign(
      n_methods,
      std::vector<std::vector<Eigen::MatrixXd>>(
          n_horizons, std::vector<Eigen::MatrixXd>(
                          static_cast<std::size_t>(S),
                          Eigen::MatrixXd::Zero(cfg.n, R))));

  // One task per (simulation, replicate, method group); matched seeds
  // across methods make their comparisons paired. When both 2A and 2B are
  // requested they share imputations and fits, which is bitwise identical
  // to running them separately under the same seed.
  std::vector<std::vector<std::size_t>> groups;
  {
    std::size_t idx_2a = n_methods;
    std::size_t idx_2b = n_methods;
    for (std::size_t m = 0; m < n_methods; ++m) {
      if (result.methods[m] == Method::Ap2A) idx_2a = m;
      if (result.methods[m] == Method::Ap2B) idx_2b = m;
    }
    const bool pair_2ab = idx_2a < n_methods && idx_2b < n_methods;
    for (std::size_t m = 0; m < n_methods; ++m) {
      if (pair_2ab && m == idx_2b) continue;
      if (pair_2ab && m == idx_2a)
        groups.push_back({idx_2a, idx_2b});
      else
        groups.push_back({m});
    }
  }

  const std::size_t tasks = static_cast<std::size_t>(S) *
                            static_cast<std::size_t>(R) * groups.size();
  std::atomic<std::size_t> done{0};
  PipelineOptions inner = options;
  inner.workers = 1;
  parallel_for(tasks, options.workers, [&](std::size_t t) {
    const std::size_t g = t % groups.size();
    const std::size_t sr = t / groups.size();
    const int r = static_cast<int>(sr % static_cast<std::size_t>(R));
    const int s = static_cast<int>(sr / static_cast<std::size_t>(R));
    CvSpec cv;
    cv.folds = cfg.L;
    cv.K = cfg.K;
    cv.seed =
        result.run_seeds[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)];
    const auto store = [&](std::size_t m, const PredictionSet& ps) {
      for (std::size_t h = 0; h < n_horizons; ++h)
        result.combined[m][h][static_cast<std::size_t>(s)].col(r) =
            ps.combined.col(static_cast<Eigen::Index>(h));
    };
    if (groups[g].size() == 2) {
      const auto [a, b] = run_approach2_cv_both(
          sims[static_cast<std::size_t>(s)].data, cv, horizons, inner);
      store(groups[g][0], a);
      store(groups[g][1], b);
    } else {
      const std::size_t m = groups[g][0];
      store(m, run_method_cv(result.methods[m],
                             sims[static_cast<std::size_t>(s)].data, cv,
                             horizons, inner));
    }
    if (progress) progress(done.fetch_add(1) + 1, tasks);
  });

  // Summaries per (method, horizon, stratum).
  const std::array<const char*, 3> stratum_names{"all", "missing", "observed"};
  for (std::size_t m = 0; m < n_methods; ++m) {
    for (std::size_t h = 0; h < n_horizons; ++h) {
      for (std::size_t stratum = 0; stratum < 3; ++stratum) {
        std::vector<double> brier_all;
        std::vector<double> per_sim_sd;
        std::vector<double> per_sim_bias;
        std::vector<double> per_sim_r;
        bool brier_ok = true;

        for (int s = 0; s < S; ++s) {
          const auto& stratum_mask =
              result.missing_stratum[static_cast<std::size_t>(s)];
          std::vector<int> keep;
          for (int i = 0; i < cfg.n; ++i) {
            const bool is_missing =
                stratum_mask[static_cast<std::size_t>(i)] != 0;
            if (stratum == 0 || (stratum == 1 && is_missing) ||
                (stratum == 2 && !is_missing))
              keep.push_back(i);
          }
          if (keep.empty()) {
            brier_ok = false;
            continue;
          }
          const SimulatedDataset& sim = sims[static_cast<std::size_t>(s)];
          Eigen::VectorXd sub_time(static_cast<Eigen::Index>(keep.size()));
          Eigen::VectorXi sub_status(static_cast<Eigen::Index>(keep.size()));
          Eigen::VectorXd sub_truth(static_cast<Eigen::Index>(keep.size()));
          for (std::size_t i = 0; i < keep.size(); ++i) {
            sub_time[static_cast<Eigen::Index>(i)] = sim.data.time[keep[i]];
            sub_status[static_cast<Eigen::Index>(i)] = sim.data.status[keep[i]];
            sub_truth[static_cast<Eigen::Index>(i)] =
                result.truth[h][static_cast<std::size_t>(s)][keep[i]];
          }
          const Eigen::MatrixXd& all_preds =
              result.combined[m][h][static_cast<std::size_t>(s)];
          Eigen::MatrixXd sub_preds(static_cast<Eigen::Index>(keep.size()), R);
          for (std::size_t i = 0; i < keep.size(); ++i)
            sub_preds.row(static_cast<Eigen::Index>(i)) = all_preds.row(keep[i]);

          std::vector<double> brier_r;
          for (int r = 0; r < R; ++r) {
            const double b =
                brier_ipcw(sub_preds.col(r), sub_time, sub_status, horizons[h]);
            brier_r.push_back(b);
            brier_all.push_back(b);
          }
          per_sim_sd.push_back(sample_sd(brier_r));
          // Truth windows can be empty for individual simulations at desk
          // scale; summaries average over the simulations where they are
          // defined.
          try {
            per_sim_bias.push_back(
                bias_summary(sub_preds.rowwise().mean(), sub_truth));
          } catch (const EmptyFilterError&) {
          }

          if (R >= 2) {
            // Truth filter window is evaluated on all subjects; the
            // stratum mask narrows which deviations are pooled.
            std::vector<std::uint8_t> keep_mask(
                static_cast<std::size_t>(cfg.n), 0);
            for (int i : keep) keep_mask[static_cast<std::size_t>(i)] = 1;
            const std::vector<Eigen::MatrixXd> one_pred{all_preds};
            const std::vector<Eigen::VectorXd> one_truth{
                result.truth[h][static_cast<std::size_t>(s)]};
            const std::vector<std::vector<std::uint8_t>> one_mask{
                std::move(keep_mask)};
            try {
              per_sim_r.push_back(
                  simulation_variation_R(one_pred, one_truth, &one_mask));
            } catch (const EmptyFilterError&) {
            }
          }
        }

        const std::string method = method_name(result.methods[m]);
        if (brier_ok && !brier_all.empty()) {
          double mean = 0.0;
          for (double b : brier_all) mean += b;
          mean /= static_cast<double>(brier_all.size());
          result.report.rows.push_back({method, cfg.K, horizons[h],
                                        stratum_names[stratum], "brier_mean",
                                        mean});
          double sd_mean = 0.0;
          for (double sd : per_sim_sd) sd_mean += sd;
          sd_mean /= static_cast<double>(per_sim_sd.size());
          result.report.rows.push_back({method, cfg.K, horizons[h],
                                        stratum_names[stratum], "brier_sd",
                                        sd_mean});
        }
        if (!per_sim_bias.empty()) {
          double mean = 0.0;
          for (double b : per_sim_bias) mean += b;
          mean /= static_cast<double>(per_sim_bias.size());
          result.report.rows.push_back({method, cfg.K, horizons[h],
                                        stratum_names[stratum], "bias_mean",
                                        mean});
        }
        if (!per_sim_r.empty()) {
          double mean = 0.0;
          for (double r : per_sim_r) mean += r;
          mean /= static_cast<double>(per_sim_r.size());
          result.report.rows.push_back({method, cfg.K, horizons[h],
                                        stratum_names[stratum],
                                        "R_replicates", mean});
        }
      }
    }
  }
  return result;
}

}  // namespace survmi
