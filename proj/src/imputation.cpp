#include "survmi/imputation.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "survmi/parallel.hpp"
#include "survmi/rng.hpp"
#include "survmi/survival_core.hpp"

namespace survmi {

namespace {

constexpr double kLinkClamp = 30.0;

// Working layout: p predictor columns followed by the two outcome
// surrogates (Nelson-Aalen value, event indicator). Surrogates are observed
// on calibration rows and missing on validation rows.
struct Working {
  Eigen::MatrixXd values;  // n_total x (p + 2)
  Mask missing;
  std::vector<ColumnKind> kinds;
  std::vector<int> levels;
  std::vector<std::vector<double>> observed_pool;  // per column
  std::vector<int> incomplete;                     // column indices, in order
  Eigen::Index n_total = 0;
  Eigen::Index p = 0;
};

Working make_working(const AugmentedDataset& aug) {
  Working w;
  w.n_total = aug.n_total();
  w.p = aug.p();
  const Eigen::Index cols = w.p + 2;
  w.values.setZero(w.n_total, cols);
  w.missing.setZero(w.n_total, cols);
  w.kinds.resize(static_cast<std::size_t>(cols));
  w.levels.assign(static_cast<std::size_t>(cols), 0);

  for (Eigen::Index j = 0; j < w.p; ++j) {
    const ColumnInfo& col = aug.calibration.columns[static_cast<std::size_t>(j)];
    w.kinds[static_cast<std::size_t>(j)] = col.kind;
    w.levels[static_cast<std::size_t>(j)] = col.levels;
  }
  w.kinds[static_cast<std::size_t>(w.p)] = ColumnKind::Continuous;
  w.kinds[static_cast<std::size_t>(w.p) + 1] = ColumnKind::Binary;

  const Eigen::Index ncal = aug.n_cal();
  for (Eigen::Index i = 0; i < ncal; ++i) {
    for (Eigen::Index j = 0; j < w.p; ++j) {
      w.values(i, j) = aug.calibration.predictors(i, j);
      w.missing(i, j) = aug.calibration.missing(i, j);
    }
    w.values(i, w.p) = aug.na_transform[i];
    w.values(i, w.p + 1) = static_cast<double>(aug.calibration.status[i]);
  }
  for (Eigen::Index v = 0; v < aug.n_val(); ++v) {
    const Eigen::Index i = ncal + v;
    for (Eigen::Index j = 0; j < w.p; ++j) {
      w.values(i, j) = aug.validation.values(v, j);
      w.missing(i, j) = aug.validation.missing(v, j);
    }
    w.missing(i, w.p) = 1;
    w.missing(i, w.p + 1) = 1;
  }

  w.observed_pool.resize(static_cast<std::size_t>(cols));
  for (Eigen::Index j = 0; j < cols; ++j) {
    auto& pool = w.observed_pool[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < w.n_total; ++i)
      if (!w.missing(i, j)) pool.push_back(w.values(i, j));
    bool has_missing = false;
    for (Eigen::Index i = 0; i < w.n_total && !has_missing; ++i)
      has_missing = w.missing(i, j) != 0;
    if (has_missing) w.incomplete.push_back(static_cast<int>(j));
    if (pool.empty() && j < w.p)
      throw UnusableColumnError(
          "column '" +
          aug.calibration.columns[static_cast<std::size_t>(j)].name +
          "' has no observed values");
  }
  return w;
}

// Regression design for imputing column `target`: intercept plus every
// other working column, categoricals expanded to dummies against level 0.
Eigen::Index regression_width(const Working& w, int target) {
  Eigen::Index d = 1;
  for (Eigen::Index c = 0; c < w.values.cols(); ++c) {
    if (static_cast<int>(c) == target) continue;
    if (w.kinds[static_cast<std::size_t>(c)] == ColumnKind::Categorical)
      d += w.levels[static_cast<std::size_t>(c)] - 1;
    else
      d += 1;
  }
  return d;
}

void fill_regression_row(const Working& w, int target, Eigen::Index i,
                         Eigen::VectorXd& row) {
  Eigen::Index k = 0;
  row[k++] = 1.0;
  for (Eigen::Index c = 0; c < w.values.cols(); ++c) {
    if (static_cast<int>(c) == target) continue;
    if (w.kinds[static_cast<std::size_t>(c)] == ColumnKind::Categorical) {
      const int lvl = static_cast<int>(w.values(i, c));
      for (int l = 1; l < w.levels[static_cast<std::size_t>(c)]; ++l)
        row[k++] = (lvl == l) ? 1.0 : 0.0;
    } else {
      row[k++] = w.values(i, c);
    }
  }
}

struct Split {
  Eigen::MatrixXd z_obs;
  Eigen::MatrixXd z_mis;
  Eigen::VectorXd y_obs;
  std::vector<Eigen::Index> mis_rows;
};

Split split_rows(const Working& w, int target) {
  Split s;
  const Eigen::Index d = regression_width(w, target);
  Eigen::Index n_obs = 0;
  for (Eigen::Index i = 0; i < w.n_total; ++i)
    if (!w.missing(i, target)) ++n_obs;
  s.z_obs.resize(n_obs, d);
  s.y_obs.resize(n_obs);
  s.z_mis.resize(w.n_total - n_obs, d);
  Eigen::VectorXd row(d);
  Eigen::Index io = 0;
  Eigen::Index im = 0;
  for (Eigen::Index i = 0; i < w.n_total; ++i) {
    fill_regression_row(w, target, i, row);
    if (!w.missing(i, target)) {
      s.z_obs.row(io) = row;
      s.y_obs[io] = w.values(i, target);
      ++io;
    } else {
      s.z_mis.row(im) = row;
      s.mis_rows.push_back(i);
      ++im;
    }
  }
  return s;
}

Eigen::MatrixXd ridged_crossprod(const Eigen::MatrixXd& z, double ridge) {
  Eigen::MatrixXd a = z.transpose() * z;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    a(i, i) += ridge * std::max(a(i, i), 1.0);
  return a;
}

// Lower Cholesky factor of a covariance, with diagonal jitter escalation.
bool chol_lower(const Eigen::MatrixXd& cov, Eigen::MatrixXd& lower) {
  Eigen::MatrixXd c = cov;
  double jitter = 0.0;
  for (int attempt = 0; attempt < 4; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success) {
      lower = llt.matrixL();
      return true;
    }
    jitter = (jitter == 0.0) ? 1e-10 : jitter * 100.0;
    c = cov;
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      c(i, i) += jitter * std::max(std::abs(cov(i, i)), 1.0);
  }
  return false;
}

void donor_fallback(Working& w, int target, const std::vector<Eigen::Index>& rows,
                    Rng& rng, int* fallbacks) {
  const auto& pool = w.observed_pool[static_cast<std::size_t>(target)];
  for (Eigen::Index i : rows)
    w.values(i, target) = pool[rng.below(pool.size())];
  if (fallbacks) ++*fallbacks;
}

// Predictive mean matching with a Bayesian linear-regression parameter
// draw: observed predictions use the least-squares estimate, missing-cell
// predictions the posterior draw; each missing cell copies the observed
// value of one of the `donors` nearest matches.
void impute_continuous(Working& w, int target, const ImputeOptions& opt,
                       Rng& rng, int* fallbacks) {
  Split s = split_rows(w, target);
  const Eigen::Index n_obs = s.z_obs.rows();
  const Eigen::Index d = s.z_obs.cols();

  const Eigen::MatrixXd a = ridged_crossprod(s.z_obs, opt.ridge);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) {
    donor_fallback(w, target, s.mis_rows, rng, fallbacks);
    return;
  }
  const Eigen::VectorXd beta_hat = ldlt.solve(s.z_obs.transpose() * s.y_obs);
  if (!beta_hat.allFinite()) {
    donor_fallback(w, target, s.mis_rows, rng, fallbacks);
    return;
  }
  const Eigen::VectorXd eta_obs = s.z_obs * beta_hat;
  const double rss = (s.y_obs - eta_obs).squaredNorm();
  const double df = std::max<double>(static_cast<double>(n_obs - d), 1.0);
  const double sigma = std::sqrt(std::max(rss, 0.0) / rng.chisq(df));

  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd lower;
  Eigen::VectorXd beta_star = beta_hat;
  if (chol_lower(cov, lower)) {
    Eigen::VectorXd z(d);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
    beta_star += sigma * (lower * z);
  }
  const Eigen::VectorXd eta_mis = s.z_mis * beta_star;

  // Donor search over observed predictions sorted once per column visit.
  std::vector<std::pair<double, Eigen::Index>> sorted(
      static_cast<std::size_t>(n_obs));
  for (Eigen::Index i = 0; i < n_obs; ++i)
    sorted[static_cast<std::size_t>(i)] = {eta_obs[i], i};
  std::sort(sorted.begin(), sorted.end());

  const std::size_t donors =
      std::min<std::size_t>(static_cast<std::size_t>(opt.pmm_donors),
                            static_cast<std::size_t>(n_obs));
  std::vector<Eigen::Index> candidates(donors);
  for (std::size_t m = 0; m < s.mis_rows.size(); ++m) {
    const double target_eta = eta_mis[static_cast<Eigen::Index>(m)];
    auto hi = std::lower_bound(
        sorted.begin(), sorted.end(),
        std::make_pair(target_eta, static_cast<Eigen::Index>(-1)));
    auto lo = hi;
    for (std::size_t c = 0; c < donors; ++c) {
      if (lo == sorted.begin()) {
        candidates[c] = hi->second;
        ++hi;
      } else if (hi == sorted.end()) {
        --lo;
        candidates[c] = lo->second;
      } else if (target_eta - std::prev(lo)->first <
                 hi->first - target_eta) {
        --lo;
        candidates[c] = lo->second;
      } else {
        candidates[c] = hi->second;
        ++hi;
      }
    }
    const Eigen::Index pick =
        candidates[rng.below(static_cast<std::uint64_t>(donors))];
    w.values(s.mis_rows[m], target) = s.y_obs[pick];
  }
}

bool logistic_fit(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                  double ridge, Eigen::VectorXd& beta, Eigen::MatrixXd& cov) {
  const Eigen::Index d = z.cols();
  beta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd eta(z.rows());
  Eigen::VectorXd prob(z.rows());
  Eigen::VectorXd weight(z.rows());
  for (int iter = 0; iter < 25; ++iter) {
    eta = z * beta;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double e = std::clamp(eta[i], -kLinkClamp, kLinkClamp);
      prob[i] = 1.0 / (1.0 + std::exp(-e));
      weight[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-10);
    }
    Eigen::MatrixXd a = z.transpose() * weight.asDiagonal() * z;
    for (Eigen::Index i = 0; i < d; ++i)
      a(i, i) += ridge * std::max(a(i, i), 1.0);
    const Eigen::VectorXd score = z.transpose() * (y - prob);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) return false;
    const Eigen::VectorXd step = ldlt.solve(score);
    if (!step.allFinite()) return false;
    beta += step;
    if (step.cwiseAbs().maxCoeff() < 1e-8) {
      cov = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
      return cov.allFinite();
    }
  }
  eta = z * beta;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = std::clamp(eta[i], -kLinkClamp, kLinkClamp);
    prob[i] = 1.0 / (1.0 + std::exp(-e));
    weight[i] = std::max(prob[i] * (1.0 - prob[i]), 1e-10);
  }
  Eigen::MatrixXd a = z.transpose() * weight.asDiagonal() * z;
  for (Eigen::Index i = 0; i < d; ++i)
    a(i, i) += ridge * std::max(a(i, i), 1.0);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  if (ldlt.info() != Eigen::Success) return false;
  cov = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
  return beta.allFinite() && cov.allFinite();
}

// Maximum-likelihood logistic fit perturbed by a normal draw with the
// estimated coefficient covariance, then Bernoulli draws per missing cell.
void impute_binary(Working& w, int target, const ImputeOptions& opt, Rng& rng,
                   int* fallbacks) {
  Split s = split_rows(w, target);
  const double mean = s.y_obs.mean();
  if (mean <= 0.0 || mean >= 1.0) {
    donor_fallback(w, target, s.mis_rows, rng, fallbacks);
    return;
  }
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;
  if (!logistic_fit(s.z_obs, s.y_obs, opt.ridge, beta, cov)) {
    donor_fallback(w, target, s.mis_rows, rng, fallbacks);
    return;
  }
  Eigen::MatrixXd lower;
  if (chol_lower(cov, lower)) {
    Eigen::VectorXd z(beta.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    beta += lower * z;
  }
  for (std::size_t m = 0; m < s.mis_rows.size(); ++m) {
    const double e = std::clamp(
        s.z_mis.row(static_cast<Eigen::Index>(m)).dot(beta), -kLinkClamp,
        kLinkClamp);
    const double p = 1.0 / (1.0 + std::exp(-e));
    w.values(s.mis_rows[m], target) = (rng.uniform() < p) ? 1.0 : 0.0;
  }
}

// Multinomial logit against level 0, Newton on the stacked parameter
// vector, normal perturbation, categorical draws.
void impute_categorical(Working& w, int target, const ImputeOptions& opt,
                        Rng& rng, int* fallbacks) {
  Split s = split_rows(w, target);
  const int levels = w.levels[static_cast<std::size_t>(target)];
  const Eigen::Index d = s.z_obs.cols();
  const Eigen::Index n_obs = s.z_obs.rows();
  const int nb = levels - 1;  // non-reference classes
  const Eigen::Index dim = static_cast<Eigen::Index>(nb) * d;

  std::vector<int> class_count(static_cast<std::size_t>(levels), 0);
  for (Eigen::Index i = 0; i < n_obs; ++i) {
    const int lvl = static_cast<int>(s.y_obs[i]);
    if (lvl < 0 || lvl >= levels) {
      donor_fallback(w, target, s.mis_rows, rng, fallbacks);
      return;
    }
    ++class_count[static_cast<std::size_t>(lvl)];
  }
  int seen = 0;
  for (int c : class_count) seen += (c > 0) ? 1 : 0;
  if (seen < 2) {
    donor_fallback(w, target, s.mis_rows, rng, fallbacks);
    return;
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXd probs(n_obs, levels);
  bool ok = false;
  Eigen::MatrixXd hess(dim, dim);
  for (int iter = 0; iter < 25; ++iter) {
    for (Eigen::Index i = 0; i < n_obs; ++i) {
      double denom = 1.0;
      for (int c = 0; c < nb; ++c) {
        const double e = std::clamp(
            s.z_obs.row(i).dot(theta.segment(c * d, d)), -kLinkClamp,
            kLinkClamp);
        probs(i, c + 1) = std::exp(e);
        denom += probs(i, c + 1);
      }
      probs(i, 0) = 1.0;
      probs.row(i) /= denom;
    }
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    hess.setZero();
    for (Eigen::Index i = 0; i < n_obs; ++i) {
      const int lvl = static_cast<int>(s.y_obs[i]);
      for (int a = 0; a < nb; ++a) {
        const double ya = (lvl == a + 1) ? 1.0 : 0.0;
        grad.segment(a * d, d) +=
            (ya - probs(i, a + 1)) * s.z_obs.row(i).transpose();
        for (int b = 0; b < nb; ++b) {
          const double wab = probs(i, a + 1) *
                             ((a == b ? 1.0 : 0.0) - probs(i, b + 1));
          hess.block(a * d, b * d, d, d).noalias() +=
              wab * s.z_obs.row(i).transpose() * s.z_obs.row(i);
        }
      }
    }
    for (Eigen::Index i = 0; i < dim; ++i)
      hess(i, i) += opt.ridge * std::max(hess(i, i), 1.0);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    if (ldlt.info() != Eigen::Success) break;
    const Eigen::VectorXd step = ldlt.solve(grad);
    if (!step.allFinite()) break;
    theta += step;
    if (step.cwiseAbs().maxCoeff() < 1e-8) {
      ok = true;
      break;
    }
  }
  if (!ok) {
    donor_fallback(w, target, s.mis_rows, rng, fallbacks);
    return;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
  Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(dim, dim));
  Eigen::MatrixXd lower;
  if (chol_lower(cov, lower)) {
    Eigen::VectorXd z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = rng.normal();
    theta += lower * z;
  }

  std::vector<double> class_prob(static_cast<std::size_t>(levels));
  for (std::size_t m = 0; m < s.mis_rows.size(); ++m) {
    double denom = 1.0;
    class_prob[0] = 1.0;
    for (int c = 0; c < nb; ++c) {
      const double e = std::clamp(
          s.z_mis.row(static_cast<Eigen::Index>(m)).dot(
              theta.segment(c * d, d)),
          -kLinkClamp, kLinkClamp);
      class_prob[static_cast<std::size_t>(c) + 1] = std::exp(e);
      denom += class_prob[static_cast<std::size_t>(c) + 1];
    }
    double u = rng.uniform() * denom;
    int pick = levels - 1;
    double acc = 0.0;
    for (int c = 0; c < levels; ++c) {
      acc += class_prob[static_cast<std::size_t>(c)];
      if (u < acc) {
        pick = c;
        break;
      }
    }
    w.values(s.mis_rows[m], target) = static_cast<double>(pick);
  }
}

void run_sweeps(Working& w, const ImputeOptions& opt, Rng& rng,
                int* fallbacks) {
  // Initial fill: random draws from each column's observed values.
  for (int j : w.incomplete) {
    const auto& pool = w.observed_pool[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < w.n_total; ++i)
      if (w.missing(i, j)) w.values(i, j) = pool[rng.below(pool.size())];
  }
  for (int cycle = 0; cycle < opt.cycles; ++cycle) {
    for (int j : w.incomplete) {
      switch (w.kinds[static_cast<std::size_t>(j)]) {
        case ColumnKind::Continuous:
          impute_continuous(w, j, opt, rng, fallbacks);
          break;
        case ColumnKind::Binary:
          impute_binary(w, j, opt, rng, fallbacks);
          break;
        case ColumnKind::Categorical:
          impute_categorical(w, j, opt, rng, fallbacks);
          break;
      }
    }
  }
}

}  // namespace

AugmentedDataset build_augmented(const SurvivalDataset& calibration,
                                 const PredictorBlock& validation) {
  calibration.validate();
  if (validation.rows() > 0) {
    if (validation.cols() != calibration.p() ||
        validation.missing.cols() != calibration.p() ||
        validation.missing.rows() != validation.rows())
      throw ShapeError("validation predictor schema does not match calibration");
  }
  AugmentedDataset aug;
  aug.calibration = calibration;
  aug.validation = validation;
  if (validation.rows() == 0) {
    aug.validation.values.resize(0, calibration.p());
    aug.validation.missing.resize(0, calibration.p());
  }
  const StepFunction h = nelson_aalen(calibration.time, calibration.status);
  aug.na_transform.resize(calibration.n());
  for (Eigen::Index i = 0; i < calibration.n(); ++i)
    aug.na_transform[i] = h(calibration.time[i]);
  return aug;
}

Eigen::MatrixXd impute_single(const AugmentedDataset& augmented,
                              const ImputeOptions& options,
                              std::uint64_t copy_seed, int* fallback_draws) {
  Working w = make_working(augmented);
  Rng rng(copy_seed);
  run_sweeps(w, options, rng, fallback_draws);
  return w.values.leftCols(w.p);
}

ImputationStack impute_chained(const AugmentedDataset& augmented, int K,
                               const ImputeOptions& options,
                               std::uint64_t seed) {
  if (K < 1) throw ParameterError("imputation count K must be >= 1");
  ImputationStack stack;
  stack.copies.resize(static_cast<std::size_t>(K));
  stack.copy_seeds.resize(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    stack.copy_seeds[static_cast<std::size_t>(k)] =
        derive_seed(seed, static_cast<std::uint64_t>(k));

  // Imputed-cell mask (shared across copies by construction).
  const Eigen::Index p = augmented.p();
  stack.imputed.setZero(augmented.n_total(), p);
  for (Eigen::Index i = 0; i < augmented.n_cal(); ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      stack.imputed(i, j) = augmented.calibration.missing(i, j);
  for (Eigen::Index v = 0; v < augmented.n_val(); ++v)
    for (Eigen::Index j = 0; j < p; ++j)
      stack.imputed(augmented.n_cal() + v, j) = augmented.validation.missing(v, j);

  std::vector<int> fallbacks(static_cast<std::size_t>(K), 0);
  parallel_for(static_cast<std::size_t>(K), options.workers,
               [&](std::size_t k) {
                 stack.copies[k] = impute_single(
                     augmented, options, stack.copy_seeds[k], &fallbacks[k]);
               });
  for (int f : fallbacks) stack.fallback_draws += f;
  return stack;
}

}  // namespace survmi
