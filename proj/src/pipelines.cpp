#include "survmi/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survmi/parallel.hpp"
#include "survmi/rng.hpp"

namespace survmi {

namespace {

constexpr std::uint64_t kTagFold = 1;
constexpr std::uint64_t kTagImpute = 2;
constexpr std::uint64_t kTagNaiveImpute = 3;

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const NoEventsError& e) {
    throw NoEventsError(context + ": " + e.what());
  } catch (const SingularError& e) {
    throw SingularError(context + ": " + e.what());
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(context + ": " + e.what(), e.last_beta);
  } catch (const UnusableColumnError& e) {
    throw UnusableColumnError(context + ": " + e.what());
  } catch (const Error& e) {
    throw Error(context + ": " + e.what());
  }
}

double combine_row(const Eigen::MatrixXd& preds, Eigen::Index i,
                   CombineRule rule) {
  const Eigen::Index k = preds.cols();
  switch (rule) {
    case CombineRule::Mean:
      return preds.row(i).mean();
    case CombineRule::Median: {
      std::vector<double> v(static_cast<std::size_t>(k));
      for (Eigen::Index c = 0; c < k; ++c)
        v[static_cast<std::size_t>(c)] = preds(i, c);
      std::sort(v.begin(), v.end());
      const std::size_t mid = v.size() / 2;
      return (v.size() % 2 == 1) ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    }
    case CombineRule::LogitMean: {
      double total = 0.0;
      for (Eigen::Index c = 0; c < k; ++c) {
        const double p = std::clamp(preds(i, c), 1e-12, 1.0 - 1e-12);
        total += std::log(p / (1.0 - p));
      }
      const double mean = total / static_cast<double>(k);
      return 1.0 / (1.0 + std::exp(-mean));
    }
  }
  return preds.row(i).mean();
}

void finalize_combined(PredictionSet& ps) {
  const Eigen::Index n = ps.per_imputation.empty() ? 0
                                                   : ps.per_imputation[0].rows();
  ps.combined.resize(n, static_cast<Eigen::Index>(ps.horizons.size()));
  for (std::size_t h = 0; h < ps.horizons.size(); ++h)
    for (Eigen::Index i = 0; i < n; ++i)
      ps.combined(i, static_cast<Eigen::Index>(h)) =
          combine_row(ps.per_imputation[h], i, ps.combine);
}

PredictionSet make_prediction_set(Eigen::Index n, int K,
                                  std::span<const double> horizons,
                                  CombineRule combine) {
  PredictionSet ps;
  ps.horizons.assign(horizons.begin(), horizons.end());
  ps.per_imputation.assign(horizons.size(), Eigen::MatrixXd::Zero(n, K));
  ps.had_missing.assign(static_cast<std::size_t>(n), 0);
  ps.combine = combine;
  return ps;
}

std::vector<int> complement(const std::vector<int>& fold, int n) {
  std::vector<std::uint8_t> in_fold(static_cast<std::size_t>(n), 0);
  for (int i : fold) in_fold[static_cast<std::size_t>(i)] = 1;
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - fold.size());
  for (int i = 0; i < n; ++i)
    if (!in_fold[static_cast<std::size_t>(i)]) out.push_back(i);
  return out;
}

void check_cv(const SurvivalDataset& data, const CvSpec& cv) {
  data.validate();
  if (cv.K < 1) throw ParameterError("imputation count K must be >= 1");
  if (cv.folds < 2 || cv.folds > data.n())
    throw ParameterError("fold count must satisfy 2 <= L <= n");
}

// Fits one Cox model on the calibration part of a completed copy and
// fills the left-out rows' survival probabilities into column k.
void fit_and_predict(const Eigen::MatrixXd& completed, Eigen::Index n_cal,
                     const DesignSpec& spec, const Eigen::VectorXd& cal_time,
                     const Eigen::VectorXi& cal_status,
                     const std::vector<int>& val_idx,
                     std::span<const double> horizons, int k,
                     std::vector<Eigen::MatrixXd>& out) {
  const Eigen::MatrixXd design = spec.encode(completed.topRows(n_cal));
  const CoxFit fit = fit_cox(design, cal_time, cal_status);
  for (std::size_t j = 0; j < val_idx.size(); ++j) {
    const Eigen::VectorXd x = spec.encode_row(
        completed.row(n_cal + static_cast<Eigen::Index>(j)).transpose());
    const Eigen::VectorXd s = predict_survival(fit, x, horizons);
    for (std::size_t h = 0; h < horizons.size(); ++h)
      out[h](val_idx[j], k) = s[static_cast<Eigen::Index>(h)];
  }
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::Ap1:
      return "ap1";
    case Method::Ap2A:
      return "ap2A";
    case Method::Ap2B:
      return "ap2B";
    case Method::Nv1:
      return "nv1";
    case Method::Nv2A:
      return "nv2A";
    case Method::Nv2B:
      return "nv2B";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  if (name == "ap1") return Method::Ap1;
  if (name == "ap2A" || name == "ap2a") return Method::Ap2A;
  if (name == "ap2B" || name == "ap2b") return Method::Ap2B;
  if (name == "nv1") return Method::Nv1;
  if (name == "nv2A" || name == "nv2a") return Method::Nv2A;
  if (name == "nv2B" || name == "nv2b") return Method::Nv2B;
  throw ParameterError("unknown method '" + name + "'");
}

bool method_is_naive(Method m) {
  return m == Method::Nv1 || m == Method::Nv2A || m == Method::Nv2B;
}

FoldPartition make_folds(int n, int L, std::uint64_t seed) {
  if (L < 2 || L > n)
    throw ParameterError("fold count must satisfy 2 <= L <= n");
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(derive_seed(seed, kTagFold));
  for (int i = n - 1; i > 0; --i) {
    const std::uint64_t j = rng.below(static_cast<std::uint64_t>(i) + 1);
    std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
  }
  FoldPartition part;
  part.n = n;
  part.folds.resize(static_cast<std::size_t>(L));
  for (int i = 0; i < n; ++i)
    part.folds[static_cast<std::size_t>(i % L)].push_back(
        perm[static_cast<std::size_t>(i)]);
  for (auto& fold : part.folds) std::sort(fold.begin(), fold.end());
  return part;
}

PooledCoxModel pool_rubin(const std::vector<CoxFit>& fits, Variant variant,
                          const Eigen::MatrixXd* mean_imputed_design,
                          const Eigen::VectorXd* time,
                          const Eigen::VectorXi* status) {
  if (fits.empty()) throw ParameterError("pool_rubin needs at least one fit");
  const Eigen::Index q = fits[0].beta.size();
  for (const CoxFit& f : fits)
    if (f.beta.size() != q)
      throw ShapeError("pooled fits disagree on coefficient count");

  PooledCoxModel pooled;
  pooled.variant = variant;
  pooled.beta_mi = Eigen::VectorXd::Zero(q);
  for (const CoxFit& f : fits) pooled.beta_mi += f.beta;
  pooled.beta_mi /= static_cast<double>(fits.size());

  if (variant == Variant::V2A) {
    std::vector<double> knots;
    for (const CoxFit& f : fits)
      knots.insert(knots.end(), f.baseline_cumhaz.knots.begin(),
                   f.baseline_cumhaz.knots.end());
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    pooled.baseline_mi.knots = knots;
    pooled.baseline_mi.values.resize(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) {
      double total = 0.0;
      for (const CoxFit& f : fits) total += f.baseline_cumhaz(knots[i]);
      pooled.baseline_mi.values[i] = total / static_cast<double>(fits.size());
    }
  } else {
    if (mean_imputed_design == nullptr || time == nullptr || status == nullptr)
      throw ParameterError(
          "variant 2B needs the mean-imputed calibration design and outcomes");
    pooled.baseline_mi =
        breslow_baseline(*mean_imputed_design, *time, *status, pooled.beta_mi);
  }
  return pooled;
}

PredictionSet run_approach1_cv(const SurvivalDataset& data, const CvSpec& cv,
                               std::span<const double> horizons,
                               const PipelineOptions& options) {
  check_cv(data, cv);
  const int n = static_cast<int>(data.n());
  const DesignSpec spec = DesignSpec::from_dataset(data);
  PredictionSet ps = make_prediction_set(n, cv.K, horizons, options.combine);
  for (int i = 0; i < n; ++i)
    ps.had_missing[static_cast<std::size_t>(i)] = data.row_has_missing(i);

  // One fresh partition per imputation pass.
  std::vector<FoldPartition> partitions;
  partitions.reserve(static_cast<std::size_t>(cv.K));
  for (int k = 0; k < cv.K; ++k)
    partitions.push_back(make_folds(
        n, cv.folds, derive_seed(cv.seed, kTagFold, static_cast<std::uint64_t>(k))));

  const std::size_t tasks =
      static_cast<std::size_t>(cv.K) * static_cast<std::size_t>(cv.folds);
  parallel_for(tasks, options.workers, [&](std::size_t t) {
    const int k = static_cast<int>(t / static_cast<std::size_t>(cv.folds));
    const int f = static_cast<int>(t % static_cast<std::size_t>(cv.folds));
    try {
      const std::vector<int>& val_idx =
          partitions[static_cast<std::size_t>(k)].folds[static_cast<std::size_t>(f)];
      const std::vector<int> cal_idx = complement(val_idx, n);
      const SurvivalDataset calib = data.subset(cal_idx);
      const AugmentedDataset aug =
          build_augmented(calib, data.predictor_block(val_idx));
      const Eigen::MatrixXd completed = impute_single(
          aug, options.impute,
          derive_seed(cv.seed, kTagImpute, static_cast<std::uint64_t>(f),
                      static_cast<std::uint64_t>(k)));
      fit_and_predict(completed, calib.n(), spec, calib.time, calib.status,
                      val_idx, horizons, k, ps.per_imputation);
    } catch (const Error&) {
      rethrow_with_context("approach 1 (k=" + std::to_string(k) +
                           ", fold=" + std::to_string(f) + ")");
    }
  });
  finalize_combined(ps);
  return ps;
}

namespace {

// Shared implementation for 2A/2B; either output may be null.
void approach2_impl(const SurvivalDataset& data, const CvSpec& cv,
                    std::span<const double> horizons,
                    const PipelineOptions& options, PredictionSet* out_a,
                    PredictionSet* out_b) {
  check_cv(data, cv);
  const int n = static_cast<int>(data.n());
  const DesignSpec spec = DesignSpec::from_dataset(data);
  const FoldPartition partition =
      make_folds(n, cv.folds, derive_seed(cv.seed, kTagFold, 0));

  for (PredictionSet* ps : {out_a, out_b}) {
    if (!ps) continue;
    *ps = make_prediction_set(n, cv.K, horizons, options.combine);
    for (int i = 0; i < n; ++i)
      ps->had_missing[static_cast<std::size_t>(i)] = data.row_has_missing(i);
  }

  parallel_for(static_cast<std::size_t>(cv.folds), options.workers,
               [&](std::size_t f) {
    try {
      const std::vector<int>& val_idx = partition.folds[f];
      const std::vector<int> cal_idx = complement(val_idx, n);
      const SurvivalDataset calib = data.subset(cal_idx);
      const AugmentedDataset aug =
          build_augmented(calib, data.predictor_block(val_idx));
      const Eigen::Index n_cal = calib.n();

      ImputeOptions impute = options.impute;
      impute.workers = 1;
      ImputationStack stack = impute_chained(
          aug, cv.K, impute,
          derive_seed(cv.seed, kTagImpute, static_cast<std::uint64_t>(f)));
      stack.provenance = "fold=" + std::to_string(f);

      std::vector<CoxFit> fits;
      fits.reserve(static_cast<std::size_t>(cv.K));
      Eigen::MatrixXd mean_design;
      for (int k = 0; k < cv.K; ++k) {
        const Eigen::MatrixXd design =
            spec.encode(stack.copies[static_cast<std::size_t>(k)].topRows(n_cal));
        fits.push_back(fit_cox(design, calib.time, calib.status));
        if (k == 0)
          mean_design = design;
        else
          mean_design += design;
      }
      mean_design /= static_cast<double>(cv.K);

      for (PredictionSet* ps : {out_a, out_b}) {
        if (!ps) continue;
        const Variant variant = (ps == out_a) ? Variant::V2A : Variant::V2B;
        const PooledCoxModel pooled =
            (variant == Variant::V2A)
                ? pool_rubin(fits, Variant::V2A)
                : pool_rubin(fits, Variant::V2B, &mean_design, &calib.time,
                             &calib.status);
        for (int k = 0; k < cv.K; ++k) {
          const Eigen::MatrixXd& completed =
              stack.copies[static_cast<std::size_t>(k)];
          for (std::size_t j = 0; j < val_idx.size(); ++j) {
            const Eigen::VectorXd x = spec.encode_row(
                completed.row(n_cal + static_cast<Eigen::Index>(j)).transpose());
            const Eigen::VectorXd s = predict_survival(
                pooled.beta_mi, pooled.baseline_mi, x, horizons);
            for (std::size_t h = 0; h < horizons.size(); ++h)
              ps->per_imputation[h](val_idx[j], k) =
                  s[static_cast<Eigen::Index>(h)];
          }
        }
      }
    } catch (const Error&) {
      rethrow_with_context("approach 2 (fold=" + std::to_string(f) + ")");
    }
  });

  for (PredictionSet* ps : {out_a, out_b})
    if (ps) finalize_combined(*ps);
}

}  // namespace

PredictionSet run_approach2_cv(const SurvivalDataset& data, const CvSpec& cv,
                               Variant variant,
                               std::span<const double> horizons,
                               const PipelineOptions& options) {
  PredictionSet ps;
  if (variant == Variant::V2A)
    approach2_impl(data, cv, horizons, options, &ps, nullptr);
  else
    approach2_impl(data, cv, horizons, options, nullptr, &ps);
  return ps;
}

std::pair<PredictionSet, PredictionSet> run_approach2_cv_both(
    const SurvivalDataset& data, const CvSpec& cv,
    std::span<const double> horizons, const PipelineOptions& options) {
  std::pair<PredictionSet, PredictionSet> out;
  approach2_impl(data, cv, horizons, options, &out.first, &out.second);
  return out;
}

PredictionSet run_naive_cv(const SurvivalDataset& data, const CvSpec& cv,
                           Method variant, std::span<const double> horizons,
                           const PipelineOptions& options) {
  check_cv(data, cv);
  if (!method_is_naive(variant))
    throw ParameterError("run_naive_cv expects a naive method tag");
  const int n = static_cast<int>(data.n());
  const DesignSpec spec = DesignSpec::from_dataset(data);

  // All K imputations happen once, before any fold is held out, with the
  // Nelson-Aalen transform taken from the complete data.
  const AugmentedDataset full_aug = build_augmented(data, PredictorBlock{});
  ImputeOptions impute = options.impute;
  impute.workers = options.workers;
  ImputationStack stack = impute_chained(
      full_aug, cv.K, impute, derive_seed(cv.seed, kTagNaiveImpute));
  stack.provenance = "naive-full-data";

  PredictionSet ps = make_prediction_set(n, cv.K, horizons, options.combine);
  for (int i = 0; i < n; ++i)
    ps.had_missing[static_cast<std::size_t>(i)] = data.row_has_missing(i);

  if (variant == Method::Nv1) {
    std::vector<FoldPartition> partitions;
    partitions.reserve(static_cast<std::size_t>(cv.K));
    for (int k = 0; k < cv.K; ++k)
      partitions.push_back(make_folds(
          n, cv.folds,
          derive_seed(cv.seed, kTagFold, static_cast<std::uint64_t>(k))));
    const std::size_t tasks =
        static_cast<std::size_t>(cv.K) * static_cast<std::size_t>(cv.folds);
    parallel_for(tasks, options.workers, [&](std::size_t t) {
      const int k = static_cast<int>(t / static_cast<std::size_t>(cv.folds));
      const int f = static_cast<int>(t % static_cast<std::size_t>(cv.folds));
      try {
        const std::vector<int>& val_idx =
            partitions[static_cast<std::size_t>(k)]
                .folds[static_cast<std::size_t>(f)];
        const std::vector<int> cal_idx = complement(val_idx, n);
        const Eigen::MatrixXd& completed =
            stack.copies[static_cast<std::size_t>(k)];
        Eigen::MatrixXd design(cal_idx.size(), spec.width());
        Eigen::VectorXd cal_time(cal_idx.size());
        Eigen::VectorXi cal_status(cal_idx.size());
        for (std::size_t r = 0; r < cal_idx.size(); ++r) {
          design.row(static_cast<Eigen::Index>(r)) =
              spec.encode_row(completed.row(cal_idx[r]).transpose());
          cal_time[static_cast<Eigen::Index>(r)] = data.time[cal_idx[r]];
          cal_status[static_cast<Eigen::Index>(r)] = data.status[cal_idx[r]];
        }
        const CoxFit fit = fit_cox(design, cal_time, cal_status);
        for (int i : val_idx) {
          const Eigen::VectorXd x =
              spec.encode_row(completed.row(i).transpose());
          const Eigen::VectorXd s = predict_survival(fit, x, horizons);
          for (std::size_t h = 0; h < horizons.size(); ++h)
            ps.per_imputation[h](i, k) = s[static_cast<Eigen::Index>(h)];
        }
      } catch (const Error&) {
        rethrow_with_context("naive 1 (k=" + std::to_string(k) +
                             ", fold=" + std::to_string(f) + ")");
      }
    });
  } else {
    const Variant pool_variant =
        (variant == Method::Nv2A) ? Variant::V2A : Variant::V2B;
    const FoldPartition partition =
        make_folds(n, cv.folds, derive_seed(cv.seed, kTagFold, 0));
    parallel_for(static_cast<std::size_t>(cv.folds), options.workers,
                 [&](std::size_t f) {
      try {
        const std::vector<int>& val_idx = partition.folds[f];
        const std::vector<int> cal_idx = complement(val_idx, n);
        Eigen::VectorXd cal_time(cal_idx.size());
        Eigen::VectorXi cal_status(cal_idx.size());
        for (std::size_t r = 0; r < cal_idx.size(); ++r) {
          cal_time[static_cast<Eigen::Index>(r)] = data.time[cal_idx[r]];
          cal_status[static_cast<Eigen::Index>(r)] = data.status[cal_idx[r]];
        }
        std::vector<CoxFit> fits;
        fits.reserve(static_cast<std::size_t>(cv.K));
        Eigen::MatrixXd mean_design;
        for (int k = 0; k < cv.K; ++k) {
          const Eigen::MatrixXd& completed =
              stack.copies[static_cast<std::size_t>(k)];
          Eigen::MatrixXd design(cal_idx.size(), spec.width());
          for (std::size_t r = 0; r < cal_idx.size(); ++r)
            design.row(static_cast<Eigen::Index>(r)) =
                spec.encode_row(completed.row(cal_idx[r]).transpose());
          fits.push_back(fit_cox(design, cal_time, cal_status));
          if (k == 0)
            mean_design = design;
          else
            mean_design += design;
        }
        mean_design /= static_cast<double>(cv.K);
        const PooledCoxModel pooled =
            (pool_variant == Variant::V2A)
                ? pool_rubin(fits, Variant::V2A)
                : pool_rubin(fits, Variant::V2B, &mean_design, &cal_time,
                             &cal_status);
        for (int k = 0; k < cv.K; ++k) {
          const Eigen::MatrixXd& completed =
              stack.copies[static_cast<std::size_t>(k)];
          for (int i : val_idx) {
            const Eigen::VectorXd x =
                spec.encode_row(completed.row(i).transpose());
            const Eigen::VectorXd s = predict_survival(
                pooled.beta_mi, pooled.baseline_mi, x, horizons);
            for (std::size_t h = 0; h < horizons.size(); ++h)
              ps.per_imputation[h](i, k) = s[static_cast<Eigen::Index>(h)];
          }
        }
      } catch (const Error&) {
        rethrow_with_context("naive 2 (fold=" + std::to_string(f) + ")");
      }
    });
  }
  finalize_combined(ps);
  return ps;
}

namespace {

PredictionSet direct_impl(const SurvivalDataset& calibration,
                          const PredictorBlock& validation, int K,
                          std::uint64_t seed,
                          std::span<const double> horizons,
                          const PipelineOptions& options, bool pool,
                          Variant variant) {
  calibration.validate();
  if (K < 1) throw ParameterError("imputation count K must be >= 1");
  const DesignSpec spec = DesignSpec::from_dataset(calibration);
  const AugmentedDataset aug = build_augmented(calibration, validation);
  const Eigen::Index n_cal = aug.n_cal();
  const Eigen::Index m = aug.n_val();

  ImputeOptions impute = options.impute;
  impute.workers = options.workers;
  ImputationStack stack =
      impute_chained(aug, K, impute, derive_seed(seed, kTagImpute, 0));
  stack.provenance = "direct";

  PredictionSet ps = make_prediction_set(m, K, horizons, options.combine);
  for (Eigen::Index j = 0; j < m; ++j)
    ps.had_missing[static_cast<std::size_t>(j)] = validation.row_has_missing(j);

  std::vector<CoxFit> fits;
  fits.reserve(static_cast<std::size_t>(K));
  Eigen::MatrixXd mean_design;
  for (int k = 0; k < K; ++k) {
    const Eigen::MatrixXd design =
        spec.encode(stack.copies[static_cast<std::size_t>(k)].topRows(n_cal));
    fits.push_back(fit_cox(design, calibration.time, calibration.status));
    if (k == 0)
      mean_design = design;
    else
      mean_design += design;
  }
  mean_design /= static_cast<double>(K);

  if (pool) {
    const PooledCoxModel pooled =
        (variant == Variant::V2A)
            ? pool_rubin(fits, Variant::V2A)
            : pool_rubin(fits, Variant::V2B, &mean_design, &calibration.time,
                         &calibration.status);
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXd& completed = stack.copies[static_cast<std::size_t>(k)];
      for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::VectorXd x = spec.encode_row(completed.row(n_cal + j).transpose());
        const Eigen::VectorXd s =
            predict_survival(pooled.beta_mi, pooled.baseline_mi, x, horizons);
        for (std::size_t h = 0; h < horizons.size(); ++h)
          ps.per_imputation[h](j, k) = s[static_cast<Eigen::Index>(h)];
      }
    }
  } else {
    for (int k = 0; k < K; ++k) {
      const Eigen::MatrixXd& completed = stack.copies[static_cast<std::size_t>(k)];
      for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::VectorXd x = spec.encode_row(completed.row(n_cal + j).transpose());
        const Eigen::VectorXd s = predict_survival(
            fits[static_cast<std::size_t>(k)], x, horizons);
        for (std::size_t h = 0; h < horizons.size(); ++h)
          ps.per_imputation[h](j, k) = s[static_cast<Eigen::Index>(h)];
      }
    }
  }
  finalize_combined(ps);
  return ps;
}

}  // namespace

PredictionSet run_approach1_direct(const SurvivalDataset& calibration,
                                   const PredictorBlock& validation, int K,
                                   std::uint64_t seed,
                                   std::span<const double> horizons,
                                   const PipelineOptions& options) {
  return direct_impl(calibration, validation, K, seed, horizons, options,
                     false, Variant::V2A);
}

PredictionSet run_approach2_direct(const SurvivalDataset& calibration,
                                   const PredictorBlock& validation, int K,
                                   std::uint64_t seed, Variant variant,
                                   std::span<const double> horizons,
                                   const PipelineOptions& options) {
  return direct_impl(calibration, validation, K, seed, horizons, options,
                     true, variant);
}

PredictionSet run_method_cv(Method method, const SurvivalDataset& data,
                            const CvSpec& cv, std::span<const double> horizons,
                            const PipelineOptions& options) {
  switch (method) {
    case Method::Ap1:
      return run_approach1_cv(data, cv, horizons, options);
    case Method::Ap2A:
      return run_approach2_cv(data, cv, Variant::V2A, horizons, options);
    case Method::Ap2B:
      return run_approach2_cv(data, cv, Variant::V2B, horizons, options);
    case Method::Nv1:
    case Method::Nv2A:
    case Method::Nv2B:
      return run_naive_cv(data, cv, method, horizons, options);
  }
  throw ParameterError("unknown method");
}

}  // namespace survmi
