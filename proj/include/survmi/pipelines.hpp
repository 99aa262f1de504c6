#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "survmi/imputation.hpp"
#include "survmi/survival_core.hpp"
#include "survmi/types.hpp"

namespace survmi {

enum class Method { Ap1, Ap2A, Ap2B, Nv1, Nv2A, Nv2B };
enum class Variant { V2A, V2B };
enum class CombineRule { Mean, Median, LogitMean };

const char* method_name(Method m);
Method method_from_name(const std::string& name);
bool method_is_naive(Method m);

struct FoldPartition {
  std::vector<std::vector<int>> folds;  // disjoint, sorted, sizes differ <= 1
  int n = 0;
};

// Uniformly random balanced partition, deterministic given the seed.
FoldPartition make_folds(int n, int L, std::uint64_t seed);

struct PooledCoxModel {
  Eigen::VectorXd beta_mi;
  StepFunction baseline_mi;
  Variant variant = Variant::V2A;
};

// Rubin pooling of K Cox fits. 2A averages the baseline cumulative hazards
// pointwise over the union of knots; 2B re-runs the Breslow estimator at
// the pooled coefficients on the mean-imputed calibration design.
PooledCoxModel pool_rubin(const std::vector<CoxFit>& fits, Variant variant,
                          const Eigen::MatrixXd* mean_imputed_design = nullptr,
                          const Eigen::VectorXd* time = nullptr,
                          const Eigen::VectorXi* status = nullptr);

// Survival probabilities for n subjects at each horizon, one column per
// imputation, plus the combined (default mean) prediction.
struct PredictionSet {
  std::vector<double> horizons;
  std::vector<Eigen::MatrixXd> per_imputation;  // per horizon, n x K
  std::vector<std::uint8_t> had_missing;        // per subject
  Eigen::MatrixXd combined;                     // n x horizons
  CombineRule combine = CombineRule::Mean;

  Eigen::Index n() const { return combined.rows(); }
  int K() const {
    return per_imputation.empty() ? 0
                                  : static_cast<int>(per_imputation[0].cols());
  }
};

struct CvSpec {
  int folds = 10;
  int K = 1;
  std::uint64_t seed = 0;
};

struct PipelineOptions {
  ImputeOptions impute;
  CombineRule combine = CombineRule::Mean;
  int workers = 1;
};

// Approach 1, cross-validated: per imputation draw a fresh fold partition,
// mask the left-out fold's outcomes, impute once, fit on the calibration
// part, predict the left-out rows.
PredictionSet run_approach1_cv(const SurvivalDataset& data, const CvSpec& cv,
                               std::span<const double> horizons,
                               const PipelineOptions& options);

// Approach 2, cross-validated: one fixed partition; per fold K imputations,
// K fits, Rubin pooling, pooled model applied to each imputed copy of the
// left-out rows.
PredictionSet run_approach2_cv(const SurvivalDataset& data, const CvSpec& cv,
                               Variant variant,
                               std::span<const double> horizons,
                               const PipelineOptions& options);

// Both 2A and 2B from one set of imputations and fits. Bitwise identical
// to the two separate calls under the same seed.
std::pair<PredictionSet, PredictionSet> run_approach2_cv_both(
    const SurvivalDataset& data, const CvSpec& cv,
    std::span<const double> horizons, const PipelineOptions& options);

// Naive protocols: K imputations generated once on the full data, outcomes
// included and the Nelson-Aalen transform computed from the complete data;
// cross-validation only afterwards.
PredictionSet run_naive_cv(const SurvivalDataset& data, const CvSpec& cv,
                           Method variant, std::span<const double> horizons,
                           const PipelineOptions& options);

// Direct (non-cross-validated) prediction for new predictor rows through
// the augmented-matrix path.
PredictionSet run_approach1_direct(const SurvivalDataset& calibration,
                                   const PredictorBlock& validation, int K,
                                   std::uint64_t seed,
                                   std::span<const double> horizons,
                                   const PipelineOptions& options);
PredictionSet run_approach2_direct(const SurvivalDataset& calibration,
                                   const PredictorBlock& validation, int K,
                                   std::uint64_t seed, Variant variant,
                                   std::span<const double> horizons,
                                   const PipelineOptions& options);

// Dispatch by method tag (cross-validated protocols).
PredictionSet run_method_cv(Method method, const SurvivalDataset& data,
                            const CvSpec& cv, std::span<const double> horizons,
                            const PipelineOptions& options);

}  // namespace survmi
