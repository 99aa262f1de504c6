#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "survmi/types.hpp"

namespace survmi {

// Calibration rows (with outcomes) stacked above validation rows whose
// outcomes are unknown by construction. The Nelson-Aalen transform of the
// calibration follow-up times, computed from calibration rows only, rides
// along as an imputation covariate.
struct AugmentedDataset {
  SurvivalDataset calibration;
  PredictorBlock validation;
  Eigen::VectorXd na_transform;  // H(T_i) per calibration row

  Eigen::Index n_cal() const { return calibration.n(); }
  Eigen::Index n_val() const { return validation.rows(); }
  Eigen::Index n_total() const { return n_cal() + n_val(); }
  Eigen::Index p() const { return calibration.p(); }
};

AugmentedDataset build_augmented(const SurvivalDataset& calibration,
                                 const PredictorBlock& validation);

// K completed predictor matrices over the stacked rows (calibration first).
// Cells observed in the source are bit-identical across all copies; the
// outcome surrogates imputed on validation rows during the sweeps are not
// part of the stack.
struct ImputationStack {
  std::vector<Eigen::MatrixXd> copies;  // each n_total x p, no missing cells
  Mask imputed;                         // n_total x p, 1 = cell was imputed
  std::vector<std::uint64_t> copy_seeds;
  std::string provenance;  // which fold/replicate produced the stack
  int fallback_draws = 0;  // diagnostics: degenerate models resolved by
                           // donor draws from the pooled observed column
};

struct ImputeOptions {
  int cycles = 5;
  int pmm_donors = 5;
  double ridge = 1e-5;
  int workers = 1;
};

// Chained equations over the augmented matrix: initial fill by random draws
// from each column's observed values, then `cycles` sweeps imputing each
// incomplete column from all other columns plus the outcome surrogates
// (Nelson-Aalen value and event indicator). Continuous columns use
// predictive mean matching, binary columns a Bayesian logistic draw,
// categorical columns a Bayesian polytomous draw. Copy k draws from the
// stream derived as hash(seed, k).
ImputationStack impute_chained(const AugmentedDataset& augmented, int K,
                               const ImputeOptions& options,
                               std::uint64_t seed);

// One completed copy, drawn from an explicit stream. impute_chained(K)
// is exactly {impute_single(derive_seed(seed, k)) : k < K}.
Eigen::MatrixXd impute_single(const AugmentedDataset& augmented,
                              const ImputeOptions& options,
                              std::uint64_t copy_seed,
                              int* fallback_draws = nullptr);

}  // namespace survmi
