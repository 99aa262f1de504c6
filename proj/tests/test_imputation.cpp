#include <doctest.h>

#include <cmath>

#include "survmi/imputation.hpp"
#include "survmi/rng.hpp"
#include "survmi/survival_core.hpp"

using namespace survmi;

namespace {

// Three correlated continuous columns; X1 will be amputated.
SurvivalDataset correlated_gaussian(int n, std::uint64_t seed) {
  SurvivalDataset d;
  d.time.resize(n);
  d.status.resize(n);
  d.predictors.resize(n, 3);
  d.missing.setZero(n, 3);
  d.columns = {{"x1", ColumnKind::Continuous, 0, {}},
               {"x2", ColumnKind::Continuous, 0, {}},
               {"x3", ColumnKind::Continuous, 0, {}}};
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    d.predictors(i, 0) = z + 0.3 * rng.normal();
    d.predictors(i, 1) = z + 0.3 * rng.normal();
    d.predictors(i, 2) = -z + 0.3 * rng.normal();
    d.time[i] = -std::log(rng.uniform_pos());
    d.status[i] = rng.uniform() < 0.7;
  }
  d.status[0] = 1;
  return d;
}

SurvivalDataset tiny_complete() {
  SurvivalDataset d;
  d.time.resize(4);
  d.time << 1, 2, 3, 4;
  d.status.resize(4);
  d.status << 1, 0, 1, 1;
  d.predictors.resize(4, 2);
  d.predictors << 0.1, 1,  //
      0.4, 0,              //
      0.9, 1,              //
      0.2, 0;
  d.missing.setZero(4, 2);
  d.columns = {{"a", ColumnKind::Continuous, 0, {}},
               {"b", ColumnKind::Binary, 0, {}}};
  return d;
}

}  // namespace

TEST_CASE("build_augmented attaches the calibration Nelson-Aalen transform") {
  SurvivalDataset d = tiny_complete();
  d.time << 1, 2, 3, 4;
  d.status << 1, 0, 1, 1;

  // empty validation set: augmented data is the calibration data
  const AugmentedDataset aug = build_augmented(d, PredictorBlock{});
  CHECK(aug.n_val() == 0);
  CHECK(aug.n_cal() == 4);
  // H(1) = 1/4, H(2) = 1/4, H(3) = 1/4 + 1/2, H(4) = 1/4 + 1/2 + 1
  CHECK(aug.na_transform[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(aug.na_transform[1] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(aug.na_transform[2] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(aug.na_transform[3] == doctest::Approx(1.75).epsilon(1e-12));

  // spec hand case: times (1,2,3), status (1,0,1) -> (1/3, 1/3, 4/3)
  SurvivalDataset three;
  three.time.resize(3);
  three.time << 1, 2, 3;
  three.status.resize(3);
  three.status << 1, 0, 1;
  three.predictors = d.predictors.topRows(3);
  three.missing.setZero(3, 2);
  three.columns = d.columns;
  const AugmentedDataset aug3 = build_augmented(three, PredictorBlock{});
  CHECK(aug3.na_transform[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(aug3.na_transform[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(aug3.na_transform[2] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));

  // schema mismatch
  PredictorBlock bad;
  bad.values.resize(1, 3);
  bad.missing.setZero(1, 3);
  CHECK_THROWS_AS(build_augmented(d, bad), ShapeError);

  // one complete validation row: outcomes masked by construction
  PredictorBlock one;
  one.values.resize(1, 2);
  one.values << 0.5, 1;
  one.missing.setZero(1, 2);
  const AugmentedDataset aug1 = build_augmented(d, one);
  CHECK(aug1.n_val() == 1);
  CHECK_FALSE(aug1.validation.row_has_missing(0));
}

TEST_CASE("impute_chained with nothing to impute returns identical copies") {
  const SurvivalDataset d = tiny_complete();
  const AugmentedDataset aug = build_augmented(d, PredictorBlock{});
  const ImputationStack stack = impute_chained(aug, 3, ImputeOptions{}, 42);
  REQUIRE(stack.copies.size() == 3);
  for (const auto& copy : stack.copies) CHECK(copy == d.predictors);
  CHECK_THROWS_AS(impute_chained(aug, 0, ImputeOptions{}, 42),
                  ParameterError);
}

TEST_CASE("impute_chained determinism and observed-cell preservation") {
  SurvivalDataset d = correlated_gaussian(120, 2024);
  Rng rng(5);
  for (int i = 0; i < 120; ++i)
    if (rng.uniform() < 0.4) d.missing(i, 0) = 1;

  const AugmentedDataset aug = build_augmented(d, PredictorBlock{});
  const ImputationStack a = impute_chained(aug, 4, ImputeOptions{}, 99);
  const ImputationStack b = impute_chained(aug, 4, ImputeOptions{}, 99);
  REQUIRE(a.copies.size() == b.copies.size());
  for (std::size_t k = 0; k < a.copies.size(); ++k)
    CHECK(a.copies[k] == b.copies[k]);  // byte-identical rerun

  // parallel copies match serial copies exactly
  ImputeOptions par;
  par.workers = 4;
  const ImputationStack c = impute_chained(aug, 4, par, 99);
  for (std::size_t k = 0; k < a.copies.size(); ++k)
    CHECK(a.copies[k] == c.copies[k]);

  // observed cells never change; imputed cells are flagged
  for (const auto& copy : a.copies) {
    for (int i = 0; i < 120; ++i)
      for (int j = 0; j < 3; ++j) {
        if (!d.missing(i, j))
          CHECK(copy(i, j) == d.predictors(i, j));
        CHECK(a.imputed(i, j) == d.missing(i, j));
      }
  }

  // a different seed changes at least one imputed cell
  const ImputationStack other = impute_chained(aug, 4, ImputeOptions{}, 100);
  bool any_diff = false;
  for (std::size_t k = 0; k < a.copies.size() && !any_diff; ++k)
    any_diff = a.copies[k] != other.copies[k];
  CHECK(any_diff);
}

TEST_CASE("PMM imputes only values from the observed donor pool") {
  SurvivalDataset d = correlated_gaussian(150, 77);
  Rng rng(6);
  for (int i = 0; i < 150; ++i)
    if (rng.uniform() < 0.3) d.missing(i, 0) = 1;
  std::vector<double> donors;
  for (int i = 0; i < 150; ++i)
    if (!d.missing(i, 0)) donors.push_back(d.predictors(i, 0));

  const AugmentedDataset aug = build_augmented(d, PredictorBlock{});
  const ImputationStack stack = impute_chained(aug, 5, ImputeOptions{}, 3);
  for (const auto& copy : stack.copies)
    for (int i = 0; i < 150; ++i)
      if (d.missing(i, 0)) {
        const double v = copy(i, 0);
        CHECK(std::find(donors.begin(), donors.end(), v) != donors.end());
      }
}

TEST_CASE("MCAR imputation recovers the complete-data column mean") {
  // 50% MCAR on X1 with two strongly correlated complete companions.
  const int n = 500;
  SurvivalDataset d = correlated_gaussian(n, 314159);
  const Eigen::VectorXd full_x1 = d.predictors.col(0);
  Rng rng(8);
  int n_missing = 0;
  for (int i = 0; i < n; ++i)
    if (rng.uniform() < 0.5) {
      d.missing(i, 0) = 1;
      ++n_missing;
    }
  REQUIRE(n_missing > 100);

  const AugmentedDataset aug = build_augmented(d, PredictorBlock{});
  const int K = 20;
  const ImputationStack stack = impute_chained(aug, K, ImputeOptions{}, 11);

  double imputed_sum = 0.0;
  for (const auto& copy : stack.copies)
    for (int i = 0; i < n; ++i)
      if (d.missing(i, 0)) imputed_sum += copy(i, 0);
  const double imputed_mean =
      imputed_sum / (static_cast<double>(K) * n_missing);

  const double truth_mean = full_x1.mean();
  const double truth_sd =
      std::sqrt((full_x1.array() - truth_mean).square().sum() / (n - 1));
  const double se = truth_sd / std::sqrt(static_cast<double>(n_missing));
  CHECK(std::abs(imputed_mean - truth_mean) < 3.0 * se);
}

TEST_CASE("validation outcomes cannot influence the returned stack") {
  // The stack must be a function of calibration outcomes and predictors
  // only; imputed outcome surrogates on validation rows are discarded.
  SurvivalDataset d = correlated_gaussian(80, 555);
  Rng rng(9);
  for (int i = 0; i < 80; ++i)
    if (rng.uniform() < 0.3) d.missing(i, 0) = 1;
  PredictorBlock val;
  val.values = d.predictors.topRows(10);
  val.missing = d.missing.topRows(10);

  const AugmentedDataset aug = build_augmented(d, val);
  const ImputationStack stack = impute_chained(aug, 3, ImputeOptions{}, 21);
  CHECK(stack.copies[0].rows() == 90);

  // Returned copies carry only predictor columns.
  CHECK(stack.copies[0].cols() == 3);
  for (const auto& copy : stack.copies)
    for (int i = 0; i < 10; ++i)
      for (int j = 0; j < 3; ++j)
        if (!val.missing(i, j))
          CHECK(copy(80 + i, j) == val.values(i, j));
}

TEST_CASE("binary and categorical imputation draws valid values") {
  const int n = 200;
  SurvivalDataset d;
  d.time.resize(n);
  d.status.resize(n);
  d.predictors.resize(n, 3);
  d.missing.setZero(n, 3);
  d.columns = {{"x", ColumnKind::Continuous, 0, {}},
               {"flag", ColumnKind::Binary, 0, {}},
               {"grade", ColumnKind::Categorical, 3, {"a", "b", "c"}}};
  Rng rng(99);
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    d.predictors(i, 0) = z;
    d.predictors(i, 1) = (z + 0.5 * rng.normal()) > 0 ? 1.0 : 0.0;
    d.predictors(i, 2) = static_cast<double>(rng.below(3));
    d.time[i] = -std::log(rng.uniform_pos());
    d.status[i] = rng.uniform() < 0.6;
    if (rng.uniform() < 0.25) d.missing(i, 1) = 1;
    if (rng.uniform() < 0.25) d.missing(i, 2) = 1;
  }
  d.status[0] = 1;

  const AugmentedDataset aug = build_augmented(d, PredictorBlock{});
  const ImputationStack stack = impute_chained(aug, 4, ImputeOptions{}, 31);
  for (const auto& copy : stack.copies)
    for (int i = 0; i < n; ++i) {
      const double flag = copy(i, 1);
      CHECK((flag == 0.0 || flag == 1.0));
      const double grade = copy(i, 2);
      CHECK(grade == std::floor(grade));
      CHECK(grade >= 0.0);
      CHECK(grade <= 2.0);
    }

  // all-missing column is unusable
  SurvivalDataset broken = d;
  for (int i = 0; i < n; ++i) broken.missing(i, 1) = 1;
  const AugmentedDataset bad = build_augmented(broken, PredictorBlock{});
  CHECK_THROWS_AS(impute_chained(bad, 2, ImputeOptions{}, 1),
                  UnusableColumnError);
}

TEST_CASE("per-column imputed means converge under MCAR as K grows") {
  const int n = 400;
  SurvivalDataset d = correlated_gaussian(n, 2718);
  const Eigen::VectorXd full_x1 = d.predictors.col(0);
  Rng rng(12);
  int n_missing = 0;
  for (int i = 0; i < n; ++i)
    if (rng.uniform() < 0.35) {
      d.missing(i, 0) = 1;
      ++n_missing;
    }
  std::vector<double> observed;
  for (int i = 0; i < n; ++i)
    if (!d.missing(i, 0)) observed.push_back(d.predictors(i, 0));
  double obs_mean = 0.0;
  for (double v : observed) obs_mean += v;
  obs_mean /= static_cast<double>(observed.size());
  double obs_sd = 0.0;
  for (double v : observed) obs_sd += (v - obs_mean) * (v - obs_mean);
  obs_sd = std::sqrt(obs_sd / static_cast<double>(observed.size() - 1));

  const AugmentedDataset aug = build_augmented(d, PredictorBlock{});
  const ImputationStack stack = impute_chained(aug, 50, ImputeOptions{}, 13);
  double imputed_sum = 0.0;
  for (const auto& copy : stack.copies)
    for (int i = 0; i < n; ++i)
      if (d.missing(i, 0)) imputed_sum += copy(i, 0);
  const double imputed_mean = imputed_sum / (50.0 * n_missing);
  const double se = obs_sd / std::sqrt(static_cast<double>(n_missing));
  CHECK(std::abs(imputed_mean - obs_mean) < 3.0 * se);
}
