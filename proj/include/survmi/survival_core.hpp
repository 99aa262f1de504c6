#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "survmi/step_function.hpp"
#include "survmi/types.hpp"

namespace survmi {

// Maps dataset columns onto design-matrix columns. Continuous and binary
// columns pass through; a categorical column with L declared levels expands
// to L-1 dummies against its reference level (the first level observed in
// the dataset the spec was built from). Keeping the spec fixed across
// imputations guarantees imputed categorical draws re-encode identically.
struct DesignSpec {
  struct DesignColumn {
    int source = 0;
    int level = -1;  // -1 for continuous/binary, else the dummy's level
  };
  std::vector<ColumnInfo> columns;
  std::vector<int> reference_level;  // per source column, -1 if not categorical
  std::vector<DesignColumn> design_cols;

  Eigen::Index width() const {
    return static_cast<Eigen::Index>(design_cols.size());
  }

  static DesignSpec from_dataset(const SurvivalDataset& data);

  // Encodes completed predictor rows (no missing cells) into design rows.
  Eigen::MatrixXd encode(const Eigen::MatrixXd& predictors) const;
  Eigen::VectorXd encode_row(const Eigen::VectorXd& predictor_row) const;
};

struct CoxFit {
  Eigen::VectorXd beta;
  StepFunction baseline_cumhaz;  // Breslow estimator, covariate vector 0
  DesignSpec design_spec;
};

struct CoxOptions {
  int max_iterations = 50;
  double gradient_tol = 1e-8;  // relative to n
  double loglik_tol = 1e-10;
};

// Breslow-tie Cox partial likelihood and its analytic gradient, exposed for
// verification against finite differences and brute-force maximization.
double cox_partial_loglik(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& time,
                          const Eigen::VectorXi& status,
                          const Eigen::VectorXd& beta);
Eigen::VectorXd cox_gradient(const Eigen::MatrixXd& design,
                             const Eigen::VectorXd& time,
                             const Eigen::VectorXi& status,
                             const Eigen::VectorXd& beta);

// Breslow baseline cumulative hazard at the given coefficients, referenced
// to the zero covariate vector. fit_cox and the 2B pooling variant share
// this routine.
StepFunction breslow_baseline(const Eigen::MatrixXd& design,
                              const Eigen::VectorXd& time,
                              const Eigen::VectorXi& status,
                              const Eigen::VectorXd& beta);

// Newton-Raphson with step-halving, started at beta = 0. Converges when the
// gradient norm drops below gradient_tol * n or the log-likelihood change
// falls below loglik_tol.
CoxFit fit_cox(const Eigen::MatrixXd& design, const Eigen::VectorXd& time,
               const Eigen::VectorXi& status,
               const CoxOptions& options = CoxOptions{});

// H(t) = sum over event times t_i <= t of d_i / n_i. All-censored input
// yields the zero function.
StepFunction nelson_aalen(const Eigen::VectorXd& time,
                          const Eigen::VectorXi& status);

// Kaplan-Meier estimate of the censoring distribution (product-limit with
// indicator 1-status).
SurvivalCurve kaplan_meier_censoring(const Eigen::VectorXd& time,
                                     const Eigen::VectorXi& status);

// S(t | x) = exp(-H0(t) * exp(x . beta)).
Eigen::VectorXd predict_survival(const CoxFit& fit, const Eigen::VectorXd& x,
                                 std::span<const double> horizons);
Eigen::VectorXd predict_survival(const Eigen::VectorXd& beta,
                                 const StepFunction& baseline_cumhaz,
                                 const Eigen::VectorXd& x,
                                 std::span<const double> horizons);

}  // namespace survmi
