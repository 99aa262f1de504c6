#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "survmi/errors.hpp"

namespace survmi {

// Quantile by linear interpolation of the empirical CDF over distinct
// values: Q(p) interpolates the points (F(v_j), v_j) and clamps outside
// [F(v_1), 1]. Collapsing duplicates makes the statistic invariant to
// replicating every observation, which the spread measures below rely on.
// This is the single quantile rule used across the project.
double quantile_linear(std::vector<double> values, double p);

// Spread of survival predictions induced by imputation/replication noise:
// pool deviations from row means over rows whose mean lies in
// [mean_lo, mean_hi], return (Q90 - Q10) * 100.
double variation_R(const Eigen::MatrixXd& predictions, double mean_lo = 0.2,
                   double mean_hi = 0.8);

// Same statistic with an externally supplied row filter (1 = keep).
double variation_R_filtered(const Eigen::MatrixXd& predictions,
                            const std::vector<std::uint8_t>& keep);

// Per-simulation R with the truth-based filter (subjects between the 20th
// and 80th percentiles of true survival), averaged across simulations.
// Optional per-simulation stratum masks intersect the truth filter.
double simulation_variation_R(
    const std::vector<Eigen::MatrixXd>& per_sim_predictions,
    const std::vector<Eigen::VectorXd>& per_sim_truth,
    const std::vector<std::vector<std::uint8_t>>* per_sim_strata = nullptr);

// Inverse-probability-of-censoring-weighted Brier score at time t:
//   BS(t) = n^-1 sum_i [ S_i(t)^2 1{T_i <= t, d_i=1} / G(T_i-)
//                        + (1-S_i(t))^2 1{T_i > t} / G(t) ]
// with G the Kaplan-Meier censoring curve of (time, status).
double brier_ipcw(const Eigen::VectorXd& predictions,
                  const Eigen::VectorXd& time, const Eigen::VectorXi& status,
                  double t);

// Mean of (mean prediction - true survival) over subjects with true
// survival in [truth_lo, truth_hi].
double bias_summary(const Eigen::VectorXd& mean_predictions,
                    const Eigen::VectorXd& true_survival,
                    double truth_lo = 0.2, double truth_hi = 0.8);

}  // namespace survmi
