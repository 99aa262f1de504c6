#include "survmi/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "survmi/step_function.hpp"
#include "survmi/survival_core.hpp"

namespace survmi {

double quantile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw ParameterError("quantile of an empty sample");
  if (p < 0.0 || p > 1.0) throw ParameterError("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());

  // Distinct values with cumulative fractions.
  std::vector<double> v;
  std::vector<double> c;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!v.empty() && values[i] == v.back()) {
      c.back() = static_cast<double>(i + 1) / n;
    } else {
      v.push_back(values[i]);
      c.push_back(static_cast<double>(i + 1) / n);
    }
  }
  if (p <= c.front()) return v.front();
  if (p >= c.back()) return v.back();
  const auto it = std::lower_bound(c.begin(), c.end(), p);
  const std::size_t j = static_cast<std::size_t>(it - c.begin());
  const double frac = (p - c[j - 1]) / (c[j] - c[j - 1]);
  return v[j - 1] + frac * (v[j] - v[j - 1]);
}

namespace {

double deviation_range(const Eigen::MatrixXd& predictions,
                       const std::vector<std::uint8_t>& keep) {
  std::vector<double> deviations;
  deviations.reserve(static_cast<std::size_t>(predictions.size()));
  bool any = false;
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    if (!keep[static_cast<std::size_t>(i)]) continue;
    any = true;
    const double mean = predictions.row(i).mean();
    for (Eigen::Index k = 0; k < predictions.cols(); ++k)
      deviations.push_back(predictions(i, k) - mean);
  }
  if (!any)
    throw EmptyFilterError("no subjects survive the variation filter");
  return (quantile_linear(deviations, 0.9) -
          quantile_linear(deviations, 0.1)) *
         100.0;
}

}  // namespace

double variation_R(const Eigen::MatrixXd& predictions, double mean_lo,
                   double mean_hi) {
  if (predictions.cols() < 2)
    throw ParameterError("variation_R needs at least two prediction columns");
  std::vector<std::uint8_t> keep(static_cast<std::size_t>(predictions.rows()));
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    const double mean = predictions.row(i).mean();
    keep[static_cast<std::size_t>(i)] = (mean >= mean_lo && mean <= mean_hi);
  }
  return deviation_range(predictions, keep);
}

double variation_R_filtered(const Eigen::MatrixXd& predictions,
                            const std::vector<std::uint8_t>& keep) {
  if (predictions.cols() < 2)
    throw ParameterError("variation_R needs at least two prediction columns");
  if (keep.size() != static_cast<std::size_t>(predictions.rows()))
    throw ShapeError("filter length does not match prediction rows");
  return deviation_range(predictions, keep);
}

double simulation_variation_R(
    const std::vector<Eigen::MatrixXd>& per_sim_predictions,
    const std::vector<Eigen::VectorXd>& per_sim_truth,
    const std::vector<std::vector<std::uint8_t>>* per_sim_strata) {
  if (per_sim_predictions.empty())
    throw ParameterError("simulation_variation_R needs at least one simulation");
  if (per_sim_truth.size() != per_sim_predictions.size())
    throw ShapeError("truth vectors do not match prediction matrices");

  double total = 0.0;
  for (std::size_t s = 0; s < per_sim_predictions.size(); ++s) {
    const Eigen::MatrixXd& preds = per_sim_predictions[s];
    const Eigen::VectorXd& truth = per_sim_truth[s];
    if (truth.size() != preds.rows())
      throw ShapeError("truth length does not match prediction rows");
    std::vector<double> truth_values(truth.data(), truth.data() + truth.size());
    const double lo = quantile_linear(truth_values, 0.2);
    const double hi = quantile_linear(truth_values, 0.8);
    std::vector<std::uint8_t> keep(static_cast<std::size_t>(preds.rows()));
    for (Eigen::Index i = 0; i < preds.rows(); ++i) {
      bool in = truth[i] >= lo && truth[i] <= hi;
      if (in && per_sim_strata)
        in = (*per_sim_strata)[s][static_cast<std::size_t>(i)] != 0;
      keep[static_cast<std::size_t>(i)] = in;
    }
    total += variation_R_filtered(preds, keep);
  }
  return total / static_cast<double>(per_sim_predictions.size());
}

double brier_ipcw(const Eigen::VectorXd& predictions,
                  const Eigen::VectorXd& time, const Eigen::VectorXi& status,
                  double t) {
  const Eigen::Index n = time.size();
  if (predictions.size() != n || status.size() != n)
    throw ShapeError("brier_ipcw inputs disagree on subject count");
  if (n < 1) throw ParameterError("brier_ipcw needs n >= 1");

  const SurvivalCurve g = kaplan_meier_censoring(time, status);
  double total = 0.0;
  std::string degenerate;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = predictions[i];
    if (time[i] <= t && status[i] == 1) {
      const double w = g.left_limit(time[i]);
      if (w <= 0.0) {
        degenerate += (degenerate.empty() ? "" : ", ") + std::to_string(i);
        continue;
      }
      total += s * s / w;
    } else if (time[i] > t) {
      const double w = g(t);
      if (w <= 0.0) {
        degenerate += (degenerate.empty() ? "" : ", ") + std::to_string(i);
        continue;
      }
      total += (1.0 - s) * (1.0 - s) / w;
    }
  }
  if (!degenerate.empty())
    throw DegenerateWeightsError(
        "censoring survival is zero for subjects: " + degenerate);
  return total / static_cast<double>(n);
}

double bias_summary(const Eigen::VectorXd& mean_predictions,
                    const Eigen::VectorXd& true_survival, double truth_lo,
                    double truth_hi) {
  if (mean_predictions.size() != true_survival.size())
    throw ShapeError("bias_summary inputs disagree on subject count");
  double total = 0.0;
  Eigen::Index kept = 0;
  for (Eigen::Index i = 0; i < true_survival.size(); ++i) {
    if (true_survival[i] < truth_lo || true_survival[i] > truth_hi) continue;
    total += mean_predictions[i] - true_survival[i];
    ++kept;
  }
  if (kept == 0)
    throw EmptyFilterError("no subjects fall in the true-survival window");
  return total / static_cast<double>(kept);
}

}  // namespace survmi
