#include "survmi/survival_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace survmi {

namespace {

std::vector<int> order_by_time(const Eigen::VectorXd& time) {
  std::vector<int> order(static_cast<std::size_t>(time.size()));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (time[a] != time[b]) return time[a] < time[b];
    return a < b;
  });
  return order;
}

void check_design(const Eigen::MatrixXd& design, const Eigen::VectorXd& time,
                  const Eigen::VectorXi& status) {
  if (design.rows() != time.size() || status.size() != time.size())
    throw ShapeError("design/time/status row counts disagree");
  if (!design.allFinite())
    throw ValidationError("design matrix contains non-finite cells");
}

// One backward sweep over subjects sorted by time. At each distinct event
// time the risk set holds everyone with T_j >= t. exp terms are centered by
// the max linear predictor; log and ratio terms undo the shift.
struct SweepResult {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd information;
};

SweepResult cox_sweep(const Eigen::MatrixXd& design,
                      const Eigen::VectorXd& time,
                      const Eigen::VectorXi& status,
                      const Eigen::VectorXd& beta,
                      const std::vector<int>& order, bool want_information) {
  const Eigen::Index n = time.size();
  const Eigen::Index q = design.cols();
  SweepResult out;
  out.gradient = Eigen::VectorXd::Zero(q);
  if (want_information) out.information = Eigen::MatrixXd::Zero(q, q);

  Eigen::VectorXd eta = design * beta;
  const double center = (n > 0) ? eta.maxCoeff() : 0.0;

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(q);
  Eigen::MatrixXd s2;
  if (want_information) s2 = Eigen::MatrixXd::Zero(q, q);

  Eigen::VectorXd event_x(q);
  Eigen::VectorXd ratio(q);

  std::size_t i = order.size();
  while (i > 0) {
    const double t = time[order[i - 1]];
    int d = 0;
    double event_eta = 0.0;
    event_x.setZero();
    // Add every subject tied at t to the risk set, collecting event terms.
    while (i > 0 && time[order[i - 1]] == t) {
      const int idx = order[i - 1];
      const double w = std::exp(eta[idx] - center);
      s0 += w;
      s1.noalias() += w * design.row(idx).transpose();
      if (want_information)
        s2.noalias() +=
            w * design.row(idx).transpose() * design.row(idx);
      if (status[idx] == 1) {
        ++d;
        event_eta += eta[idx];
        event_x += design.row(idx).transpose();
      }
      --i;
    }
    if (d > 0) {
      out.loglik += event_eta - d * (std::log(s0) + center);
      ratio = s1 / s0;
      out.gradient += event_x - d * ratio;
      if (want_information)
        out.information.noalias() += d * (s2 / s0 - ratio * ratio.transpose());
    }
  }
  return out;
}

double loglik_only(const Eigen::MatrixXd& design, const Eigen::VectorXd& time,
                   const Eigen::VectorXi& status, const Eigen::VectorXd& beta,
                   const std::vector<int>& order) {
  const Eigen::Index n = time.size();
  Eigen::VectorXd eta = design * beta;
  const double center = (n > 0) ? eta.maxCoeff() : 0.0;
  double s0 = 0.0;
  double ll = 0.0;
  std::size_t i = order.size();
  while (i > 0) {
    const double t = time[order[i - 1]];
    int d = 0;
    double event_eta = 0.0;
    while (i > 0 && time[order[i - 1]] == t) {
      const int idx = order[i - 1];
      s0 += std::exp(eta[idx] - center);
      if (status[idx] == 1) {
        ++d;
        event_eta += eta[idx];
      }
      --i;
    }
    if (d > 0) ll += event_eta - d * (std::log(s0) + center);
  }
  return ll;
}

}  // namespace

DesignSpec DesignSpec::from_dataset(const SurvivalDataset& data) {
  DesignSpec spec;
  spec.columns = data.columns;
  const Eigen::Index p = data.p();
  spec.reference_level.assign(static_cast<std::size_t>(p), -1);
  for (Eigen::Index j = 0; j < p; ++j) {
    const ColumnInfo& col = data.columns[static_cast<std::size_t>(j)];
    if (col.kind != ColumnKind::Categorical) {
      spec.design_cols.push_back({static_cast<int>(j), -1});
      continue;
    }
    int ref = -1;
    for (Eigen::Index i = 0; i < data.n() && ref < 0; ++i) {
      if (!data.missing(i, j)) ref = static_cast<int>(data.predictors(i, j));
    }
    if (ref < 0)
      throw UnusableColumnError("categorical column '" + col.name +
                                "' has no observed values");
    spec.reference_level[static_cast<std::size_t>(j)] = ref;
    for (int lvl = 0; lvl < col.levels; ++lvl) {
      if (lvl == ref) continue;
      spec.design_cols.push_back({static_cast<int>(j), lvl});
    }
  }
  return spec;
}

Eigen::MatrixXd DesignSpec::encode(const Eigen::MatrixXd& predictors) const {
  Eigen::MatrixXd out(predictors.rows(), width());
  for (Eigen::Index c = 0; c < width(); ++c) {
    const DesignColumn& dc = design_cols[static_cast<std::size_t>(c)];
    if (dc.level < 0) {
      out.col(c) = predictors.col(dc.source);
    } else {
      for (Eigen::Index i = 0; i < predictors.rows(); ++i)
        out(i, c) =
            (static_cast<int>(predictors(i, dc.source)) == dc.level) ? 1.0
                                                                     : 0.0;
    }
  }
  return out;
}

Eigen::VectorXd DesignSpec::encode_row(
    const Eigen::VectorXd& predictor_row) const {
  Eigen::VectorXd out(width());
  for (Eigen::Index c = 0; c < width(); ++c) {
    const DesignColumn& dc = design_cols[static_cast<std::size_t>(c)];
    if (dc.level < 0) {
      out[c] = predictor_row[dc.source];
    } else {
      out[c] =
          (static_cast<int>(predictor_row[dc.source]) == dc.level) ? 1.0 : 0.0;
    }
  }
  return out;
}

double cox_partial_loglik(const Eigen::MatrixXd& design,
                          const Eigen::VectorXd& time,
                          const Eigen::VectorXi& status,
                          const Eigen::VectorXd& beta) {
  check_design(design, time, status);
  return loglik_only(design, time, status, beta, order_by_time(time));
}

Eigen::VectorXd cox_gradient(const Eigen::MatrixXd& design,
                             const Eigen::VectorXd& time,
                             const Eigen::VectorXi& status,
                             const Eigen::VectorXd& beta) {
  check_design(design, time, status);
  return cox_sweep(design, time, status, beta, order_by_time(time), false)
      .gradient;
}

StepFunction breslow_baseline(const Eigen::MatrixXd& design,
                              const Eigen::VectorXd& time,
                              const Eigen::VectorXi& status,
                              const Eigen::VectorXd& beta) {
  check_design(design, time, status);
  const std::vector<int> order = order_by_time(time);
  Eigen::VectorXd eta = design * beta;
  const double center = (time.size() > 0) ? eta.maxCoeff() : 0.0;
  const double scale = std::exp(center);

  // Risk-set sums from the largest time down, increments applied in
  // ascending knot order afterwards.
  std::vector<double> knots;
  std::vector<double> increments;
  double s0 = 0.0;
  std::size_t i = order.size();
  while (i > 0) {
    const double t = time[order[i - 1]];
    int d = 0;
    while (i > 0 && time[order[i - 1]] == t) {
      const int idx = order[i - 1];
      s0 += std::exp(eta[idx] - center);
      if (status[idx] == 1) ++d;
      --i;
    }
    if (d > 0) {
      knots.push_back(t);
      increments.push_back(static_cast<double>(d) / (s0 * scale));
    }
  }
  std::reverse(knots.begin(), knots.end());
  std::reverse(increments.begin(), increments.end());

  StepFunction h;
  h.knots = std::move(knots);
  h.values.resize(h.knots.size());
  double cum = 0.0;
  for (std::size_t k = 0; k < h.knots.size(); ++k) {
    cum += increments[k];
    h.values[k] = cum;
  }
  return h;
}

CoxFit fit_cox(const Eigen::MatrixXd& design, const Eigen::VectorXd& time,
               const Eigen::VectorXi& status, const CoxOptions& options) {
  check_design(design, time, status);
  const Eigen::Index n = time.size();
  const Eigen::Index q = design.cols();
  if ((status.array() == 1).count() == 0)
    throw NoEventsError("cannot fit a Cox model without events");

  const std::vector<int> order = order_by_time(time);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);
  const double grad_tol = options.gradient_tol * static_cast<double>(n);

  double loglik = loglik_only(design, time, status, beta, order);
  bool converged = (q == 0);
  for (int iter = 0; iter < options.max_iterations && !converged; ++iter) {
    SweepResult sweep = cox_sweep(design, time, status, beta, order, true);
    if (sweep.gradient.norm() < grad_tol) {
      converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(sweep.information);
    Eigen::VectorXd step = ldlt.solve(sweep.gradient);
    if (ldlt.info() != Eigen::Success || !step.allFinite())
      throw SingularError("singular information matrix in Cox fit");

    double scale = 1.0;
    Eigen::VectorXd candidate = beta + step;
    double new_loglik = loglik_only(design, time, status, candidate, order);
    int halvings = 0;
    while ((!std::isfinite(new_loglik) || new_loglik < loglik) &&
           halvings < 30) {
      scale *= 0.5;
      candidate = beta + scale * step;
      new_loglik = loglik_only(design, time, status, candidate, order);
      ++halvings;
    }
    const double change = new_loglik - loglik;
    beta = candidate;
    loglik = new_loglik;
    if (std::abs(change) < options.loglik_tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // Accept the iterate when the gradient criterion is already met.
    if (cox_gradient(design, time, status, beta).norm() >= grad_tol) {
      throw ConvergenceError(
          "Cox Newton-Raphson failed to converge in " +
              std::to_string(options.max_iterations) + " iterations",
          std::vector<double>(beta.data(), beta.data() + beta.size()));
    }
  }

  CoxFit fit;
  fit.beta = beta;
  fit.baseline_cumhaz = breslow_baseline(design, time, status, beta);
  return fit;
}

StepFunction nelson_aalen(const Eigen::VectorXd& time,
                          const Eigen::VectorXi& status) {
  if (time.size() < 1) throw ParameterError("nelson_aalen needs n >= 1");
  if (status.size() != time.size())
    throw ShapeError("time/status length mismatch");
  const std::vector<int> order = order_by_time(time);
  const std::size_t n = order.size();

  StepFunction h;
  double cum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double t = time[order[i]];
    int d = 0;
    std::size_t at_risk = n - i;
    while (i < n && time[order[i]] == t) {
      if (status[order[i]] == 1) ++d;
      ++i;
    }
    if (d > 0) {
      cum += static_cast<double>(d) / static_cast<double>(at_risk);
      h.knots.push_back(t);
      h.values.push_back(cum);
    }
  }
  return h;
}

SurvivalCurve kaplan_meier_censoring(const Eigen::VectorXd& time,
                                     const Eigen::VectorXi& status) {
  if (time.size() < 1)
    throw ParameterError("kaplan_meier_censoring needs n >= 1");
  if (status.size() != time.size())
    throw ShapeError("time/status length mismatch");
  const std::vector<int> order = order_by_time(time);
  const std::size_t n = order.size();

  SurvivalCurve g;
  double surv = 1.0;
  std::size_t i = 0;
  while (i < n) {
    const double t = time[order[i]];
    int censored = 0;
    std::size_t at_risk = n - i;
    while (i < n && time[order[i]] == t) {
      if (status[order[i]] == 0) ++censored;
      ++i;
    }
    if (censored > 0) {
      surv *= 1.0 - static_cast<double>(censored) / static_cast<double>(at_risk);
      g.knots.push_back(t);
      g.values.push_back(surv);
    }
  }
  return g;
}

Eigen::VectorXd predict_survival(const Eigen::VectorXd& beta,
                                 const StepFunction& baseline_cumhaz,
                                 const Eigen::VectorXd& x,
                                 std::span<const double> horizons) {
  if (x.size() != beta.size())
    throw ShapeError("covariate vector width does not match coefficients");
  const double risk = std::exp(x.dot(beta));
  Eigen::VectorXd out(static_cast<Eigen::Index>(horizons.size()));
  for (std::size_t h = 0; h < horizons.size(); ++h)
    out[static_cast<Eigen::Index>(h)] =
        std::exp(-baseline_cumhaz(horizons[h]) * risk);
  return out;
}

Eigen::VectorXd predict_survival(const CoxFit& fit, const Eigen::VectorXd& x,
                                 std::span<const double> horizons) {
  return predict_survival(fit.beta, fit.baseline_cumhaz, x, horizons);
}

}  // namespace survmi
