#pragma once

// Test-only oracles, written independently of the library code paths they
// check: the Breslow partial likelihood spelled out directly from its
// definition, a golden-section maximizer for the one-covariate case, and a
// plain product-limit survivor estimate.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

// log PL(beta) = sum over events i of [x_i beta - log sum_{T_j >= T_i}
// exp(x_j beta)], ties handled by using the full risk set at each event.
inline double cox_loglik_1d(const std::vector<double>& time,
                            const std::vector<int>& status,
                            const std::vector<double>& x, double beta) {
  double ll = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (status[i] != 1) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < time.size(); ++j)
      if (time[j] >= time[i]) denom += std::exp(x[j] * beta);
    ll += x[i] * beta - std::log(denom);
  }
  return ll;
}

// Golden-section maximization over [lo, hi]; the 1-D partial likelihood is
// concave, so the interior maximum is global.
inline double maximize_cox_1d(const std::vector<double>& time,
                              const std::vector<int>& status,
                              const std::vector<double>& x, double lo,
                              double hi, double tol = 1e-9) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = cox_loglik_1d(time, status, x, c);
  double fd = cox_loglik_1d(time, status, x, d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = cox_loglik_1d(time, status, x, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = cox_loglik_1d(time, status, x, d);
    }
  }
  return 0.5 * (a + b);
}

// Central finite difference of the written-out partial likelihood.
inline double fd_gradient_1d(const std::vector<double>& time,
                             const std::vector<int>& status,
                             const std::vector<double>& x, double beta,
                             double h = 1e-5) {
  return (cox_loglik_1d(time, status, x, beta + h) -
          cox_loglik_1d(time, status, x, beta - h)) /
         (2.0 * h);
}

// Empirical survivor fraction of an uncensored sample.
inline double empirical_survival(const std::vector<double>& time, double t) {
  std::size_t above = 0;
  for (double v : time)
    if (v > t) ++above;
  return static_cast<double>(above) / static_cast<double>(time.size());
}

}  // namespace oracle
