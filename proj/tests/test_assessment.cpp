#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "survmi/assessment.hpp"
#include "survmi/rng.hpp"

using namespace survmi;

TEST_CASE("quantile_linear basics") {
  // Interpolates the empirical CDF over distinct values.
  std::vector<double> v{-0.1, -0.05, 0.05, 0.1};
  CHECK(quantile_linear(v, 0.9) == doctest::Approx(0.08).epsilon(1e-12));
  CHECK(quantile_linear(v, 0.1) == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(quantile_linear(v, 0.5) == doctest::Approx(-0.05).epsilon(1e-12));
  CHECK(quantile_linear(v, 1.0) == 0.1);
  CHECK(quantile_linear(v, 0.0) == -0.1);
  CHECK(quantile_linear({3.0}, 0.7) == 3.0);

  // Duplicating every observation leaves the quantiles unchanged.
  std::vector<double> doubled;
  for (double x : v) {
    doubled.push_back(x);
    doubled.push_back(x);
  }
  for (double p : {0.1, 0.25, 0.5, 0.9})
    CHECK(quantile_linear(doubled, p) == quantile_linear(v, p));
}

TEST_CASE("variation_R hand case") {
  // Two subjects with row means 0.5; deviations {+-0.1, +-0.05} -> 18.0.
  Eigen::MatrixXd preds(2, 2);
  preds << 0.4, 0.6,  //
      0.45, 0.55;
  CHECK(variation_R(preds) == doctest::Approx(18.0).epsilon(1e-12));
}

TEST_CASE("variation_R filter and invariance properties") {
  // constant matrix -> 0
  CHECK(variation_R(Eigen::MatrixXd::Constant(5, 4, 0.5)) == 0.0);

  // rows with mean outside [0.2, 0.8] contribute nothing
  Eigen::MatrixXd preds(3, 2);
  preds << 0.4, 0.6,   //
      0.45, 0.55,      //
      0.85, 0.95;      // mean 0.9, discarded
  CHECK(variation_R(preds) == doctest::Approx(18.0).epsilon(1e-12));

  // all rows filtered out
  Eigen::MatrixXd high = Eigen::MatrixXd::Constant(3, 2, 0.95);
  CHECK_THROWS_AS(variation_R(high), EmptyFilterError);
  CHECK_THROWS_AS(variation_R(Eigen::MatrixXd::Constant(3, 1, 0.5)),
                  ParameterError);

  // permutation invariance over subjects and imputation columns
  Rng rng(5);
  Eigen::MatrixXd m(6, 5);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      m(i, k) = 0.3 + 0.4 * rng.uniform();
  const double base = variation_R(m);
  Eigen::MatrixXd rows = m.colwise().reverse().eval();
  Eigen::MatrixXd cols = m.rowwise().reverse().eval();
  CHECK(variation_R(rows) == doctest::Approx(base).epsilon(1e-15));
  CHECK(variation_R(cols) == doctest::Approx(base).epsilon(1e-15));

  // duplicating every subject row leaves the statistic unchanged
  Eigen::MatrixXd dup(12, 5);
  dup << m, m;
  CHECK(variation_R(dup) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("brier_ipcw identities") {
  // perfect 0/1 predictions, no censoring -> 0
  Eigen::VectorXd time(4);
  time << 1, 2, 5, 6;
  Eigen::VectorXi status(4);
  status << 1, 1, 1, 1;
  Eigen::VectorXd perfect(4);
  perfect << 0, 0, 1, 1;  // t = 3: first two dead, last two alive
  CHECK(brier_ipcw(perfect, time, status, 3.0) == 0.0);

  // no censoring -> plain mean squared error of (1{T>t} - S)
  Rng rng(77);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 3 + static_cast<int>(rng.below(20));
    Eigen::VectorXd t(n);
    Eigen::VectorXi s = Eigen::VectorXi::Ones(n);
    Eigen::VectorXd pred(n);
    for (int i = 0; i < n; ++i) {
      t[i] = 0.1 + 5.0 * rng.uniform();
      pred[i] = rng.uniform();
    }
    const double horizon = 2.0;
    double mse = 0.0;
    for (int i = 0; i < n; ++i) {
      const double outcome = t[i] > horizon ? 1.0 : 0.0;
      mse += (outcome - pred[i]) * (outcome - pred[i]);
    }
    mse /= n;
    CHECK(std::abs(brier_ipcw(pred, t, s, horizon) - mse) < 1e-12);
  }

  // hand-checked weighted case: censoring at work
  {
    Eigen::VectorXd t(3);
    t << 1, 2, 4;
    Eigen::VectorXi s(3);
    s << 1, 0, 1;
    Eigen::VectorXd pred(3);
    pred << 0.2, 0.5, 0.9;
    // G: censored at 2 among {2,4} at risk -> G(t>=2) = 1/2
    // i=0: event before 3, G(1-) = 1 -> 0.2^2
    // i=1: censored before 3 -> no contribution
    // i=2: alive at 3, G(3) = 1/2 -> (1-0.9)^2 * 2
    const double expected = (0.04 + 0.0 + 0.01 * 2.0) / 3.0;
    CHECK(brier_ipcw(pred, t, s, 3.0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }

  // everyone censored by t: no subject contributes, score is 0 (the
  // zero-weight guard cannot fire when G comes from the same sample)
  {
    Eigen::VectorXd t(2);
    t << 1, 5;
    Eigen::VectorXd pred(2);
    pred << 0.5, 0.5;
    Eigen::VectorXi both(2);
    both << 0, 0;
    CHECK(brier_ipcw(pred, t, both, 6.0) == 0.0);
  }
}

TEST_CASE("bias_summary") {
  Eigen::VectorXd truth(3);
  truth << 0.5, 0.5, 0.5;
  Eigen::VectorXd pred(3);
  pred << 0.52, 0.52, 0.52;
  CHECK(bias_summary(pred, truth) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(bias_summary(truth, truth) == 0.0);

  // subjects with truth outside [0.2, 0.8] are excluded
  Eigen::VectorXd truth2(3);
  truth2 << 0.5, 0.9, 0.5;
  Eigen::VectorXd pred2(3);
  pred2 << 0.54, 0.0, 0.54;
  CHECK(bias_summary(pred2, truth2) == doctest::Approx(0.04).epsilon(1e-12));

  Eigen::VectorXd high = Eigen::VectorXd::Constant(3, 0.95);
  CHECK_THROWS_AS(bias_summary(high, high), EmptyFilterError);

  // linear in a constant shift
  Rng rng(3);
  Eigen::VectorXd t5(5), p5(5);
  for (int i = 0; i < 5; ++i) {
    t5[i] = 0.3 + 0.4 * rng.uniform();
    p5[i] = t5[i] + 0.1 * rng.normal();
  }
  const double base = bias_summary(p5, t5);
  const double shifted = bias_summary(p5.array() + 0.07, t5);
  CHECK(shifted == doctest::Approx(base + 0.07).epsilon(1e-12));
}

TEST_CASE("simulation_variation_R") {
  // identical replicates -> 0
  std::vector<Eigen::MatrixXd> preds{Eigen::MatrixXd::Constant(4, 3, 0.5)};
  std::vector<Eigen::VectorXd> truth{Eigen::VectorXd::Constant(4, 0.5)};
  CHECK(simulation_variation_R(preds, truth) == 0.0);

  // single simulation reduces to the filtered variation_R
  Rng rng(9);
  Eigen::MatrixXd m(8, 4);
  Eigen::VectorXd tv(8);
  for (Eigen::Index i = 0; i < 8; ++i) {
    tv[i] = rng.uniform();
    for (Eigen::Index k = 0; k < 4; ++k) m(i, k) = 0.2 + 0.6 * rng.uniform();
  }
  std::vector<double> tvec(tv.data(), tv.data() + tv.size());
  const double lo = quantile_linear(tvec, 0.2);
  const double hi = quantile_linear(tvec, 0.8);
  std::vector<std::uint8_t> keep(8);
  for (Eigen::Index i = 0; i < 8; ++i)
    keep[static_cast<std::size_t>(i)] = tv[i] >= lo && tv[i] <= hi;
  const double expected = variation_R_filtered(m, keep);
  CHECK(simulation_variation_R({m}, {tv}) ==
        doctest::Approx(expected).epsilon(1e-15));

  // mean across simulations
  CHECK(simulation_variation_R({m, m}, {tv, tv}) ==
        doctest::Approx(expected).epsilon(1e-15));
}
