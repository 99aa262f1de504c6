#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "survmi/rng.hpp"
#include "survmi/survival_core.hpp"

using namespace survmi;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

Eigen::VectorXi ivec(std::initializer_list<int> values) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (int x : values) v[i++] = x;
  return v;
}

struct Instance {
  std::vector<double> time;
  std::vector<int> status;
  std::vector<double> x;
};

// Random one-binary-covariate instances whose brute-force optimum is
// interior, so Newton and golden-section must agree.
Instance random_instance(Rng& rng) {
  for (;;) {
    const int n = 4 + static_cast<int>(rng.below(7));
    Instance inst;
    int events = 0;
    bool has0 = false;
    bool has1 = false;
    for (int i = 0; i < n; ++i) {
      inst.time.push_back(-std::log(rng.uniform_pos()));
      const int s = rng.uniform() < 0.7 ? 1 : 0;
      inst.status.push_back(s);
      events += s;
      inst.x.push_back(rng.uniform() < 0.5 ? 1.0 : 0.0);
      (inst.x.back() == 1.0 ? has1 : has0) = true;
    }
    // constant covariate: flat likelihood, no unique maximizer to compare
    if (events == 0 || !has0 || !has1) continue;
    const double argmax =
        oracle::maximize_cox_1d(inst.time, inst.status, inst.x, -10.0, 10.0);
    if (std::abs(argmax) > 8.0) continue;  // monotone likelihood, no optimum
    // flat likelihoods also arise when no event risk set mixes both
    // covariate values; require an identified interior optimum
    const double ll_at =
        oracle::cox_loglik_1d(inst.time, inst.status, inst.x, argmax);
    const double ll_near = std::max(
        oracle::cox_loglik_1d(inst.time, inst.status, inst.x, argmax - 0.5),
        oracle::cox_loglik_1d(inst.time, inst.status, inst.x, argmax + 0.5));
    if (ll_at - ll_near < 1e-9) continue;
    return inst;
  }
}

CoxFit fit_instance(const Instance& inst) {
  const Eigen::Index n = static_cast<Eigen::Index>(inst.time.size());
  Eigen::MatrixXd design(n, 1);
  Eigen::VectorXd time(n);
  Eigen::VectorXi status(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = inst.x[static_cast<std::size_t>(i)];
    time[i] = inst.time[static_cast<std::size_t>(i)];
    status[i] = inst.status[static_cast<std::size_t>(i)];
  }
  return fit_cox(design, time, status);
}

}  // namespace

TEST_CASE("nelson_aalen hand values") {
  // times (1,2,3), status (1,0,1) -> knots (1,3), values (1/3, 4/3)
  StepFunction h = nelson_aalen(vec({1, 2, 3}), ivec({1, 0, 1}));
  REQUIRE(h.knots.size() == 2);
  CHECK(h.knots[0] == 1.0);
  CHECK(h.knots[1] == 3.0);
  CHECK(h.values[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(h.values[1] == doctest::Approx(1.0 / 3.0 + 1.0).epsilon(1e-12));

  // tie at t=1: times (1,1,2), status (1,1,1) -> values (2/3, 2/3+1)
  StepFunction tied = nelson_aalen(vec({1, 1, 2}), ivec({1, 1, 1}));
  REQUIRE(tied.knots.size() == 2);
  CHECK(tied.values[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(tied.values[1] == doctest::Approx(2.0 / 3.0 + 1.0).epsilon(1e-12));

  // all censored -> zero function
  StepFunction zero = nelson_aalen(vec({1, 2, 3}), ivec({0, 0, 0}));
  CHECK(zero.knots.empty());
  CHECK(zero(2.5) == 0.0);

  // right-continuity and value before the first knot
  CHECK(h(0.5) == 0.0);
  CHECK(h(1.0) == doctest::Approx(1.0 / 3.0));
  CHECK(h(2.9) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("kaplan_meier_censoring hand values") {
  // times (1,2), status (0,1): G drops to 1/2 at t=1
  SurvivalCurve g = kaplan_meier_censoring(vec({1, 2}), ivec({0, 1}));
  CHECK(g(0.5) == 1.0);
  CHECK(g(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g(1.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.left_limit(1.0) == 1.0);

  // no censored observations -> G = 1 everywhere
  SurvivalCurve ones = kaplan_meier_censoring(vec({1, 2, 3}), ivec({1, 1, 1}));
  CHECK(ones.knots.empty());
  CHECK(ones(2.0) == 1.0);

  // all mass censored at 1 -> G(1) = 0
  SurvivalCurve zero = kaplan_meier_censoring(vec({1, 1}), ivec({0, 0}));
  CHECK(zero(1.0) == 0.0);
  CHECK(zero.left_limit(1.0) == 1.0);
}

TEST_CASE("fit_cox matches the brute-force oracle on the spec instance") {
  Instance inst{{1, 2, 3, 4}, {1, 1, 0, 1}, {1, 0, 1, 0}};
  const CoxFit fit = fit_instance(inst);
  const double brute =
      oracle::maximize_cox_1d(inst.time, inst.status, inst.x, -10.0, 10.0);
  CHECK(fit.beta[0] == doctest::Approx(brute).epsilon(1e-6));
}

TEST_CASE("fit_cox oracle equivalence on random small instances") {
  Rng rng(991);
  for (int rep = 0; rep < 40; ++rep) {
    const Instance inst = random_instance(rng);
    const CoxFit fit = fit_instance(inst);
    const double brute =
        oracle::maximize_cox_1d(inst.time, inst.status, inst.x, -10.0, 10.0);
    CHECK(std::abs(fit.beta[0] - brute) < 1e-6);

    // Analytic gradient against finite differences of the oracle PL.
    const Eigen::Index n = static_cast<Eigen::Index>(inst.time.size());
    Eigen::MatrixXd design(n, 1);
    Eigen::VectorXd time(n);
    Eigen::VectorXi status(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      design(i, 0) = inst.x[static_cast<std::size_t>(i)];
      time[i] = inst.time[static_cast<std::size_t>(i)];
      status[i] = inst.status[static_cast<std::size_t>(i)];
    }
    for (double beta : {0.0, 0.5, -1.0, fit.beta[0]}) {
      const double analytic =
          cox_gradient(design, time, status, vec({beta}))[0];
      const double fd =
          oracle::fd_gradient_1d(inst.time, inst.status, inst.x, beta);
      CHECK(std::abs(analytic - fd) <=
            1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("fit_cox degenerate designs") {
  // identical covariates: no contrast, beta = 0, baseline = Nelson-Aalen
  Eigen::MatrixXd design(4, 1);
  design << 1, 1, 1, 1;
  const Eigen::VectorXd time = vec({1, 2, 3, 4});
  const Eigen::VectorXi status = ivec({1, 0, 1, 1});
  const CoxFit fit = fit_cox(design, time, status);
  CHECK(fit.beta[0] == 0.0);
  // H0 is referenced to x = 0, so with beta = 0 it equals Nelson-Aalen.
  const StepFunction na = nelson_aalen(time, status);
  REQUIRE(fit.baseline_cumhaz.knots == na.knots);
  for (std::size_t k = 0; k < na.values.size(); ++k)
    CHECK(fit.baseline_cumhaz.values[k] == na.values[k]);

  // q = 0: null model identity, exact equality
  Eigen::MatrixXd empty(4, 0);
  const CoxFit null_fit = fit_cox(empty, time, status);
  CHECK(null_fit.beta.size() == 0);
  REQUIRE(null_fit.baseline_cumhaz.knots == na.knots);
  for (std::size_t k = 0; k < na.values.size(); ++k)
    CHECK(null_fit.baseline_cumhaz.values[k] == na.values[k]);

  // no events
  CHECK_THROWS_AS(fit_cox(design, time, ivec({0, 0, 0, 0})), NoEventsError);

  // a duplicated column keeps the linear predictor identified; the fit
  // lands somewhere on the optimal ridge and still predicts correctly
  Eigen::MatrixXd dup(4, 2);
  dup << 1, 1, 0, 0, 1, 1, 0, 0;
  const CoxFit ridge_fit = fit_cox(dup, time, status);
  Eigen::MatrixXd single = dup.leftCols(1);
  const CoxFit base_fit = fit_cox(single, time, status);
  CHECK(ridge_fit.beta.sum() ==
        doctest::Approx(base_fit.beta[0]).epsilon(1e-7));

  // iteration cap produces a ConvergenceError carrying the last iterate
  Eigen::MatrixXd hard(8, 1);
  hard << 2.0, -1.0, 0.5, 1.5, -0.5, 1.0, -2.0, 0.25;
  const Eigen::VectorXd ht = vec({1, 2, 3, 4, 5, 6, 7, 8});
  const Eigen::VectorXi hs = ivec({1, 1, 1, 0, 1, 1, 0, 1});
  CoxOptions capped;
  capped.max_iterations = 1;
  try {
    fit_cox(hard, ht, hs, capped);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    REQUIRE(e.last_beta.size() == 1);
    CHECK(std::isfinite(e.last_beta[0]));
  }
}

TEST_CASE("breslow baseline at beta = 0 equals nelson_aalen exactly") {
  Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 3 + static_cast<int>(rng.below(10));
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd time(n);
    Eigen::VectorXi status(n);
    for (int i = 0; i < n; ++i) {
      design(i, 0) = rng.normal();
      design(i, 1) = rng.uniform() < 0.5;
      time[i] = 0.25 + rng.below(6);  // force ties
      status[i] = rng.uniform() < 0.7;
    }
    if ((status.array() == 1).count() == 0) status[0] = 1;
    const StepFunction breslow =
        breslow_baseline(design, time, status, Eigen::VectorXd::Zero(2));
    const StepFunction na = nelson_aalen(time, status);
    REQUIRE(breslow.knots == na.knots);
    for (std::size_t k = 0; k < na.values.size(); ++k)
      CHECK(breslow.values[k] == na.values[k]);
  }
}

TEST_CASE("predict_survival formula and properties") {
  CoxFit fit;
  fit.beta = vec({std::log(2.0)});
  fit.baseline_cumhaz.knots = {5.0};
  fit.baseline_cumhaz.values = {0.2};

  // H0(5) = 0.2 and x.beta = log 2 -> S(5) = exp(-0.4)
  const std::vector<double> horizons{5.0};
  const Eigen::VectorXd s = predict_survival(fit, vec({1.0}), horizons);
  CHECK(s[0] == doctest::Approx(std::exp(-0.4)).epsilon(1e-12));
  CHECK(s[0] == doctest::Approx(0.6703).epsilon(1e-4));

  // S(0) = 1; beta = 0 -> S = exp(-H0); zero hazard -> S = 1
  const std::vector<double> grid{0.0, 1.0, 5.0, 10.0};
  CoxFit null_fit;
  null_fit.beta = vec({0.0});
  null_fit.baseline_cumhaz = fit.baseline_cumhaz;
  const Eigen::VectorXd s0 = predict_survival(null_fit, vec({3.0}), grid);
  CHECK(s0[0] == 1.0);
  CHECK(s0[2] == doctest::Approx(std::exp(-0.2)).epsilon(1e-12));
  CoxFit flat;
  flat.beta = vec({1.0});
  const Eigen::VectorXd s1 = predict_survival(flat, vec({2.0}), grid);
  for (Eigen::Index i = 0; i < s1.size(); ++i) CHECK(s1[i] == 1.0);

  // dimension mismatch
  CHECK_THROWS_AS(predict_survival(fit, vec({1.0, 2.0}), horizons),
                  ShapeError);

  // monotone non-increasing in t, antitone in x.beta, bounded in [0,1]
  Rng rng(17);
  for (int rep = 0; rep < 1000; ++rep) {
    CoxFit f;
    f.beta = vec({rng.normal()});
    f.baseline_cumhaz.knots = {1.0, 2.0, 4.0};
    const double a = rng.uniform();
    const double b = a + rng.uniform();
    f.baseline_cumhaz.values = {a, b, b + rng.uniform()};
    const std::vector<double> ts{0.5, 1.0, 2.5, 4.0, 9.0};
    const double x1 = rng.normal();
    const double x2 = x1 + rng.uniform();  // larger linear predictor
    const Eigen::VectorXd sa = predict_survival(f, vec({x1}), ts);
    const Eigen::VectorXd sb = predict_survival(f, vec({x2}), ts);
    for (Eigen::Index i = 0; i < sa.size(); ++i) {
      CHECK(sa[i] >= 0.0);
      CHECK(sa[i] <= 1.0);
      if (i > 0) CHECK(sa[i] <= sa[i - 1]);
      if (f.beta[0] > 0)
        CHECK(sb[i] <= sa[i]);
      else if (f.beta[0] < 0)
        CHECK(sb[i] >= sa[i]);
    }
  }
}

TEST_CASE("column scaling invariance") {
  Rng rng(23);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 20;
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd time(n);
    Eigen::VectorXi status(n);
    for (int i = 0; i < n; ++i) {
      design(i, 0) = rng.normal();
      design(i, 1) = rng.normal();
      time[i] = -std::log(rng.uniform_pos());
      status[i] = rng.uniform() < 0.8;
    }
    if ((status.array() == 1).count() == 0) status[0] = 1;
    const double c = 10.0;
    Eigen::MatrixXd scaled = design;
    scaled.col(0) *= c;

    const CoxFit base = fit_cox(design, time, status);
    const CoxFit rescaled = fit_cox(scaled, time, status);
    CHECK(rescaled.beta[0] == doctest::Approx(base.beta[0] / c).epsilon(1e-7));
    CHECK(rescaled.beta[1] == doctest::Approx(base.beta[1]).epsilon(1e-7));

    const std::vector<double> ts{0.5, 1.0, 2.0};
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd x = design.row(i).transpose();
      Eigen::VectorXd xs = scaled.row(i).transpose();
      const Eigen::VectorXd sa = predict_survival(base, x, ts);
      const Eigen::VectorXd sb = predict_survival(rescaled, xs, ts);
      for (Eigen::Index h = 0; h < sa.size(); ++h)
        CHECK(std::abs(sa[h] - sb[h]) < 1e-8);
    }
  }
}

TEST_CASE("fit_cox gradient norm at the optimum is small relative to n") {
  Rng rng(51);
  const int n = 60;
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd time(n);
  Eigen::VectorXi status(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) design(i, j) = rng.normal();
    time[i] = -std::log(rng.uniform_pos());
    status[i] = rng.uniform() < 0.7;
  }
  status[0] = 1;
  const CoxFit fit = fit_cox(design, time, status);
  const Eigen::VectorXd g = cox_gradient(design, time, status, fit.beta);
  CHECK(g.norm() < 1e-8 * n);
}

TEST_CASE("design spec dummy coding") {
  SurvivalDataset d;
  d.time = vec({1, 2, 3});
  d.status = ivec({1, 0, 1});
  d.predictors.resize(3, 2);
  d.predictors << 0.5, 2,  //
      1.5, 0,              //
      2.5, 1;
  d.missing.setZero(3, 2);
  d.columns = {{"age", ColumnKind::Continuous, 0, {}},
               {"grade", ColumnKind::Categorical, 3, {"a", "b", "c"}}};
  const DesignSpec spec = DesignSpec::from_dataset(d);
  // reference level = first observed = 2 ("c"); dummies for levels 0 and 1
  CHECK(spec.reference_level[1] == 2);
  REQUIRE(spec.width() == 3);
  const Eigen::MatrixXd x = spec.encode(d.predictors);
  CHECK(x(0, 0) == 0.5);
  CHECK(x(0, 1) == 0.0);  // level 2 is the reference
  CHECK(x(0, 2) == 0.0);
  CHECK(x(1, 1) == 1.0);  // level 0 dummy
  CHECK(x(2, 2) == 1.0);  // level 1 dummy
}
