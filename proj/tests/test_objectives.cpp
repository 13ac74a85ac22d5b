#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "common/util.hpp"
#include "sgld/dist/distribution.hpp"
#include "sgld/objectives/objectives.hpp"

using namespace sgld;
using namespace sgld::objectives;

TEST_CASE("quantile_grad follows the printed formula with a strict indicator") {
  const QuantileObjective q95{0.95, 1e-300};  // gamma negligible for these checks
  CHECK(quantile_grad(0.0, -1.0, {0.95, 1e-300}) == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(quantile_grad(0.0, 1.0, {0.95, 1e-300}) == doctest::Approx(-0.95).epsilon(1e-12));
  // boundary x == theta is not in the indicator
  CHECK(quantile_grad(1.0, 1.0, q95) == doctest::Approx(-0.95).epsilon(1e-12));
  CHECK_THROWS_AS(quantile_grad(std::nan(""), 0.0, q95), std::invalid_argument);
}

TEST_CASE("quantile_grad is unbiased at the stationary quantile") {
  // X ~ N(0, 1/(1-0.25)); the objective's minimizer is the 0.95 quantile
  const double sig = std::sqrt(4.0 / 3.0);
  const dist::DistributionSpec law{dist::Kind::normal, 0.0, sig};
  const double theta_true = dist::reference_var(law, 0.95);
  CHECK(theta_true == doctest::Approx(1.89).epsilon(0.005));  // the rounded value in common use

  const auto zs = testutil::standard_normals(200000, 11);
  std::vector<double> h_true, h_rounded;
  h_true.reserve(zs.size());
  h_rounded.reserve(zs.size());
  for (double z : zs) {
    const double x = sig * z;
    h_true.push_back(quantile_grad(theta_true, x, {0.95, 1e-300}));
    h_rounded.push_back(quantile_grad(1.89, x, {0.95, 1e-300}));
  }
  const auto mt = testutil::moments(h_true);
  CHECK(std::fabs(mt.mean) < 3 * mt.se_mean);
  // at the two-decimal quantile the residual drift is within noise at this n
  const auto mr = testutil::moments(h_rounded);
  CHECK(std::fabs(mr.mean) < 3 * mr.se_mean + 1e-3);
}

TEST_CASE("var_cvar_grad follows the printed formula with ties in the tail") {
  const VarCvarObjective v{0.95, 1e-300};
  CHECK(var_cvar_grad(0.0, 1.0, v) == doctest::Approx(-19.0).epsilon(1e-12));
  CHECK(var_cvar_grad(5.0, 1.0, v) == doctest::Approx(1.0).epsilon(1e-12));
  // boundary f(x) == theta counts as tail
  CHECK(var_cvar_grad(1.0, 1.0, v) == doctest::Approx(-19.0).epsilon(1e-12));
}

TEST_CASE("var_cvar_grad is unbiased at the 0.95 normal quantile") {
  const double var95 = dist::reference_var({dist::Kind::normal, 0.0, 1.0}, 0.95);
  CHECK(var95 == doctest::Approx(1.645).epsilon(3e-4));
  const auto zs = testutil::standard_normals(200000, 13);
  std::vector<double> h;
  h.reserve(zs.size());
  for (double z : zs) h.push_back(var_cvar_grad(var95, z, {0.95, 1e-300}));
  const auto m = testutil::moments(h);
  CHECK(std::fabs(m.mean) < 3 * m.se_mean);
}

TEST_CASE("mean var-cvar gradient is nondecreasing in theta (convexity of V)") {
  const auto zs = testutil::standard_normals(200000, 17);
  double prev = -1e9;
  for (double theta = -1.0; theta <= 3.0; theta += 0.5) {
    double mean = 0;
    for (double z : zs) mean += var_cvar_grad(theta, z, {0.95, 1e-300});
    mean /= static_cast<double>(zs.size());
    CHECK(mean >= prev - 1e-9);
    prev = mean;
  }
}

TEST_CASE("softmax weights: symmetry, simplex, overflow safety") {
  {
    const auto g = softmax_weights(std::vector<double>{0.0, 0.0});
    CHECK(g[0] == 0.5);
    CHECK(g[1] == 0.5);
  }
  {
    const auto g = softmax_weights(std::vector<double>{0.0, 0.0, 0.0, 0.0});
    for (double v : g) CHECK(v == 0.25);
  }
  {
    const auto g = softmax_weights(std::vector<double>{1.0, 0.0});
    CHECK(g[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  }
  {
    // logits far beyond exp overflow
    const auto g = softmax_weights(std::vector<double>{1000.0, -1000.0});
    CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g[1] >= 0.0);
    double sum = g[0] + g[1];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // simplex within 1e-12 on random logits
  auto us = testutil::uniforms(50, 23);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> w(5);
    for (int i = 0; i < 5; ++i) w[static_cast<std::size_t>(i)] = 20.0 * us[static_cast<std::size_t>(trial * 5 + i)] - 10.0;
    const auto g = softmax_weights(w);
    double sum = 0;
    for (double v : g) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
      sum += v;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("softmax jacobian: symmetric point, column sums, finite differences") {
  {
    const auto j = softmax_jacobian(std::vector<double>{0.0, 0.0});
    CHECK(j[0] == doctest::Approx(0.25).epsilon(1e-15));   // dg1/dw1
    CHECK(j[2] == doctest::Approx(-0.25).epsilon(1e-15));  // dg2/dw1
  }
  // column sums vanish: differentiating sum_i g_i = 1
  auto us = testutil::uniforms(40, 29);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<double> w(5);
    for (int i = 0; i < 5; ++i) w[static_cast<std::size_t>(i)] = 8.0 * us[static_cast<std::size_t>(trial * 5 + i)] - 4.0;
    const auto j = softmax_jacobian(w);
    for (int col = 0; col < 5; ++col) {
      double sum = 0;
      for (int row = 0; row < 5; ++row) sum += j[static_cast<std::size_t>(row * 5 + col)];
      CHECK(std::fabs(sum) < 1e-12);
      CHECK(j[static_cast<std::size_t>(col * 5 + col)] > 0.0);
      for (int row = 0; row < 5; ++row)
        if (row != col) CHECK(j[static_cast<std::size_t>(row * 5 + col)] <= 0.0);
    }
  }
  // finite-difference oracle at w = (1, 0, -1)
  const std::vector<double> w{1.0, 0.0, -1.0};
  const auto jac = softmax_jacobian(w);
  const double h = 1e-6;
  for (int col = 0; col < 3; ++col) {
    auto wp = w, wm = w;
    wp[static_cast<std::size_t>(col)] += h;
    wm[static_cast<std::size_t>(col)] -= h;
    const auto gp = softmax_weights(wp);
    const auto gm = softmax_weights(wm);
    for (int row = 0; row < 3; ++row) {
      const double fd = (gp[static_cast<std::size_t>(row)] - gm[static_cast<std::size_t>(row)]) / (2 * h);
      CHECK(std::fabs(jac[static_cast<std::size_t>(row * 3 + col)] - fd) < 1e-6);
    }
  }
}

TEST_CASE("portfolio_grad hand-checked cases") {
  const PortfolioObjective obj{0.95, 1e-300, 2};

  // indicator off: portfolio value below theta
  {
    PortfolioParameter p{1.0, {0.3, -0.2}};
    const auto h = portfolio_grad(p, std::vector<double>{0.0, 0.0}, obj);
    CHECK(h[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(h[1] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(h[2] == doctest::Approx(0.0).epsilon(1e-15));
  }
  // hand-computed tail case at the symmetric point
  {
    PortfolioParameter p{0.0, {0.0, 0.0}};
    const auto h = portfolio_grad(p, std::vector<double>{2.0, 0.0}, obj);
    CHECK(h[0] == doctest::Approx(-19.0).epsilon(1e-12));
    CHECK(h[1] == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(h[2] == doctest::Approx(-10.0).epsilon(1e-12));
  }
  // cross-check ghat against the jacobian route on random inputs
  auto us = testutil::uniforms(64, 31);
  for (int trial = 0; trial < 10; ++trial) {
    PortfolioParameter p{us[static_cast<std::size_t>(trial)], {0, 0, 0}};
    std::vector<double> x(3);
    for (int i = 0; i < 3; ++i) {
      p.w[static_cast<std::size_t>(i)] = 4.0 * us[static_cast<std::size_t>(10 + trial * 3 + i)] - 2.0;
      x[static_cast<std::size_t>(i)] = 6.0 * us[static_cast<std::size_t>(40 + ((trial * 3 + i) % 20))] - 3.0;
    }
    const PortfolioObjective obj3{0.95, 1e-300, 3};
    const auto h = portfolio_grad(p, x, obj3);
    const auto jac = softmax_jacobian(p.w);
    const auto g = softmax_weights(p.w);
    double port = 0;
    for (int i = 0; i < 3; ++i) port += g[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    const double ind = port >= p.theta ? 1.0 : 0.0;
    for (int j = 0; j < 3; ++j) {
      double ghat = 0;
      for (int i = 0; i < 3; ++i) ghat += jac[static_cast<std::size_t>(i * 3 + j)] * x[static_cast<std::size_t>(i)];
      const double expect = ghat * ind / (1.0 - 0.95);
      CHECK(h[static_cast<std::size_t>(1 + j)] == doctest::Approx(expect).epsilon(1e-9));
      // bound on the weight-gradient magnitude
      double abs_sum = 0;
      for (int i = 0; i < 3; ++i) abs_sum += std::fabs(x[static_cast<std::size_t>(i)]);
      CHECK(std::fabs(ghat) <= abs_sum * (1 + 1e-12));
    }
  }
  CHECK_THROWS_AS(portfolio_grad(PortfolioParameter{0.0, {0.0, 0.0}},
                                 std::vector<double>{1.0, 2.0, 3.0}, obj),
                  std::invalid_argument);
}

TEST_CASE("portfolio_grad is unbiased near the two-asset optimum") {
  // assets N(1,4) (sigma 2) and N(0,1); optimum near weights (0.11, 0.89)
  const PortfolioObjective obj{0.95, 1e-8, 2};
  PortfolioParameter p{1.617, {std::log(0.11), std::log(0.89)}};
  const int n = 1000000;
  const auto z = testutil::standard_normals(2 * n, 37);
  std::vector<double> h0(static_cast<std::size_t>(n)), h1(static_cast<std::size_t>(n)), h2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x1 = 1.0 + 2.0 * z[static_cast<std::size_t>(2 * i)];
    const double x2 = z[static_cast<std::size_t>(2 * i + 1)];
    const auto h = portfolio_grad(p, std::vector<double>{x1, x2}, obj);
    h0[static_cast<std::size_t>(i)] = h[0];
    h1[static_cast<std::size_t>(i)] = h[1];
    h2[static_cast<std::size_t>(i)] = h[2];
  }
  const auto m0 = testutil::moments(h0);
  const auto m1 = testutil::moments(h1);
  const auto m2 = testutil::moments(h2);
  // tabulated optimum is rounded to ~1e-3, allow that residual drift on top of 3 se
  CHECK(std::fabs(m0.mean) < 3 * m0.se_mean + 5e-3);
  CHECK(std::fabs(m1.mean) < 3 * m1.se_mean + 3e-3);
  CHECK(std::fabs(m2.mean) < 3 * m2.se_mean + 3e-3);
}

TEST_CASE("bounded-jump decomposition: |H - F| stays within the stated bounds") {
  auto us = testutil::uniforms(400, 41);
  for (int i = 0; i < 100; ++i) {
    const double theta = 10.0 * us[static_cast<std::size_t>(i)] - 5.0;
    const double x = 10.0 * us[static_cast<std::size_t>(100 + i)] - 5.0;
    const QuantileObjective q{0.9, 1e-6};
    CHECK(std::fabs(quantile_grad(theta, x, q) - (2 * q.gamma * theta - q.q)) <= 1.0 + 1e-12);
    const VarCvarObjective v{0.95, 1e-8};
    CHECK(std::fabs(var_cvar_grad(theta, x, v) - 2 * v.gamma * theta) <=
          (2.0 - v.q_bar) / (1.0 - v.q_bar) + 1e-12);
  }
}

TEST_CASE("objective_value_mc single asset") {
  const VarCvarObjective v{0.95, 1e-300};
  {
    const std::vector<double> samples{-3.0, -1.0, 0.0, -0.5};
    CHECK(objective_value_mc(0.0, v, samples) == 0.0);
  }
  {
    const std::vector<double> samples{1.0};
    CHECK(objective_value_mc(0.0, v, samples) == doctest::Approx(20.0).epsilon(1e-12));
  }
  {
    const int n = 10000000;
    const auto z = testutil::standard_normals(n, 43);
    const double got = objective_value_mc(1.645, v, z);
    CHECK(got == doctest::Approx(2.062).epsilon(0.005 / 2.062));
  }
  CHECK_THROWS_AS(objective_value_mc(0.0, v, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("objective_value_mc and gradients agree through common random numbers") {
  // central finite difference of the empirical objective vs the averaged oracle
  const VarCvarObjective v{0.95, 1e-8};
  const int n = 400000;
  const auto z = testutil::standard_normals(n, 47);
  const double h = 0.05;
  auto us = testutil::uniforms(5, 53);
  for (int k = 0; k < 5; ++k) {
    const double theta = 0.5 + 2.0 * us[static_cast<std::size_t>(k)];  // away from data pile-up at 0
    const double vp = objective_value_mc(theta + h, v, z);
    const double vm = objective_value_mc(theta - h, v, z);
    const double fd = (vp - vm) / (2 * h);
    std::vector<double> grads(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) grads[static_cast<std::size_t>(i)] = var_cvar_grad(theta, z[static_cast<std::size_t>(i)], v);
    const auto m = testutil::moments(grads);
    // the CRN finite difference smooths the indicator over [theta-h, theta+h]
    CHECK(std::fabs(m.mean - fd) < 3 * m.se_mean + 0.02);
  }

  const QuantileObjective q{0.95, 1e-6};
  const double sig = std::sqrt(4.0 / 3.0);
  for (int k = 0; k < 5; ++k) {
    const double theta = 1.0 + 1.5 * us[static_cast<std::size_t>(k)];
    double vp = 0, vm = 0, gmean = 0, gm2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = sig * z[static_cast<std::size_t>(i)];
      vp += testutil::pinball(q.q, x - (theta + h)) + q.gamma * (theta + h) * (theta + h);
      vm += testutil::pinball(q.q, x - (theta - h)) + q.gamma * (theta - h) * (theta - h);
      const double g = quantile_grad(theta, x, q);
      gmean += g;
      gm2 += g * g;
    }
    const double fd = (vp - vm) / (2 * h * n);
    gmean /= n;
    const double se = std::sqrt((gm2 / n - gmean * gmean) / n);
    CHECK(std::fabs(gmean - fd) < 3 * se + 0.02);
  }
}

TEST_CASE("objective_value_mc portfolio form") {
  const PortfolioObjective obj{0.95, 1e-300, 2};
  PortfolioParameter p{0.0, {0.0, 0.0}};
  // two samples, portfolio values 1 and -1
  const std::vector<double> samples{2.0, 0.0, -2.0, 0.0};
  const double got = objective_value_mc(p, obj, samples);
  CHECK(got == doctest::Approx(0.5 * 20.0 * 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(objective_value_mc(p, obj, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("objective validation") {
  CHECK_THROWS_AS((QuantileObjective{1.5, 1e-6}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((QuantileObjective{0.5, 0.0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((VarCvarObjective{0.0, 1e-8}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((PortfolioObjective{0.95, 1e-8, 1}).validate(), std::invalid_argument);
}
