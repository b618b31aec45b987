#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "mvrs/model.hpp"
#include "support/oracle.hpp"

using mvrs::Family;
using mvrs::Observation;

namespace {

Observation make_obs(const std::vector<double>& z, double y) { return {{z.data(), z.size()}, y}; }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("log-likelihood values match reference evaluations") {
  // Reference numbers computed with 40-digit arithmetic.
  std::vector<double> z{1.5};
  mvrs::Vector theta{0.0, 1.0};
  CHECK(mvrs::loglik(make_obs(z, 1.0), theta, Family::Logistic) ==
        doctest::Approx(-0.20141327798275241).epsilon(1e-14));

  z[0] = -0.75;
  CHECK(mvrs::loglik(make_obs(z, 0.0), theta, Family::Logistic) ==
        doctest::Approx(-0.38687100611489994).epsilon(1e-14));

  z[0] = 0.7;
  CHECK(mvrs::loglik(make_obs(z, 3.0), theta, Family::Poisson) ==
        doctest::Approx(0.086247292529523478).epsilon(1e-14));
}

TEST_CASE("log-likelihood at zero parameters") {
  std::vector<double> z{0.3, -1.2};
  mvrs::Vector theta{0.0, 0.0, 0.0};
  CHECK(mvrs::loglik(make_obs(z, 1.0), theta, Family::Logistic) ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(mvrs::loglik(make_obs(z, 0.0), theta, Family::Logistic) ==
        doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  CHECK(mvrs::loglik(make_obs(z, 0.0), theta, Family::Poisson) == doctest::Approx(-1.0));
}

TEST_CASE("score and hessian at zero parameters have closed forms") {
  std::vector<double> z{2.0, -1.0};
  mvrs::Vector theta{0.0, 0.0, 0.0};

  // Logistic at theta = 0: mean 1/2, weight 1/4.
  mvrs::Vector g = mvrs::score(make_obs(z, 1.0), theta, Family::Logistic);
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(1.0));
  CHECK(g[2] == doctest::Approx(-0.5));
  mvrs::Matrix h = mvrs::hessian(make_obs(z, 1.0), theta, Family::Logistic);
  const double xt[3] = {1.0, 2.0, -1.0};
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b) CHECK(h(a, b) == doctest::Approx(-0.25 * xt[a] * xt[b]));

  // Poisson at theta = 0: mean 1, weight 1.
  std::vector<double> zp{0.5};
  mvrs::Vector tp{0.0, 0.0};
  g = mvrs::score(make_obs(zp, 3.0), tp, Family::Poisson);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(1.0));
  h = mvrs::hessian(make_obs(zp, 3.0), tp, Family::Poisson);
  CHECK(h(0, 0) == doctest::Approx(-1.0));
  CHECK(h(0, 1) == doctest::Approx(-0.5));
  CHECK(h(1, 0) == doctest::Approx(-0.5));
  CHECK(h(1, 1) == doctest::Approx(-0.25));
}

TEST_CASE("analytic derivatives agree with central differences") {
  std::mt19937_64 gen(4201);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> ycoin(0, 1);
  std::uniform_int_distribution<int> ypois(0, 6);
  std::uniform_int_distribution<std::size_t> dims(1, 5);

  for (Family f : {Family::Logistic, Family::Poisson}) {
    for (int rep = 0; rep < 100; ++rep) {
      const std::size_t p = dims(gen);
      std::vector<double> z(p);
      for (double& v : z) v = normal(gen);
      mvrs::Vector theta(p + 1);
      for (double& v : theta) v = 0.5 * normal(gen);
      const double y = f == Family::Logistic ? static_cast<double>(ycoin(gen))
                                             : static_cast<double>(ypois(gen));
      const Observation o = make_obs(z, y);

      const mvrs::Vector g = mvrs::score(o, theta, f);
      const mvrs::Vector g_fd = oracle::fd_score(o, theta, f);
      for (std::size_t j = 0; j <= p; ++j) {
        CHECK(std::abs(g[j] - g_fd[j]) <= 1e-5 * std::max(1.0, std::abs(g[j])));
      }

      const mvrs::Matrix h = mvrs::hessian(o, theta, f);
      const mvrs::Matrix h_fd = oracle::fd_hessian(o, theta, f);
      for (std::size_t a = 0; a <= p; ++a)
        for (std::size_t b = 0; b <= p; ++b) {
          CHECK(std::abs(h(a, b) - h_fd(a, b)) <= 1e-4 * std::max(1.0, std::abs(h(a, b))));
        }
    }
  }
}

TEST_CASE("kernels stay finite at extreme linear predictors") {
  CHECK(mvrs::glm::sigmoid(40.0) == doctest::Approx(1.0));
  CHECK(mvrs::glm::sigmoid(-40.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(mvrs::glm::sigmoid(-800.0) == 0.0);  // underflows cleanly, no NaN
  CHECK(std::isfinite(mvrs::glm::log1pexp(750.0)));
  CHECK(mvrs::glm::log1pexp(750.0) == doctest::Approx(750.0));
  CHECK(mvrs::glm::log1pexp(-50.0) == doctest::Approx(std::exp(-50.0)).epsilon(1e-12));

  std::vector<double> z{40.0};
  mvrs::Vector theta{0.0, 1.0};
  CHECK(std::isfinite(mvrs::loglik(make_obs(z, 1.0), theta, Family::Logistic)));
  CHECK(std::isfinite(mvrs::loglik(make_obs(z, 0.0), theta, Family::Logistic)));
}

TEST_CASE("poisson linear predictor beyond 700 is rejected") {
  std::vector<double> z{800.0};
  mvrs::Vector theta{0.0, 1.0};
  const Observation o = make_obs(z, 1.0);
  CHECK_THROWS_AS(mvrs::loglik(o, theta, Family::Poisson), mvrs::OverflowError);
  CHECK_THROWS_AS(mvrs::score(o, theta, Family::Poisson), mvrs::OverflowError);
  CHECK_THROWS_AS(mvrs::hessian(o, theta, Family::Poisson), mvrs::OverflowError);
  CHECK_NOTHROW(mvrs::loglik(o, theta, Family::Logistic));
}

TEST_CASE("glm input checks") {
  std::vector<double> z{1.0, 2.0};
  mvrs::Vector short_theta{0.0, 1.0};
  CHECK_THROWS_AS(mvrs::loglik(make_obs(z, 1.0), short_theta, Family::Logistic),
                  mvrs::DimensionError);

  mvrs::Vector theta{0.0, 1.0, 1.0};
  std::vector<double> bad{1.0, std::nan("")};
  CHECK_THROWS_AS(mvrs::score(make_obs(bad, 1.0), theta, Family::Logistic),
                  mvrs::InvalidValueError);
  CHECK_THROWS_AS(mvrs::score(make_obs(z, std::nan("")), theta, Family::Logistic),
                  mvrs::InvalidValueError);
}

TEST_CASE("dataset validation flags the first offending row") {
  mvrs::Dataset data;
  data.n_rows = 3;
  data.n_cov = 1;
  data.x = {0.1, 0.2, 0.3};
  data.y = {0.0, 1.0, 0.0};
  CHECK_NOTHROW(data.validate(Family::Logistic));
  CHECK_NOTHROW(data.validate(Family::Poisson));

  data.y[1] = 2.0;  // fine for poisson, not logistic
  CHECK_NOTHROW(data.validate(Family::Poisson));
  CHECK_THROWS_WITH_AS(data.validate(Family::Logistic),
                       "dataset: logistic response must be 0 or 1 at row 2",
                       mvrs::InvalidValueError);

  data.y[1] = 1.5;
  CHECK_THROWS_WITH_AS(data.validate(Family::Poisson),
                       "dataset: poisson response must be a nonnegative integer at row 2",
                       mvrs::InvalidValueError);

  data.y[1] = 1.0;
  data.x[2] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(data.validate(Family::Logistic),
                       "dataset: non-finite covariate at row 3", mvrs::InvalidValueError);

  data.x[2] = 0.3;
  data.y.pop_back();
  CHECK_THROWS_AS(data.validate(Family::Logistic), mvrs::DimensionError);
}

TEST_CASE("family names round trip") {
  CHECK(mvrs::family_from_name("logistic") == Family::Logistic);
  CHECK(mvrs::family_from_name("poisson") == Family::Poisson);
  CHECK(std::string(mvrs::family_name(Family::Logistic)) == "logistic");
  CHECK(std::string(mvrs::family_name(Family::Poisson)) == "poisson");
  CHECK_THROWS_AS(mvrs::family_from_name("gamma"), mvrs::ConfigError);
}

}  // TEST_SUITE
