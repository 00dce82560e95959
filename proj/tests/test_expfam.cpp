#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "sefe/expfam.hpp"

using namespace sefe;

TEST_CASE("log_prob at reference points") {
  CHECK(log_prob(Family::Bernoulli, 1.0, 0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(log_prob(Family::Poisson, 0.0, 0.0) == doctest::Approx(-1.0).epsilon(1e-15));
  // 2 ln 3 - 3 - ln 2, evaluated independently in double precision.
  CHECK(std::abs(log_prob(Family::Poisson, 2.0, std::log(3.0)) - (-1.4959226032237258)) < 1e-12);

  const double saturated = log_prob(Family::Bernoulli, 1.0, 100.0);
  CHECK(std::isfinite(saturated));
  CHECK(saturated <= 0.0);
  CHECK(saturated > -1e-40);
}

TEST_CASE("dlogp_deta at reference points") {
  CHECK(dlogp_deta(Family::Bernoulli, 1.0, 0.0) == 0.5);
  CHECK(dlogp_deta(Family::Poisson, 0.0, 0.0) == -1.0);
  FamilySpec spec{Family::Poisson};
  CHECK(dlogp_deta(spec, 3.0, 0.0) == 2.0);
}

TEST_CASE("support is enforced") {
  CHECK_THROWS_AS(log_prob(Family::Bernoulli, 2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(log_prob(Family::Bernoulli, 0.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(log_prob(Family::Poisson, -1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(log_prob(Family::Poisson, 1.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(dlogp_deta(Family::Bernoulli, -1.0, 0.0), std::invalid_argument);
  CHECK(admits(Family::Poisson, 7.0));
  CHECK_FALSE(admits(Family::Bernoulli, 7.0));
}

TEST_CASE("derivative matches central differences") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> eta_dist(-6.0, 3.0);
  const double h = 1e-5;
  for (int trial = 0; trial < 500; ++trial) {
    const double eta = eta_dist(rng);
    for (auto [family, x] : {std::pair{Family::Bernoulli, 0.0}, {Family::Bernoulli, 1.0},
                             {Family::Poisson, 0.0}, {Family::Poisson, 4.0}}) {
      const double numeric = (log_prob(family, x, eta + h) - log_prob(family, x, eta - h)) / (2 * h);
      const double analytic = dlogp_deta(family, x, eta);
      const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      CHECK(std::abs(numeric - analytic) / denom < 1e-6);
    }
  }
}

TEST_CASE("log_prob is concave in eta") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> eta_dist(-20.0, 20.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double a = eta_dist(rng), b = eta_dist(rng);
    for (auto [family, x] : {std::pair{Family::Bernoulli, 0.0}, {Family::Bernoulli, 1.0},
                             {Family::Poisson, 0.0}, {Family::Poisson, 3.0}}) {
      const double mid = log_prob(family, x, 0.5 * (a + b));
      const double chord = 0.5 * (log_prob(family, x, a) + log_prob(family, x, b));
      CHECK(mid >= chord - 1e-12);
    }
  }
}

TEST_CASE("Bernoulli probabilities sum to one") {
  for (double eta = -30.0; eta <= 30.0; eta += 0.25) {
    const double total = std::exp(log_prob(Family::Bernoulli, 1.0, eta)) +
                         std::exp(log_prob(Family::Bernoulli, 0.0, eta));
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("no overflow over the working range") {
  for (double eta = -700.0; eta <= 700.0; eta += 3.5) {
    CHECK(std::isfinite(log_prob(Family::Bernoulli, 0.0, eta)));
    CHECK(std::isfinite(log_prob(Family::Bernoulli, 1.0, eta)));
    CHECK(std::isfinite(dlogp_deta(Family::Bernoulli, 1.0, eta)));
  }
  for (double eta = -700.0; eta <= 30.0; eta += 3.5) {
    CHECK(std::isfinite(log_prob(Family::Poisson, 0.0, eta)));
    CHECK(std::isfinite(log_prob(Family::Poisson, 5.0, eta)));
  }
  CHECK(softplus(800.0) == 800.0);
  CHECK(softplus(-800.0) == 0.0);
  CHECK(sigmoid(0.0) == 0.5);
}
