#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "nostra/distributions.hpp"
#include "oracle/naive_model.hpp"

using namespace nostra;

namespace {
const WaitingTimeModel kDefaultWaiting{1.434, 0.6612, Discretization::DayBin};
}

TEST_CASE("delaporte: documented point values") {
  CHECK(delaporte_log_pmf(0, {0.0, 1.0, 0.0}) == 0.0);
  CHECK(delaporte_log_pmf(0, {1.0, 1.0, 0.0}) == doctest::Approx(std::log(oracle::delaporte_pmf(0, 1.0, 0.0))).epsilon(1e-15));
  CHECK(delaporte_log_pmf(0, {1.0, 1.0, 0.0}) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(delaporte_log_pmf(0, {0.0, 1.0, 0.404}) == doctest::Approx(-0.404).epsilon(1e-15));
}

TEST_CASE("delaporte: lambda = 0 is the negative binomial, alpha = 0 is the Poisson") {
  for (double alpha : {0.01, 0.5, 1.0, 7.0, 30.68, 100.0}) {
    for (long k = 0; k <= 50; ++k) {
      CHECK(std::abs(delaporte_log_pmf(k, {alpha, 1.0, 0.0}) - negbin_log_pmf(k, alpha, 1.0)) <= 1e-12);
    }
  }
  for (double lambda : {0.0, 0.404, 2.0, 5.0}) {
    for (long k = 0; k <= 50; ++k) {
      const LogProb a = delaporte_log_pmf(k, {0.0, 1.0, lambda});
      const LogProb b = poisson_log_pmf(k, lambda);
      if (b == kLogZero) {
        CHECK(a == kLogZero);
      } else {
        CHECK(std::abs(a - b) <= 1e-12);
      }
    }
  }
}

TEST_CASE("delaporte: matches the explicit convolution and keeps its mass") {
  for (double alpha : {0.01, 1.0, 30.68, 100.0}) {
    for (double lambda : {0.0, 0.404, 2.0}) {
      for (long k = 0; k <= 50; ++k) {
        const double expected = std::log(oracle::delaporte_pmf(k, alpha, lambda));
        CHECK(std::abs(delaporte_log_pmf(k, {alpha, 1.0, lambda}) - expected) <= 1e-12);
      }
    }
  }
  for (double alpha : {0.01, 1.0, 10.0, 30.68, 40.0, 100.0}) {
    for (double lambda : {0.0, 0.404, 2.0, 5.0}) {
      double mass = 0.0;
      for (long k = 0; k <= 500; ++k) mass += std::exp(delaporte_log_pmf(k, {alpha, 1.0, lambda}));
      // P(K > 500) = sum_j Pois(j) * q^(501 - j) over j <= 500, plus P(Pois > 500).
      const double q = alpha / (1.0 + alpha);
      double tail = 0.0;
      for (long j = 0; j <= 500; ++j) {
        const double pois = lambda == 0.0 ? (j == 0 ? 1.0 : 0.0)
                                          : std::exp(j * std::log(lambda) - lambda - std::lgamma(j + 1.0));
        tail += pois * std::pow(q, 501.0 - j);
      }
      if (tail > 1e-12) {
        CHECK(1.0 - mass == doctest::Approx(tail).epsilon(1e-6));
      } else {
        CHECK(std::abs(1.0 - mass) < 1e-12);
      }
      if (alpha <= 10.0) CHECK(1.0 - mass < 1e-8);
    }
  }
}

TEST_CASE("delaporte: general beta reduces to lgamma form") {
  // NB(r=2) at k=1 with p = 1/(1+alpha): r p^r (1-p)
  const double alpha = 3.0, p = 1.0 / (1.0 + alpha);
  CHECK(negbin_log_pmf(1, alpha, 2.0) == doctest::Approx(std::log(2.0 * p * p * (1.0 - p))).epsilon(1e-14));
}

TEST_CASE("delaporte: invalid input") {
  CHECK_THROWS_AS(delaporte_log_pmf(-1, {1.0, 1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(delaporte_log_pmf(0, {-1.0, 1.0, 0.0}), DomainError);
  CHECK_THROWS_AS(delaporte_log_pmf(0, {1.0, 0.0, 0.0}), DomainError);
  CHECK_THROWS_AS(delaporte_log_pmf(0, {1.0, 1.0, -0.1}), DomainError);
}

TEST_CASE("poisson log pmf") {
  CHECK(poisson_log_pmf(0, 0.404) == -0.404);
  CHECK(poisson_log_pmf(0, 0.0) == 0.0);
  CHECK(poisson_log_pmf(3, 0.0) == kLogZero);
  CHECK(poisson_log_pmf(2, 1.5) == doctest::Approx(std::log(std::exp(-1.5) * 1.5 * 1.5 / 2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(poisson_log_pmf(-1, 1.0), DomainError);
  CHECK_THROWS_AS(poisson_log_pmf(1, -1.0), DomainError);
}

TEST_CASE("waiting time day-bin masses") {
  const LogProb m0 = waiting_time_log_mass(0, kDefaultWaiting);
  CHECK(m0 > kLogZero);
  CHECK(m0 < 0.0);
  CHECK(m0 == doctest::Approx(std::log(oracle::lognormal_cdf(1.0, 1.434, 0.6612))).epsilon(1e-12));

  double total = 0.0;
  for (long d = 0; d <= 100; ++d) total += std::exp(waiting_time_log_mass(d, kDefaultWaiting));
  CHECK(total > 1.0 - 1e-6);
  CHECK(total <= 1.0 + 1e-12);

  CHECK(waiting_time_log_mass(4, kDefaultWaiting) > waiting_time_log_mass(50, kDefaultWaiting));
  CHECK(waiting_time_log_mass(4, kDefaultWaiting) ==
        doctest::Approx(std::log(oracle::waiting_mass(4, 1.434, 0.6612))).epsilon(1e-12));
  CHECK_THROWS_AS(waiting_time_log_mass(-1, kDefaultWaiting), DomainError);
  CHECK_THROWS_AS(waiting_time_log_mass(1, WaitingTimeModel{1.0, 0.0}), DomainError);
}

TEST_CASE("waiting time upper tail stays accurate") {
  // Survival-function differencing: the far tail must not collapse to zero.
  const LogProb far = waiting_time_log_mass(60, kDefaultWaiting);
  CHECK(far > kLogZero);
  CHECK(far < waiting_time_log_mass(30, kDefaultWaiting));
}

TEST_CASE("waiting time density switch") {
  WaitingTimeModel dens = kDefaultWaiting;
  dens.discretization = Discretization::Density;
  CHECK(waiting_time_log_mass(0, dens) == kLogZero);
  const double x = 4.0, z = (std::log(x) - 1.434) / 0.6612;
  const double pdf = std::exp(-0.5 * z * z) / (x * 0.6612 * std::sqrt(2.0 * std::numbers::pi));
  CHECK(waiting_time_log_mass(4, dens) == doctest::Approx(std::log(pdf)).epsilon(1e-13));
}

TEST_CASE("waiting time table agrees with direct evaluation") {
  WaitingTimeTable table(kDefaultWaiting, 30);
  for (long d = 0; d <= 60; ++d) CHECK(table(d) == waiting_time_log_mass(d, kDefaultWaiting));
  CHECK(table(-1) == kLogZero);
}

TEST_CASE("log_sum_exp") {
  const std::vector<LogProb> halves{std::log(0.5), std::log(0.5)};
  CHECK(std::abs(log_sum_exp(halves)) < 1e-15);
  const std::vector<LogProb> with_zero{kLogZero, std::log(0.3)};
  CHECK(log_sum_exp(with_zero) == std::log(0.3));
  const std::vector<LogProb> zeros{kLogZero, kLogZero};
  CHECK(log_sum_exp(zeros) == kLogZero);
  const std::vector<LogProb> tiny(1000, std::log(1e-300));
  CHECK(log_sum_exp(tiny) == doctest::Approx(std::log(1e-300) + std::log(1000.0)).epsilon(1e-14));
  CHECK_THROWS_AS(log_sum_exp(std::vector<LogProb>{}), DomainError);
}

TEST_CASE("log_sum_exp is permutation invariant and monotone") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-800.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LogProb> v(1 + trial % 12);
    for (auto& x : v) x = u(rng);
    const LogProb base = log_sum_exp(v);
    auto shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(log_sum_exp(shuffled) == doctest::Approx(base).epsilon(1e-14));
    auto bumped = v;
    bumped[0] += 0.5;
    CHECK(log_sum_exp(bumped) >= base);
  }
}
