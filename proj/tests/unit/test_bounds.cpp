#include <cmath>
#include <numbers>

#include <doctest.h>

#include "covest/bounds.hpp"
#include "test_util.hpp"

using namespace covest;

namespace {

double oracle_theorem1(double h, double n, double t, double eta, double gamma) {
  const double a = gamma * (2.0 * std::log(n) + std::log(eta)) / t;
  return h * std::max(std::sqrt(a), a);
}

}  // namespace

TEST_CASE("h_matrix examples") {
  const Eigen::MatrixXd i2 = Eigen::MatrixXd::Identity(2, 2);
  CHECK(h_matrix(i2, MaskDistribution(Eigen::Vector2d::Ones())) == Eigen::MatrixXd::Ones(2, 2));

  Eigen::MatrixXd d(2, 2);
  d << 4, 0, 0, 1;
  const Eigen::MatrixXd h = h_matrix(d, MaskDistribution(Eigen::Vector2d(0.5, 0.5)));
  CHECK(h(0, 0) == doctest::Approx(8.0));
  CHECK(h(1, 1) == doctest::Approx(2.0));
  CHECK(h(0, 1) == doctest::Approx(8.0));
  CHECK(h(1, 0) == doctest::Approx(8.0));

  const Eigen::MatrixXd h4 =
      h_matrix(Eigen::MatrixXd::Identity(4, 4), MaskDistribution::uniform(4, 2.0));
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(h4(i, j) == doctest::Approx(i == j ? 2.0 : 4.0));
  }

  CHECK(h_matrix(i2, MaskDistribution(Eigen::Vector2d::Ones()), 3.0) == 9.0 * Eigen::MatrixXd::Ones(2, 2));
}

TEST_CASE("h_matrix rejects bad input") {
  Eigen::MatrixXd neg = Eigen::MatrixXd::Identity(2, 2);
  neg(1, 1) = -1.0;
  const MaskDistribution p(Eigen::Vector2d::Ones());
  CHECK_THROWS_AS(h_matrix(neg, p), std::invalid_argument);
  CHECK_THROWS_AS(h_matrix(Eigen::MatrixXd::Identity(3, 3), p), std::invalid_argument);
}

TEST_CASE("entrywise_norm examples") {
  CHECK(entrywise_norm(Eigen::MatrixXd::Identity(2, 2), 2.0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(entrywise_norm(Eigen::MatrixXd::Ones(2, 2), 1.0) == doctest::Approx(4.0));
  Eigen::MatrixXd m(2, 2);
  m << 3, 4, 0, 0;
  CHECK(entrywise_norm(m, 2.0) == doctest::Approx(5.0));
  CHECK(entrywise_norm(-m, 2.0) == doctest::Approx(5.0));
  CHECK_THROWS_AS(entrywise_norm(m, 0.5), std::invalid_argument);
}

TEST_CASE("entrywise_norm with q = 2 is the Frobenius norm") {
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd m = testing::random_gaussian(5, 7, rng);
    CHECK(entrywise_norm(m, 2.0) == doctest::Approx(m.norm()).epsilon(1e-12));
  }
}

TEST_CASE("effective_rank examples") {
  for (int n = 1; n <= 8; ++n) {
    CHECK(effective_rank(Eigen::MatrixXd::Identity(n, n)) == doctest::Approx(n));
  }
  Eigen::VectorXd v(3);
  v << 1, -2, 0.5;
  CHECK(effective_rank(7.0 * v * v.transpose()) == doctest::Approx(1.0));
  CHECK(effective_rank(Eigen::Vector3d(2, 1, 1).asDiagonal().toDenseMatrix()) == doctest::Approx(2.0));
}

TEST_CASE("effective_rank errors") {
  CHECK_THROWS_AS(effective_rank(Eigen::MatrixXd::Zero(3, 3)), std::domain_error);
  CHECK_THROWS_AS(effective_rank(Eigen::Vector2d(1, -0.5).asDiagonal().toDenseMatrix()),
                  std::domain_error);
}

TEST_CASE("effective_rank lies between 1 and rank") {
  Rng rng(5);
  for (int rep = 0; rep < 200; ++rep) {
    const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * 12);
    const auto rank = 1 + static_cast<Eigen::Index>(rng.uniform() * n);
    const Eigen::MatrixXd s = testing::random_psd(n, rng, rank);
    const double r = effective_rank(s);
    CHECK(r >= 1.0 - 1e-12);
    CHECK(r <= static_cast<double>(rank) + 1e-8);
  }
}

TEST_CASE("theorem1_bound examples") {
  CHECK(theorem1_bound(1.0, 1, 2, std::exp(2.0), 1.0) == doctest::Approx(1.0));
  const double v = theorem1_bound(1.0, 10, 10000, 100.0, 1.0);
  CHECK(v == doctest::Approx(oracle_theorem1(1.0, 10, 1e4, 100, 1)).epsilon(1e-14));
  CHECK(v == doctest::Approx(0.030348).epsilon(1e-4));
  // Linear regime: gamma L / T > 1.
  CHECK(theorem1_bound(2.0, 3, 1, 10.0, 1.0) ==
        doctest::Approx(2.0 * (2 * std::log(3.0) + std::log(10.0))));
}

TEST_CASE("theorem1_bound scales by 1/2 per 4x samples in the square-root regime") {
  for (std::size_t t : {100u, 1000u, 5000u}) {
    const double a = theorem1_bound(3.0, 20, t, 50.0, 0.5);
    const double b = theorem1_bound(3.0, 20, 4 * t, 50.0, 0.5);
    CHECK(b == doctest::Approx(a / 2).epsilon(1e-14));
  }
}

TEST_CASE("theorem1_bound is monotone in T, eta and n") {
  Rng rng(6);
  for (int rep = 0; rep < 500; ++rep) {
    const double h = 0.1 + 10 * rng.uniform();
    const auto n = 1 + static_cast<std::size_t>(rng.uniform() * 100);
    const auto t = 1 + static_cast<std::size_t>(rng.uniform() * 1000);
    const double eta = 1.01 + 100 * rng.uniform();
    const double gamma = 0.01 + 3 * rng.uniform();
    const double base = theorem1_bound(h, n, t, eta, gamma);
    CHECK(base >= 0.0);
    CHECK(theorem1_bound(h, n, t + 1, eta, gamma) <= base);
    CHECK(theorem1_bound(h, n, t, eta * 1.5, gamma) >= base);
    CHECK(theorem1_bound(h, n + 1, t, eta, gamma) >= base);
    CHECK(base == doctest::Approx(oracle_theorem1(h, double(n), double(t), eta, gamma)).epsilon(1e-12));
  }
}

TEST_CASE("theorem1_bound errors") {
  CHECK_THROWS_AS(theorem1_bound(1.0, 2, 0, 10.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(theorem1_bound(1.0, 0, 5, 10.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(theorem1_bound(1.0, 2, 5, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(theorem1_bound(1.0, 2, 5, 10.0, 0.0), std::invalid_argument);
}

TEST_CASE("h_norm_erank_bound examples") {
  for (int n = 1; n <= 6; ++n) {
    const Eigen::MatrixXd i = Eigen::MatrixXd::Identity(n, n);
    const MaskDistribution p(Eigen::VectorXd::Ones(n));
    CHECK(h_norm_erank_bound(i, p, 1.0, 2.0) == doctest::Approx(2.0 * n));
    CHECK(entrywise_norm(h_matrix(i, p), 2.0) == doctest::Approx(n));
  }
  Eigen::MatrixXd d(2, 2);
  d << 4, 0, 0, 1;
  const MaskDistribution half(Eigen::Vector2d(0.5, 0.5));
  CHECK(h_norm_erank_bound(d, half, 1.0, 2.0) == doctest::Approx(40.0));
  CHECK(entrywise_norm(h_matrix(d, half), 2.0) == doctest::Approx(14.0));
  CHECK_THROWS_AS(h_norm_erank_bound(d, half, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("erank inequality holds on 1000 random instances") {
  Rng rng(7);
  for (int rep = 0; rep < 1000; ++rep) {
    const Eigen::MatrixXd s = testing::random_psd(6, rng);
    const MaskDistribution p(testing::random_probabilities(6, 0.2, 1.0, rng));
    const double q = 2.0 + static_cast<double>(rep % 3);
    const double sigma = 0.5 + rng.uniform();
    const double rhs = 2 * sigma * sigma * effective_rank(s) * spectral_norm_psd(s) /
                       (p.min_probability() * p.min_probability());
    double bound = 0.0;
    REQUIRE_NOTHROW(bound = h_norm_erank_bound(s, p, sigma, q));
    CHECK(bound == doctest::Approx(rhs).epsilon(1e-10));
    CHECK(entrywise_norm(h_matrix(s, p, sigma), q) <= rhs);
  }
}

TEST_CASE("make_bound_report assembles the pieces") {
  Eigen::MatrixXd d(2, 2);
  d << 4, 0, 0, 1;
  const MaskDistribution half(Eigen::Vector2d(0.5, 0.5));
  const BoundReport r = make_bound_report(d, half, 1.0, 2.0, 400, 20.0, 1.0);
  CHECK(r.h_norm_q == doctest::Approx(14.0));
  CHECK(r.erank == doctest::Approx(1.25));
  CHECK(r.bound_value == doctest::Approx(oracle_theorem1(14.0, 2, 400, 20, 1)));
  REQUIRE(r.erank_bound.has_value());
  CHECK(*r.erank_bound == doctest::Approx(40.0));
  CHECK(r.samples == 400);

  const BoundReport r1 = make_bound_report(d, half, 1.0, 1.0, 400, 20.0, 1.0);
  CHECK_FALSE(r1.erank_bound.has_value());
  CHECK(r1.h_norm_q == doctest::Approx(26.0));

  const BoundReport later = make_bound_report(d, half, 1.0, 2.0, 1600, 20.0, 1.0);
  CHECK(later.bound_value < r.bound_value);
}

TEST_CASE("calibrated gamma keeps coverage on fresh trials") {
  Rng rng(8);
  const Eigen::MatrixXd s = testing::random_psd(5, rng, 5);
  const MaskDistribution p(Eigen::VectorXd::Constant(5, 0.6));
  const double eta = 10.0;
  const GammaCalibration cal = calibrate_gamma(s, p, 1.0, 2.0, 200, eta, 1000, 11);
  CHECK(cal.gamma > 0.0);
  CHECK(cal.trials == 1000);
  CHECK(cal.target == doctest::Approx(0.2));
  CHECK(cal.exceed_fraction <= 0.2);

  // Slightly smaller gamma must break the target on the calibration trials.
  CHECK(bound_exceed_fraction(s, p, 1.0, 2.0, 200, eta, cal.gamma * 0.98, 1000, 11) > 0.2 - 1e-12);
  CHECK(bound_exceed_fraction(s, p, 1.0, 2.0, 200, eta, cal.gamma, 1000, 11) == cal.exceed_fraction);

  const double holdout = bound_exceed_fraction(s, p, 1.0, 2.0, 200, eta, cal.gamma, 1000, 12);
  CHECK(holdout <= 0.2 + 3 * std::sqrt(0.2 * 0.8 / 1000));
}
