#include <cmath>
#include <vector>

#include <doctest.h>

#include "covest/data.hpp"
#include "covest/estimator.hpp"
#include "test_util.hpp"

using namespace covest;

TEST_CASE("full observation reduces to the plain outer product") {
  const MaskDistribution p(Eigen::Vector2d::Ones());
  Eigen::MatrixXd y(1, 2);
  y << 1, 2;
  const CovarianceEstimate est = estimate_cov(y, p);
  Eigen::Matrix2d expected;
  expected << 1, 2, 2, 4;
  CHECK(est.matrix == expected);
  CHECK(est.sample_count == 1);
  CHECK(est.iteration == 1);
}

TEST_CASE("a single half-observed sample is reweighted by 1/p") {
  const MaskDistribution p(Eigen::Vector2d(0.5, 0.5));
  const std::vector<MaskedSample> samples{{Mask{1, 0}, Eigen::Vector2d(1.0, 0.0)}};
  const CovarianceEstimate est = estimate_cov(samples, p);
  Eigen::Matrix2d expected;
  expected << 2, 0, 0, 0;
  CHECK(est.matrix == expected);
}

TEST_CASE("estimate_cov rejects empty or mismatched input") {
  const MaskDistribution p = MaskDistribution::uniform(3, 1.5);
  CHECK_THROWS_AS(estimate_cov(Eigen::MatrixXd(0, 3), p), std::invalid_argument);
  CHECK_THROWS_AS(estimate_cov(Eigen::MatrixXd::Ones(4, 2), p), std::invalid_argument);
  CHECK_THROWS_AS(estimate_cov(std::vector<MaskedSample>{}, p), std::invalid_argument);
  const std::vector<MaskedSample> bad{{Mask{1, 1}, Eigen::Vector2d(1.0, 1.0)}};
  CHECK_THROWS_AS(estimate_cov(bad, p), std::invalid_argument);
}

TEST_CASE("sample-list and matrix forms agree") {
  Rng rng(21);
  const MaskDistribution p(testing::random_probabilities(6, 0.2, 1.0, rng));
  std::vector<MaskedSample> samples;
  Eigen::MatrixXd rows(40, 6);
  for (int k = 0; k < 40; ++k) {
    samples.push_back(mask_sample(testing::random_gaussian(6, 1, rng), p, rng));
    rows.row(k) = samples.back().observed.transpose();
  }
  CHECK(estimate_cov(samples, p).matrix == estimate_cov(rows, p).matrix);
}

TEST_CASE("p = 1 gives the plain second-moment matrix for n up to 50") {
  Rng rng(2);
  for (int rep = 0; rep < 40; ++rep) {
    const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * 50);
    const auto t = 1 + static_cast<Eigen::Index>(rng.uniform() * 400);
    const Eigen::MatrixXd x = testing::random_gaussian(t, n, rng) * 3.0;
    const Eigen::MatrixXd plain = x.transpose() * x / static_cast<double>(t);
    const CovarianceEstimate est = estimate_cov(x, MaskDistribution(Eigen::VectorXd::Ones(n)));
    CHECK((est.matrix - plain).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, plain.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("estimate is unbiased: spiked n = 4, p = 0.5, T = 50000") {
  const SyntheticModel model = make_spiked_model(4, 1, 10.0, 0.0, 31);
  const Eigen::MatrixXd& sigma = model.covariance();
  const MaskDistribution p = MaskDistribution::uniform(4, 2.0);
  const Eigen::Index t = 50000;
  const Eigen::MatrixXd x = sample_x(model, t, 32);
  Rng rng(33);
  Eigen::MatrixXd y(t, 4);
  for (Eigen::Index k = 0; k < t; ++k) {
    y.row(k) = mask_sample(x.row(k).transpose(), p, rng).observed.transpose();
  }
  const CovarianceEstimate est = estimate_cov(y, p);

  // Oracle: per-sample unbiased terms y_i y_j / xi_ij, their mean and standard error.
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double w = i == j ? 1.0 / p[i] : 1.0 / (p[i] * p[j]);
      double s1 = 0.0, s2 = 0.0;
      for (Eigen::Index k = 0; k < t; ++k) {
        const double z = y(k, i) * y(k, j) * w;
        s1 += z;
        s2 += z * z;
      }
      const double mean = s1 / t;
      const double se = std::sqrt((s2 / t - mean * mean) / t);
      CHECK(est.matrix(i, j) == doctest::Approx(mean).epsilon(1e-10));
      CHECK(std::abs(mean - sigma(i, j)) <= 5 * se);
    }
  }
  CHECK(est.matrix == est.matrix.transpose());
}

TEST_CASE("merge_estimates weights by the iteration counter") {
  Eigen::Matrix2d a, b;
  a << 1, 2, 2, 5;
  b << 3, -1, -1, 1;
  const CovarianceEstimate batch{b, 10, 1};

  const CovarianceEstimate first = merge_estimates(CovarianceEstimate::zero(2), batch);
  CHECK(first.matrix == b);
  CHECK(first.iteration == 1);
  CHECK(first.sample_count == 10);

  const CovarianceEstimate second = merge_estimates(CovarianceEstimate{a, 10, 1}, batch);
  CHECK(second.matrix.isApprox((a + b) / 2, 1e-15));
  CHECK(second.iteration == 2);
  CHECK(second.sample_count == 20);

  const CovarianceEstimate fourth = merge_estimates(CovarianceEstimate{a, 30, 3}, batch);
  CHECK(fourth.matrix.isApprox(0.75 * a + 0.25 * b, 1e-15));
  CHECK(fourth.iteration == 4);

  CHECK_THROWS_AS(merge_estimates(CovarianceEstimate::zero(3), batch), std::invalid_argument);
}

TEST_CASE("merging equal batches equals estimating on the concatenation") {
  Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const auto n = 2 + static_cast<Eigen::Index>(rng.uniform() * 10);
    const MaskDistribution p(testing::random_probabilities(n, 0.1, 1.0, rng));
    const int batches = 2 + static_cast<int>(rng.uniform() * 10);
    const Eigen::Index b = 1 + static_cast<Eigen::Index>(rng.uniform() * 30);
    const Eigen::MatrixXd all = testing::random_gaussian(batches * b, n, rng);
    CovarianceEstimate merged = CovarianceEstimate::zero(n);
    for (int k = 0; k < batches; ++k) {
      merged = merge_estimates(merged, estimate_cov(Eigen::MatrixXd(all.middleRows(k * b, b)), p));
    }
    const CovarianceEstimate whole = estimate_cov(all, p);
    CHECK((merged.matrix - whole.matrix).norm() <= 1e-10 * whole.matrix.norm());
    CHECK(merged.sample_count == whole.sample_count);
    CHECK(merged.matrix == merged.matrix.transpose());
  }
}

TEST_CASE("relative_frobenius_error") {
  const Eigen::Matrix2d i2 = Eigen::Matrix2d::Identity();
  CHECK(relative_frobenius_error(Eigen::MatrixXd(i2), Eigen::MatrixXd(i2)) == 0.0);
  Eigen::Matrix2d t;
  t << 3, 1, 1, 2;
  CHECK(relative_frobenius_error(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd(t)) == 1.0);
  CHECK(relative_frobenius_error(Eigen::MatrixXd(2 * i2), Eigen::MatrixXd(i2)) == 1.0);
  CHECK_THROWS_AS(relative_frobenius_error(Eigen::MatrixXd(i2), Eigen::MatrixXd::Zero(2, 2)),
                  std::domain_error);
  CHECK_THROWS_AS(relative_frobenius_error(Eigen::MatrixXd(i2), Eigen::MatrixXd::Identity(3, 3)),
                  std::invalid_argument);
}
