#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "covest/idx.hpp"
#include "covest/rng.hpp"

namespace covest {

/// Thrown when a finite sample source runs dry.
class OracleExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A stateful stream of i.i.d. vectors x.
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  virtual Eigen::Index dim() const = 0;
  /// Writes the next vector into `x` (size dim()).
  virtual void next(Eigen::Ref<Eigen::VectorXd> x) = 0;

  /// Fills `rows` (count x dim) with the next `count` vectors.
  void fill(Eigen::MatrixXd& rows, Eigen::Index count);
};

/// An immutable distribution for x. Streams created with the same seed
/// produce identical sequences.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual Eigen::Index dim() const = 0;
  /// The true covariance of x.
  virtual const Eigen::MatrixXd& covariance() const = 0;
  virtual std::unique_ptr<SampleStream> stream(std::uint64_t seed) const = 0;
};

/// Gaussian x with covariance Sigma = C + theta ||C|| I.
class SyntheticModel final : public DataSource {
 public:
  /// Throws std::invalid_argument if C is not symmetric PSD or theta < 0.
  SyntheticModel(Eigen::MatrixXd base, double theta);

  Eigen::Index dim() const override { return base_.rows(); }
  const Eigen::MatrixXd& covariance() const override { return sigma_; }
  std::unique_ptr<SampleStream> stream(std::uint64_t seed) const override;

  const Eigen::MatrixXd& base() const noexcept { return base_; }
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }
  double theta() const noexcept { return theta_; }
  double base_norm() const noexcept { return base_norm_; }

 private:
  Eigen::MatrixXd base_;
  double theta_;
  double base_norm_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd factor_;
};

/// C = Q diag(spike x k, 1 x (n-k)) Q^T with Haar-random orthogonal Q drawn
/// from `seed`. Throws std::invalid_argument unless 1 <= k <= n and spike >= 1.
SyntheticModel make_spiked_model(Eigen::Index n, Eigen::Index spikes, double spike, double theta,
                                 std::uint64_t seed);

/// Mean-removed records z_1..z_N sampled without replacement (reshuffled each
/// epoch) plus isotropic Gaussian noise of variance theta ||C||.
class EmpiricalSource final : public DataSource {
 public:
  /// `records` is N x n; the column means are removed here.
  EmpiricalSource(Eigen::MatrixXd records, double theta);

  Eigen::Index dim() const override { return records_.cols(); }
  const Eigen::MatrixXd& covariance() const override { return sigma_; }
  std::unique_ptr<SampleStream> stream(std::uint64_t seed) const override;

  const Eigen::MatrixXd& records() const noexcept { return records_; }
  /// C = (1/N) sum z z^T of the mean-removed records.
  const Eigen::MatrixXd& base() const noexcept { return base_; }
  double base_norm() const noexcept { return base_norm_; }
  double theta() const noexcept { return theta_; }
  double noise_scale() const noexcept { return noise_scale_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(records_.rows()); }

 private:
  Eigen::MatrixXd records_;
  double theta_;
  Eigen::MatrixXd base_;
  double base_norm_;
  double noise_scale_;
  Eigen::MatrixXd sigma_;
};

/// Records of one label from an IDX image tensor (N x d1 x d2 ...) and a label
/// vector (N). Throws std::invalid_argument on mismatched counts or when no
/// record carries `digit`.
EmpiricalSource build_empirical_source(const IdxTensor& images, const IdxTensor& labels, int digit,
                                       double theta);

/// Finite stream over fixed rows; throws OracleExhausted past the last row.
class MatrixStream final : public SampleStream {
 public:
  explicit MatrixStream(Eigen::MatrixXd rows) : rows_(std::move(rows)) {}
  Eigen::Index dim() const override { return rows_.cols(); }
  void next(Eigen::Ref<Eigen::VectorXd> x) override;

 private:
  Eigen::MatrixXd rows_;
  Eigen::Index cursor_ = 0;
};

/// Draws `count` vectors from a fresh stream of `source` (count x n).
Eigen::MatrixXd sample_x(const DataSource& source, Eigen::Index count, std::uint64_t seed);

}  // namespace covest
