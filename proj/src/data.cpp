#include "covest/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "covest/kernels.hpp"
#include "covest/linalg.hpp"

namespace covest {

void SampleStream::fill(Eigen::MatrixXd& rows, Eigen::Index count) {
  rows.resize(count, dim());
  Eigen::VectorXd x(dim());
  for (Eigen::Index k = 0; k < count; ++k) {
    next(x);
    rows.row(k) = x.transpose();
  }
}

namespace {

void check_symmetric(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument(std::string(what) + " must be a nonempty square matrix");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(what) + " is not symmetric");
  }
}

// Holds a reference to the model's factor; the model must outlive the stream.
class GaussianStream final : public SampleStream {
 public:
  GaussianStream(const Eigen::MatrixXd& factor, std::uint64_t seed)
      : factor_(factor), rng_(seed), g_(factor.cols()) {}

  Eigen::Index dim() const override { return factor_.rows(); }

  void next(Eigen::Ref<Eigen::VectorXd> x) override {
    for (Eigen::Index i = 0; i < g_.size(); ++i) g_[i] = rng_.normal();
    x.noalias() = factor_ * g_;
  }

 private:
  const Eigen::MatrixXd& factor_;
  Rng rng_;
  Eigen::VectorXd g_;
};

class EpochStream final : public SampleStream {
 public:
  EpochStream(const EmpiricalSource& source, std::uint64_t seed)
      : source_(source), rng_(seed), order_(source.size()) {
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    reshuffle();
  }

  Eigen::Index dim() const override { return source_.dim(); }

  void next(Eigen::Ref<Eigen::VectorXd> x) override {
    if (cursor_ == order_.size()) reshuffle();
    x = source_.records().row(order_[cursor_++]).transpose();
    const double scale = source_.noise_scale();
    if (scale > 0.0) {
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] += scale * rng_.normal();
    }
  }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_.engine());
    cursor_ = 0;
  }

  const EmpiricalSource& source_;
  Rng rng_;
  std::vector<Eigen::Index> order_;
  std::size_t cursor_ = 0;
};

}  // namespace

SyntheticModel::SyntheticModel(Eigen::MatrixXd base, double theta)
    : base_(std::move(base)), theta_(theta) {
  check_symmetric(base_, "base covariance");
  if (!(theta_ >= 0.0)) throw std::invalid_argument("theta must be nonnegative");
  const SymmetricEigen eig = psd_eigen(base_);
  base_norm_ = eig.values.maxCoeff();
  if (!(base_norm_ > 0.0)) throw std::invalid_argument("base covariance is zero");
  const double shift = theta_ * base_norm_;
  sigma_ = base_;
  sigma_.diagonal().array() += shift;
  factor_ = psd_sqrt(eig, shift);
}

std::unique_ptr<SampleStream> SyntheticModel::stream(std::uint64_t seed) const {
  return std::make_unique<GaussianStream>(factor_, seed);
}

SyntheticModel make_spiked_model(Eigen::Index n, Eigen::Index spikes, double spike, double theta,
                                 std::uint64_t seed) {
  if (n < 1 || spikes < 1 || spikes > n) {
    throw std::invalid_argument("spiked model needs 1 <= k <= n");
  }
  if (!(spike >= 1.0)) throw std::invalid_argument("spike must be >= 1");
  Rng rng(seed);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Sign-normalize against diag(R) so Q is Haar distributed.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(n);
  lambda.head(spikes).setConstant(spike);
  Eigen::MatrixXd c = q * lambda.asDiagonal() * q.transpose();
  c = 0.5 * (c + c.transpose()).eval();
  return SyntheticModel(std::move(c), theta);
}

EmpiricalSource::EmpiricalSource(Eigen::MatrixXd records, double theta)
    : records_(std::move(records)), theta_(theta) {
  if (records_.rows() < 1 || records_.cols() < 1) {
    throw std::invalid_argument("empirical source needs at least one record");
  }
  if (!(theta_ >= 0.0)) throw std::invalid_argument("theta must be nonnegative");
  const Eigen::RowVectorXd mean = records_.colwise().mean();
  records_.rowwise() -= mean;
  base_ = kernels::outer_sum_parallel(records_) / static_cast<double>(records_.rows());
  base_norm_ = psd_eigen(base_, 1e-8).values.maxCoeff();
  noise_scale_ = std::sqrt(theta_ * base_norm_);
  sigma_ = base_;
  sigma_.diagonal().array() += theta_ * base_norm_;
}

std::unique_ptr<SampleStream> EmpiricalSource::stream(std::uint64_t seed) const {
  return std::make_unique<EpochStream>(*this, seed);
}

EmpiricalSource build_empirical_source(const IdxTensor& images, const IdxTensor& labels, int digit,
                                       double theta) {
  if (labels.shape.size() != 1) throw std::invalid_argument("labels must be a 1-D IDX tensor");
  if (images.shape.size() < 2) throw std::invalid_argument("images must have at least 2 dimensions");
  if (images.shape[0] != labels.shape[0]) {
    throw std::invalid_argument("image count " + std::to_string(images.shape[0]) +
                                " does not match label count " + std::to_string(labels.shape[0]));
  }
  const std::size_t count = images.shape[0];
  const std::size_t n = count == 0 ? 0 : images.element_count() / count;

  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < count; ++i) {
    if (static_cast<int>(labels.data[i]) == digit) picked.push_back(i);
  }
  if (picked.empty()) {
    throw std::invalid_argument("no records with label " + std::to_string(digit));
  }
  Eigen::MatrixXd records(static_cast<Eigen::Index>(picked.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < picked.size(); ++r) {
    const std::uint8_t* row = images.data.data() + picked[r] * n;
    for (std::size_t j = 0; j < n; ++j) {
      records(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return EmpiricalSource(std::move(records), theta);
}

void MatrixStream::next(Eigen::Ref<Eigen::VectorXd> x) {
  if (cursor_ >= rows_.rows()) {
    throw OracleExhausted("sample source exhausted after " + std::to_string(rows_.rows()) +
                          " vectors");
  }
  x = rows_.row(cursor_++).transpose();
}

Eigen::MatrixXd sample_x(const DataSource& source, Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("sample_x: count must be >= 1");
  auto s = source.stream(seed);
  Eigen::MatrixXd rows;
  s->fill(rows, count);
  return rows;
}

}  // namespace covest
