#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "covest/rng.hpp"

namespace covest {

using Mask = std::vector<std::uint8_t>;

/// Per-coordinate observation probabilities p with 0 < p_i <= 1.
/// The budget m = sum(p) is the expected number of observed coordinates.
class MaskDistribution {
 public:
  /// Throws std::invalid_argument unless every entry lies in (0, 1].
  explicit MaskDistribution(Eigen::VectorXd p);

  /// p_i = m / n for every coordinate.
  static MaskDistribution uniform(Eigen::Index n, double budget);

  const Eigen::VectorXd& probabilities() const noexcept { return p_; }
  Eigen::Index dim() const noexcept { return p_.size(); }
  double budget() const noexcept { return budget_; }
  double min_probability() const noexcept { return p_.minCoeff(); }
  double operator[](Eigen::Index i) const { return p_[i]; }

 private:
  Eigen::VectorXd p_;
  double budget_;
};

/// A realized observation: the mask and y = mask ⊙ x.
struct MaskedSample {
  Mask mask;
  Eigen::VectorXd observed;
};

/// Second-moment matrix of the mask: p_i on the diagonal, p_i p_j elsewhere.
class XiMatrix {
 public:
  explicit XiMatrix(const MaskDistribution& p);
  const Eigen::MatrixXd& values() const noexcept { return values_; }

 private:
  Eigen::MatrixXd values_;
};

XiMatrix make_xi(const MaskDistribution& p);

/// Entrywise reciprocal. Throws std::domain_error on a nonpositive or
/// non-finite entry.
Eigen::MatrixXd hadamard_inverse(const Eigen::MatrixXd& xi);
Eigen::MatrixXd hadamard_inverse(const XiMatrix& xi);

/// delta_i = 1 with probability p_i, independently; consumes exactly
/// dim() uniforms from the stream, in coordinate order.
Mask draw_mask(const MaskDistribution& p, Rng& rng);

/// Throws std::invalid_argument on a dimension mismatch.
MaskedSample mask_sample(const Eigen::Ref<const Eigen::VectorXd>& x, const MaskDistribution& p,
                         Rng& rng);

std::size_t observed_count(const Mask& mask) noexcept;

}  // namespace covest
