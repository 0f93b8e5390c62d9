#include "covest/sampling.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace covest {

MaskDistribution::MaskDistribution(Eigen::VectorXd p) : p_(std::move(p)) {
  if (p_.size() == 0) throw std::invalid_argument("mask distribution must be nonempty");
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    const double v = p_[i];
    if (!(v > 0.0 && v <= 1.0)) {
      throw std::invalid_argument("observation probability p[" + std::to_string(i) + "] = " +
                                  std::to_string(v) + " is outside (0, 1]");
    }
  }
  budget_ = p_.sum();
}

MaskDistribution MaskDistribution::uniform(Eigen::Index n, double budget) {
  if (n <= 0) throw std::invalid_argument("dimension must be positive");
  return MaskDistribution(Eigen::VectorXd::Constant(n, budget / static_cast<double>(n)));
}

XiMatrix::XiMatrix(const MaskDistribution& p) {
  const Eigen::VectorXd& v = p.probabilities();
  values_ = v * v.transpose();
  values_.diagonal() = v;
}

XiMatrix make_xi(const MaskDistribution& p) { return XiMatrix(p); }

Eigen::MatrixXd hadamard_inverse(const Eigen::MatrixXd& xi) {
  for (Eigen::Index j = 0; j < xi.cols(); ++j) {
    for (Eigen::Index i = 0; i < xi.rows(); ++i) {
      const double v = xi(i, j);
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::domain_error("Xi has a nonpositive entry at (" + std::to_string(i) + ", " +
                                std::to_string(j) + "); the distribution is invalid");
      }
    }
  }
  return xi.cwiseInverse();
}

Eigen::MatrixXd hadamard_inverse(const XiMatrix& xi) { return xi.values().cwiseInverse(); }

Mask draw_mask(const MaskDistribution& p, Rng& rng) {
  Mask mask(static_cast<std::size_t>(p.dim()));
  for (Eigen::Index i = 0; i < p.dim(); ++i) {
    mask[static_cast<std::size_t>(i)] = rng.uniform() < p[i] ? 1 : 0;
  }
  return mask;
}

MaskedSample mask_sample(const Eigen::Ref<const Eigen::VectorXd>& x, const MaskDistribution& p,
                         Rng& rng) {
  if (x.size() != p.dim()) {
    throw std::invalid_argument("sample has dimension " + std::to_string(x.size()) +
                                ", distribution has " + std::to_string(p.dim()));
  }
  MaskedSample s{draw_mask(p, rng), Eigen::VectorXd::Zero(x.size())};
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (s.mask[static_cast<std::size_t>(i)]) s.observed[i] = x[i];
  }
  return s;
}

std::size_t observed_count(const Mask& mask) noexcept {
  return std::accumulate(mask.begin(), mask.end(), std::size_t{0});
}

}  // namespace covest
