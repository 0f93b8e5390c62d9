#include "covest/design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace covest {

namespace {

constexpr double kBudgetTol = 1e-10;
constexpr int kBisectionSteps = 200;
constexpr std::size_t kMaxAlternations = 500;
constexpr double kObjectiveTol = 1e-12;

Eigen::VectorXd clamp_shift(const Eigen::VectorXd& v, double lambda, double lo, double hi) {
  return (v.array() - lambda).max(lo).min(hi).matrix();
}

}  // namespace

Eigen::VectorXd project_box_simplex(const Eigen::VectorXd& v, double budget, double lo, double hi) {
  const auto n = static_cast<double>(v.size());
  if (v.size() == 0) throw std::invalid_argument("project_box_simplex: empty vector");
  if (!(lo <= hi)) throw std::invalid_argument("project_box_simplex: lo > hi");
  const double slack = kBudgetTol * std::max(1.0, std::abs(budget));
  if (!(n * lo <= budget + slack && budget <= n * hi + slack)) {
    throw std::invalid_argument("infeasible budget " + std::to_string(budget) + " for " +
                                std::to_string(v.size()) + " coordinates in [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }

  // sum(clamp(v - lambda)) is nonincreasing in lambda: n*hi at `left`, n*lo at `right`.
  double left = v.minCoeff() - hi;
  double right = v.maxCoeff() - lo;
  Eigen::VectorXd p = clamp_shift(v, left, lo, hi);
  if (std::abs(p.sum() - budget) <= kBudgetTol) return p;
  p = clamp_shift(v, right, lo, hi);
  if (std::abs(p.sum() - budget) <= kBudgetTol) return p;

  double lambda = 0.5 * (left + right);
  for (int step = 0; step < kBisectionSteps; ++step) {
    lambda = 0.5 * (left + right);
    p = clamp_shift(v, lambda, lo, hi);
    const double excess = p.sum() - budget;
    if (std::abs(excess) <= kBudgetTol) break;
    (excess > 0.0 ? left : right) = lambda;
  }

  // Solve exactly for lambda on the free set found by bisection.
  double free_sum = 0.0;
  double fixed_sum = 0.0;
  Eigen::Index free_count = 0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (p[i] > lo && p[i] < hi) {
      free_sum += v[i];
      ++free_count;
    } else {
      fixed_sum += p[i];
    }
  }
  if (free_count > 0) {
    const double refined = (free_sum - (budget - fixed_sum)) / static_cast<double>(free_count);
    Eigen::VectorXd q = clamp_shift(v, refined, lo, hi);
    if (std::abs(q.sum() - budget) <= std::abs(p.sum() - budget)) p = std::move(q);
  }
  return p;
}

double projection_kkt_residual(const Eigen::VectorXd& v, const Eigen::VectorXd& p, double lo,
                               double hi) {
  if (v.size() != p.size()) throw std::invalid_argument("projection_kkt_residual: size mismatch");
  // Feasible multipliers: free coordinates pin lambda = v_i - p_i; bound
  // coordinates give one-sided limits.
  double free_sum = 0.0;
  Eigen::Index free_count = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (p[i] > lo && p[i] < hi) {
      free_sum += v[i] - p[i];
      ++free_count;
    } else if (p[i] <= lo) {
      lower = std::max(lower, v[i] - lo);
    } else {
      upper = std::min(upper, v[i] - hi);
    }
  }
  double lambda = 0.0;
  if (free_count > 0) {
    lambda = free_sum / static_cast<double>(free_count);
  } else if (std::isfinite(lower) && std::isfinite(upper)) {
    lambda = 0.5 * (lower + upper);
  } else if (std::isfinite(lower)) {
    lambda = lower;
  } else {
    lambda = upper;
  }
  return (p - clamp_shift(v, lambda, lo, hi)).cwiseAbs().maxCoeff();
}

DesignSolution design_probabilities(const Eigen::VectorXd& diag_sigma, double budget, double floor) {
  const Eigen::Index n = diag_sigma.size();
  if (n == 0) throw std::invalid_argument("design: empty diagonal");
  if ((diag_sigma.array() < 0.0).any() || !diag_sigma.allFinite()) {
    throw std::invalid_argument("design: diagonal entries must be finite and nonnegative");
  }
  if (!(floor >= 0.0 && floor <= 1.0)) throw std::invalid_argument("design: floor must lie in [0, 1]");
  if (!(budget > 0.0)) throw std::invalid_argument("design: budget must be positive");

  const Eigen::VectorXd s = diag_sigma.cwiseSqrt();
  const double s_l1 = s.sum();
  if (!(s_l1 > 0.0)) throw std::invalid_argument("design: diagonal is all zero");
  const double s_sq = s.squaredNorm();

  auto objective = [&](const Eigen::VectorXd& p, double rho) {
    return 0.5 * (p - rho * s).squaredNorm();
  };

  const double nd = static_cast<double>(n);
  if (budget < nd * floor - 1e-10 * std::max(1.0, budget) || budget > nd + 1e-10 * std::max(1.0, budget)) {
    throw std::invalid_argument("design: budget infeasible for the floored box");
  }
  if (s.maxCoeff() == s.minCoeff()) {
    Eigen::VectorXd p = Eigen::VectorXd::Constant(n, budget / nd);
    const double rho = budget / s_l1;
    const double f = objective(p, rho);
    return DesignSolution{MaskDistribution(std::move(p)), rho, f, 0, true, 0.0, {f}};
  }

  double rho = budget / s_l1;
  Eigen::VectorXd p = project_box_simplex(rho * s, budget, floor, 1.0);
  double f = objective(p, rho);
  std::vector<double> history{f};
  std::size_t iterations = 0;
  bool converged = false;
  while (iterations < kMaxAlternations) {
    const double next_rho = p.dot(s) / s_sq;
    Eigen::VectorXd next_p = project_box_simplex(next_rho * s, budget, floor, 1.0);
    const double next = objective(next_p, next_rho);
    // Stop once a step no longer lowers the objective.
    if (!(next <= f)) {
      converged = true;
      break;
    }
    ++iterations;
    rho = next_rho;
    p = std::move(next_p);
    history.push_back(next);
    const double decrease = f - next;
    f = next;
    if (decrease < kObjectiveTol) {
      converged = true;
      break;
    }
  }

  if ((p.array() <= 0.0).any()) {
    throw std::invalid_argument("design assigns probability 0 to a coordinate; use a positive floor");
  }
  const double kkt = projection_kkt_residual(rho * s, p, floor, 1.0);
  return DesignSolution{MaskDistribution(std::move(p)), rho, f, iterations, converged, kkt,
                        std::move(history)};
}

DesignSolution update_design(const CovarianceEstimate& est, double budget, double floor) {
  const Eigen::VectorXd diag = est.matrix.diagonal().cwiseMax(0.0);
  return design_probabilities(diag, budget, floor);
}

}  // namespace covest
