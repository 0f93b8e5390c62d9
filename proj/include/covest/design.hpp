#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "covest/estimator.hpp"
#include "covest/sampling.hpp"

namespace covest {

/// Default probability floor: keeps every coordinate observable.
inline constexpr double kDefaultFloor = 1e-3;

/// Euclidean projection of v onto {p : sum(p) = budget, lo <= p_i <= hi},
/// by bisection on the multiplier lambda in p_i = clamp(v_i - lambda, lo, hi).
/// Throws std::invalid_argument unless n*lo <= budget <= n*hi.
Eigen::VectorXd project_box_simplex(const Eigen::VectorXd& v, double budget, double lo, double hi);

/// max_i |p_i - clamp(v_i - lambda, lo, hi)| for the best multiplier implied by p.
/// Zero (up to rounding) iff p is the projection of v.
double projection_kkt_residual(const Eigen::VectorXd& v, const Eigen::VectorXd& p, double lo,
                               double hi);

struct DesignSolution {
  MaskDistribution p;
  double rho = 0.0;
  double objective = 0.0;  // 0.5 ||p - rho s||^2
  std::size_t iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
  std::vector<double> objective_history;  // initial point, then one entry per step
};

/// Minimizes 0.5 ||p - rho sqrt(diag)||^2 over (p, rho) subject to
/// sum(p) = budget and floor <= p <= 1, by alternating exact minimization.
/// Throws std::invalid_argument on a negative or all-zero diagonal, an
/// infeasible budget, or a design that leaves a coordinate at probability 0.
DesignSolution design_probabilities(const Eigen::VectorXd& diag_sigma, double budget,
                                    double floor = kDefaultFloor);

/// design_probabilities on diag(est) with negative entries clamped to zero.
DesignSolution update_design(const CovarianceEstimate& est, double budget,
                             double floor = kDefaultFloor);

}  // namespace covest
