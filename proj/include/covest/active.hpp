#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "covest/data.hpp"
#include "covest/design.hpp"
#include "covest/estimator.hpp"
#include "covest/sampling.hpp"

namespace covest {

struct ActiveConfig {
  double budget = 0.0;          // m
  std::size_t batch_size = 0;   // B
  std::size_t iterations = 0;   // N
  double floor = kDefaultFloor; // eps
  std::uint64_t seed = 0;       // master seed for the mask streams

  /// Throws std::invalid_argument unless B >= 1, N >= 1 and n*eps <= m <= n.
  void validate(Eigen::Index n) const;
};

/// Maps the merged estimate after a batch to the next sampling design.
using DesignRule = std::function<MaskDistribution(const CovarianceEstimate&)>;

struct TraceOptions {
  /// Keep per-step batch and merged matrices; otherwise only the final
  /// merged matrix is retained.
  bool keep_matrices = true;
};

struct ActiveStep {
  std::size_t iteration = 0;      // t
  std::size_t samples = 0;        // total samples after this step, (t+1) B
  Eigen::VectorXd design;         // p^(t), used for this batch
  std::optional<Eigen::MatrixXd> batch_estimate;
  std::optional<Eigen::MatrixXd> merged_estimate;
  std::optional<double> relative_error;
  std::size_t observed = 0;       // realized observed coordinates in the batch
};

struct ActiveTrace {
  std::vector<ActiveStep> steps;
  CovarianceEstimate final_estimate;
  Eigen::VectorXd final_design;   // p^(N), computed after the last merge

  std::vector<double> relative_errors() const;
};

/// Batch active estimation: p^(0) uniform; each step draws B masked samples
/// under the frozen p^(t), estimates with Xi built from p^(t), merges into the
/// running average, and redesigns with `rule` (update_design by default).
/// Masks for batch t come from derive_seed(cfg.seed, {kMask, t}).
ActiveTrace run_active(SampleStream& oracle, const ActiveConfig& cfg,
                       const std::optional<Eigen::MatrixXd>& truth = std::nullopt,
                       const TraceOptions& options = {}, const DesignRule& rule = {});

/// Fixed-design counterpart: every sample drawn under `p`, checkpointed every
/// `batch_size` samples on the same mask streams as run_active. Throws
/// std::invalid_argument unless `total` is a positive multiple of batch_size.
ActiveTrace run_fixed(SampleStream& oracle, const MaskDistribution& p, std::size_t total,
                      std::size_t batch_size, std::uint64_t seed,
                      const std::optional<Eigen::MatrixXd>& truth = std::nullopt,
                      const TraceOptions& options = {});

}  // namespace covest
