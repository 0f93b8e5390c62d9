#include "covest/active.hpp"

#include <stdexcept>
#include <string>

#include "covest/kernels.hpp"
#include "covest/rng.hpp"

namespace covest {

void ActiveConfig::validate(Eigen::Index n) const {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iteration count must be >= 1");
  if (!(floor >= 0.0 && floor <= 1.0)) throw std::invalid_argument("floor must lie in [0, 1]");
  const auto nd = static_cast<double>(n);
  const double slack = 1e-10 * std::max(1.0, budget);
  if (!(budget > 0.0 && nd * floor <= budget + slack && budget <= nd + slack)) {
    throw std::invalid_argument("budget " + std::to_string(budget) + " is infeasible for n = " +
                                std::to_string(n) + " and floor " + std::to_string(floor));
  }
}

std::vector<double> ActiveTrace::relative_errors() const {
  std::vector<double> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.relative_error.value_or(0.0));
  return out;
}

namespace {

// Shared loop for the adaptive and fixed arms; `rule` returns the design for
// the next batch given the merged estimate.
ActiveTrace run_batches(SampleStream& oracle, MaskDistribution design, std::size_t batch_size,
                        std::size_t iterations, std::uint64_t seed,
                        const std::optional<Eigen::MatrixXd>& truth, const TraceOptions& options,
                        const DesignRule& rule) {
  const Eigen::Index n = oracle.dim();
  if (design.dim() != n) throw std::invalid_argument("design dimension does not match the oracle");
  if (truth && (truth->rows() != n || truth->cols() != n)) {
    throw std::invalid_argument("truth dimension does not match the oracle");
  }
  const auto b = static_cast<Eigen::Index>(batch_size);

  ActiveTrace trace;
  trace.steps.reserve(iterations);
  CovarianceEstimate merged = CovarianceEstimate::zero(n);
  Eigen::MatrixXd x;
  Eigen::MatrixXd uniforms(b, n);
  Eigen::MatrixXd observed;

  for (std::size_t t = 0; t < iterations; ++t) {
    oracle.fill(x, b);
    Rng rng(derive_seed(seed, {stream_id::kMask, static_cast<std::uint64_t>(t)}));
    for (Eigen::Index k = 0; k < b; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) uniforms(k, i) = rng.uniform();
    }
    const std::size_t seen =
        kernels::apply_masks_parallel(x, uniforms, design.probabilities(), observed);

    CovarianceEstimate batch = estimate_cov(observed, design);
    merged = merge_estimates(merged, batch);

    ActiveStep step;
    step.iteration = t;
    step.samples = merged.sample_count;
    step.design = design.probabilities();
    step.observed = seen;
    if (truth) step.relative_error = relative_frobenius_error(merged, *truth);
    if (options.keep_matrices) {
      step.batch_estimate = std::move(batch.matrix);
      step.merged_estimate = merged.matrix;
    }
    trace.steps.push_back(std::move(step));

    design = rule(merged);
    if (design.dim() != n) throw std::logic_error("design rule changed the dimension");
  }
  trace.final_estimate = std::move(merged);
  trace.final_design = design.probabilities();
  return trace;
}

}  // namespace

ActiveTrace run_active(SampleStream& oracle, const ActiveConfig& cfg,
                       const std::optional<Eigen::MatrixXd>& truth, const TraceOptions& options,
                       const DesignRule& rule) {
  const Eigen::Index n = oracle.dim();
  cfg.validate(n);
  DesignRule next = rule;
  if (!next) {
    next = [&cfg](const CovarianceEstimate& est) {
      return update_design(est, cfg.budget, cfg.floor).p;
    };
  }
  return run_batches(oracle, MaskDistribution::uniform(n, cfg.budget), cfg.batch_size,
                     cfg.iterations, cfg.seed, truth, options, next);
}

ActiveTrace run_fixed(SampleStream& oracle, const MaskDistribution& p, std::size_t total,
                      std::size_t batch_size, std::uint64_t seed,
                      const std::optional<Eigen::MatrixXd>& truth, const TraceOptions& options) {
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (total < batch_size || total % batch_size != 0) {
    throw std::invalid_argument("total samples " + std::to_string(total) +
                                " must be a positive multiple of the checkpoint size " +
                                std::to_string(batch_size));
  }
  return run_batches(oracle, p, batch_size, total / batch_size, seed, truth, options,
                     [&p](const CovarianceEstimate&) { return p; });
}

}  // namespace covest
