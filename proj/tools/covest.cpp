// covest: command-line front end for masked covariance estimation.
//
//   covest design     --diag 4,1 --budget 1
//   covest estimate   --samples y.csv --p p.csv
//   covest active     --n 16 --budget-frac 0.5 --batch 50 --iterations 40
//   covest experiment --config configs/spiked_n16.json --trials 10
//   covest bound      --sigma sigma.csv --p p.csv --T 1000 --eta 20
//   covest calibrate-gamma --sigma sigma.csv --p p.csv --T 200 --eta 10
//
// Results go to stdout or --out; diagnostics go to stderr.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include "covest/active.hpp"
#include "covest/bounds.hpp"
#include "covest/csv.hpp"
#include "covest/data.hpp"
#include "covest/design.hpp"
#include "covest/estimator.hpp"
#include "covest/experiment.hpp"
#include "covest/version.hpp"

namespace {

using nlohmann::json;

json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Eigen::VectorXd r = m.row(i).transpose();
    rows.push_back(to_json(r));
  }
  return rows;
}

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out);
  f << j.dump(2) << '\n';
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("COVEST_SEED")) return std::stoull(env);
  return 1;
}

// ---- design -------------------------------------------------------------

struct DesignArgs {
  std::string diag;
  double budget = 0.0;
  double eps = covest::kDefaultFloor;
  std::string out;
};

int cmd_design(const DesignArgs& a) {
  const Eigen::VectorXd diag = covest::csv::vector_arg(a.diag);
  const covest::DesignSolution sol = covest::design_probabilities(diag, a.budget, a.eps);
  json j{{"p", to_json(sol.p.probabilities())},
         {"budget", sol.p.budget()},
         {"rho", sol.rho},
         {"objective", sol.objective},
         {"kkt_residual", sol.kkt_residual},
         {"iterations", sol.iterations},
         {"converged", sol.converged}};
  emit(j, a.out);
  return 0;
}

// ---- estimate -----------------------------------------------------------

struct EstimateArgs {
  std::string samples;
  std::string p;
  std::optional<double> budget;
  std::string out;
};

int cmd_estimate(const EstimateArgs& a) {
  const Eigen::MatrixXd y = covest::csv::read_matrix(a.samples);
  std::optional<covest::MaskDistribution> p;
  if (!a.p.empty()) {
    p.emplace(covest::csv::vector_arg(a.p));
  } else if (a.budget) {
    p.emplace(covest::MaskDistribution::uniform(y.cols(), *a.budget));
  } else {
    throw std::invalid_argument("estimate needs --p or --budget");
  }
  const covest::CovarianceEstimate est = covest::estimate_cov(y, *p);
  if (a.out.empty()) {
    covest::csv::write_matrix(std::cout, est.matrix);
  } else {
    covest::csv::write_matrix(a.out, est.matrix);
  }
  std::cerr << "estimated " << est.dim() << "x" << est.dim() << " covariance from "
            << est.sample_count << " samples\n";
  return 0;
}

// ---- active -------------------------------------------------------------

struct SourceArgs {
  Eigen::Index n = 16;
  Eigen::Index spikes = 2;
  double spike = 50.0;
  std::optional<double> theta;
  std::optional<double> theta_times_n;
  std::optional<std::uint64_t> model_seed;
};

struct ActiveArgs {
  SourceArgs source;
  std::string data;  // optional CSV of x rows used as a finite oracle
  std::optional<double> budget;
  std::optional<double> budget_frac;
  std::size_t batch = 50;
  std::size_t iterations = 40;
  double eps = covest::kDefaultFloor;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_active(const ActiveArgs& a) {
  std::unique_ptr<covest::SampleStream> stream;
  std::optional<Eigen::MatrixXd> truth;
  std::unique_ptr<covest::SyntheticModel> model;
  if (!a.data.empty()) {
    stream = std::make_unique<covest::MatrixStream>(covest::csv::read_matrix(a.data));
  } else {
    covest::SourceSpec s;
    s.n = a.source.n;
    s.spikes = a.source.spikes;
    s.spike = a.source.spike;
    s.theta = a.source.theta;
    s.theta_times_n = a.source.theta_times_n;
    if (!s.theta && !s.theta_times_n) s.theta_times_n = 1.0;
    const std::uint64_t model_seed =
        a.source.model_seed.value_or(covest::derive_seed(a.seed, {covest::stream_id::kModel}));
    model = std::make_unique<covest::SyntheticModel>(
        covest::make_spiked_model(s.n, s.spikes, s.spike, s.resolved_theta(s.n), model_seed));
    stream = model->stream(covest::derive_seed(a.seed, {0, covest::stream_id::kData}));
    truth = model->covariance();
  }
  const auto n = static_cast<double>(stream->dim());
  double budget = 0.5 * n;
  if (a.budget) budget = *a.budget;
  if (a.budget_frac) budget = *a.budget_frac * n;

  const covest::ActiveConfig cfg{budget, a.batch, a.iterations, a.eps,
                                 covest::derive_seed(a.seed, {0, covest::stream_id::kMask})};
  const covest::ActiveTrace trace = covest::run_active(*stream, cfg, truth, {false});

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw std::runtime_error("cannot write " + a.out);
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  out << "iteration,samples,rel_err,observed";
  for (Eigen::Index i = 0; i < stream->dim(); ++i) out << ",p_" << i;
  out << '\n';
  for (const auto& step : trace.steps) {
    out << step.iteration << ',' << step.samples << ','
        << (step.relative_error ? covest::csv::format_number(*step.relative_error, 12) : "")
        << ',' << step.observed;
    for (Eigen::Index i = 0; i < step.design.size(); ++i) {
      out << ',' << covest::csv::format_number(step.design[i], 12);
    }
    out << '\n';
  }
  return 0;
}

// ---- experiment ---------------------------------------------------------

struct ExperimentArgs {
  std::string config;
  std::optional<std::size_t> trials;
  std::optional<std::string> arms;
  std::optional<std::string> budgets;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> iterations;
  std::optional<std::string> out;
  std::optional<std::string> metadata;
  std::optional<int> jobs;
};

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

int cmd_experiment(const ExperimentArgs& a) {
  std::ifstream in(a.config);
  if (!in) throw std::runtime_error("cannot open config " + a.config);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + a.config + " is not valid JSON: " + e.what());
  }
  if (!j.contains("seed")) j["seed"] = default_seed();
  covest::ExperimentSpec spec = covest::ExperimentSpec::from_json(j);
  if (a.trials) spec.trials = *a.trials;
  if (a.arms) {
    spec.arms.clear();
    for (const auto& name : split_commas(*a.arms)) spec.arms.push_back(covest::arm_from_string(name));
  }
  if (a.budgets) {
    spec.budgets.clear();
    for (const auto& b : split_commas(*a.budgets)) spec.budgets.push_back(std::stod(b));
  }
  if (a.seed) spec.seed = *a.seed;
  if (a.batch) spec.batch_size = *a.batch;
  if (a.iterations) spec.iterations = *a.iterations;
  if (a.out) spec.output = *a.out;
  if (a.metadata) spec.metadata = *a.metadata;
  if (a.jobs) spec.jobs = *a.jobs;

  const covest::ExperimentResult result = covest::run_experiment(spec);
  covest::export_csv(result, spec.output);
  covest::export_metadata(spec, result, spec.metadata_path());
  std::cerr << "n = " << result.n << ", erank = " << result.erank << ", " << result.trials
            << " trials\n";
  for (const auto& c : result.curves) {
    std::cerr << "  " << covest::to_string(c.arm) << " m/n=" << c.budget_frac
              << " final mean rel err " << c.mean.back() << '\n';
  }
  std::cerr << "wrote " << spec.output << " and " << spec.metadata_path().string() << '\n';
  return 0;
}

// ---- bound / calibrate-gamma ----------------------------------------------

struct BoundArgs {
  std::string sigma;
  std::string p;
  std::size_t samples = 1;
  double eta = 20.0;
  double gamma = 1.0;
  double q = 2.0;
  double subgauss = 1.0;
  bool erank_bound = true;
};

int cmd_bound(const BoundArgs& a) {
  const Eigen::MatrixXd sigma = covest::csv::read_matrix(a.sigma);
  const covest::MaskDistribution p(covest::csv::vector_arg(a.p));
  if (a.erank_bound && a.q < 2.0) {
    throw std::invalid_argument("the erank bound on ||H||_q needs q >= 2 (use --no-erank-bound)");
  }
  covest::BoundReport r =
      covest::make_bound_report(sigma, p, a.subgauss, a.q, a.samples, a.eta, a.gamma);
  json j{{"h_matrix", to_json(r.h_matrix)},
         {"h_norm_q", r.h_norm_q},
         {"q", r.q},
         {"erank", r.erank},
         {"bound_value", r.bound_value},
         {"eta", r.eta},
         {"gamma", r.gamma},
         {"T", r.samples},
         {"confidence", 1.0 - 2.0 / r.eta}};
  if (a.erank_bound && r.erank_bound) j["erank_bound"] = *r.erank_bound;
  std::cout << j.dump(2) << '\n';
  return 0;
}

struct CalibrateArgs {
  std::string sigma;
  std::string p;
  std::size_t samples = 100;
  double eta = 10.0;
  double q = 2.0;
  double subgauss = 1.0;
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
};

int cmd_calibrate(const CalibrateArgs& a) {
  const Eigen::MatrixXd sigma = covest::csv::read_matrix(a.sigma);
  const covest::MaskDistribution p(covest::csv::vector_arg(a.p));
  const covest::GammaCalibration c =
      covest::calibrate_gamma(sigma, p, a.subgauss, a.q, a.samples, a.eta, a.trials, a.seed);
  json j{{"gamma", c.gamma},
         {"exceed_fraction", c.exceed_fraction},
         {"target", c.target},
         {"trials", c.trials},
         {"T", a.samples},
         {"eta", a.eta},
         {"q", a.q}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance estimation from Bernoulli-masked observations"};
  app.set_version_flag("--version", std::string(covest::kVersion));
  app.require_subcommand(1);
  int jobs = 0;
  app.add_option("--jobs", jobs, "Cap on worker threads (default: all cores)");

  DesignArgs design;
  auto* design_cmd = app.add_subcommand("design", "Sampling probabilities for a covariance diagonal");
  design_cmd->add_option("--diag", design.diag, "Diagonal of Sigma: CSV file or inline list")->required();
  design_cmd->add_option("--budget", design.budget, "Budget m = sum(p)")->required();
  design_cmd->add_option("--eps", design.eps, "Probability floor")->capture_default_str();
  design_cmd->add_option("--out", design.out, "Write JSON here instead of stdout");

  EstimateArgs estimate;
  auto* estimate_cmd = app.add_subcommand("estimate", "Unbiased covariance from masked samples");
  estimate_cmd->add_option("--samples", estimate.samples, "CSV of observed rows y (T x n)")->required();
  estimate_cmd->add_option("--p", estimate.p, "Observation probabilities: CSV file or inline list");
  estimate_cmd->add_option("--budget", estimate.budget, "Uniform design with this budget");
  estimate_cmd->add_option("--out", estimate.out, "Write the matrix CSV here instead of stdout");

  ActiveArgs active;
  auto* active_cmd = app.add_subcommand("active", "Run batch active estimation on a spiked model");
  active_cmd->add_option("--n", active.source.n, "Dimension")->capture_default_str();
  active_cmd->add_option("--spikes", active.source.spikes, "Number of spikes k")->capture_default_str();
  active_cmd->add_option("--spike", active.source.spike, "Spike eigenvalue")->capture_default_str();
  active_cmd->add_option("--theta", active.source.theta, "Noise level theta");
  active_cmd->add_option("--theta-times-n", active.source.theta_times_n, "Noise level as theta * n (default 1)");
  active_cmd->add_option("--model-seed", active.source.model_seed, "Seed for the random eigenbasis");
  active_cmd->add_option("--data", active.data, "CSV of x rows to use as the sample oracle");
  active_cmd->add_option("--budget", active.budget, "Budget m");
  active_cmd->add_option("--budget-frac", active.budget_frac, "Budget as a fraction of n (default 0.5)");
  active_cmd->add_option("--batch", active.batch, "Batch size B")->capture_default_str();
  active_cmd->add_option("--iterations", active.iterations, "Iterations N")->capture_default_str();
  active_cmd->add_option("--eps", active.eps, "Probability floor")->capture_default_str();
  active_cmd->add_option("--seed", active.seed, "Master seed")->envname("COVEST_SEED")->capture_default_str();
  active_cmd->add_option("--out", active.out, "Write the trace CSV here instead of stdout");

  ExperimentArgs experiment;
  auto* experiment_cmd = app.add_subcommand("experiment", "Multi-trial arm comparison");
  experiment_cmd->add_option("--config", experiment.config, "Experiment JSON")->required();
  experiment_cmd->add_option("--trials", experiment.trials, "Override trials");
  experiment_cmd->add_option("--arms", experiment.arms, "Override arms, e.g. uniform,designed");
  experiment_cmd->add_option("--budgets", experiment.budgets, "Override budget fractions, e.g. 0.25,0.5");
  experiment_cmd->add_option("--seed", experiment.seed, "Override the master seed (config, then COVEST_SEED)");
  experiment_cmd->add_option("--batch", experiment.batch, "Override batch size");
  experiment_cmd->add_option("--iterations", experiment.iterations, "Override iteration count");
  experiment_cmd->add_option("--out", experiment.out, "Override CSV output path");
  experiment_cmd->add_option("--metadata", experiment.metadata, "Override metadata JSON path");

  BoundArgs bound;
  auto* bound_cmd = app.add_subcommand("bound", "Error-bound diagnostics as JSON");
  bound_cmd->add_option("--sigma", bound.sigma, "Covariance matrix CSV")->required();
  bound_cmd->add_option("--p", bound.p, "Observation probabilities: CSV file or inline list")->required();
  bound_cmd->add_option("--T", bound.samples, "Sample count")->required();
  bound_cmd->add_option("--eta", bound.eta, "Confidence parameter (> 1)")->capture_default_str();
  bound_cmd->add_option("--gamma", bound.gamma, "Constant gamma")->capture_default_str();
  bound_cmd->add_option("--q", bound.q, "Entrywise norm order")->capture_default_str();
  bound_cmd->add_option("--subgauss", bound.subgauss, "Sub-Gaussian ratio sigma")->capture_default_str();
  bound_cmd->add_flag("--erank-bound,!--no-erank-bound", bound.erank_bound,
                      "Also report the effective-rank bound on ||H||_q (needs q >= 2)");

  CalibrateArgs calibrate;
  auto* calibrate_cmd = app.add_subcommand("calibrate-gamma", "Fit gamma by Monte Carlo on Gaussian data");
  calibrate_cmd->add_option("--sigma", calibrate.sigma, "Covariance matrix CSV")->required();
  calibrate_cmd->add_option("--p", calibrate.p, "Observation probabilities: CSV file or inline list")->required();
  calibrate_cmd->add_option("--T", calibrate.samples, "Samples per trial")->capture_default_str();
  calibrate_cmd->add_option("--eta", calibrate.eta, "Confidence parameter (> 2)")->capture_default_str();
  calibrate_cmd->add_option("--q", calibrate.q, "Entrywise norm order")->capture_default_str();
  calibrate_cmd->add_option("--subgauss", calibrate.subgauss, "Sub-Gaussian ratio sigma")->capture_default_str();
  calibrate_cmd->add_option("--trials", calibrate.trials, "Monte Carlo trials")->capture_default_str();
  calibrate_cmd->add_option("--seed", calibrate.seed, "Seed")->envname("COVEST_SEED")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  if (jobs > 0) {
    omp_set_num_threads(jobs);
    experiment.jobs = jobs;
  }

  try {
    if (*design_cmd) return cmd_design(design);
    if (*estimate_cmd) return cmd_estimate(estimate);
    if (*active_cmd) return cmd_active(active);
    if (*experiment_cmd) return cmd_experiment(experiment);
    if (*bound_cmd) return cmd_bound(bound);
    if (*calibrate_cmd) return cmd_calibrate(calibrate);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
