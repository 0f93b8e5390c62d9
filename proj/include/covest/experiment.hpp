#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "covest/bounds.hpp"
#include "covest/data.hpp"
#include "covest/design.hpp"

namespace covest {

enum class Arm { active, designed, full, uniform };

std::string to_string(Arm arm);
/// Throws std::invalid_argument for an unknown name.
Arm arm_from_string(const std::string& name);

struct SourceSpec {
  enum class Kind { synthetic, mnist };
  Kind kind = Kind::synthetic;
  // synthetic spiked model
  Eigen::Index n = 16;
  Eigen::Index spikes = 2;
  double spike = 50.0;
  std::optional<std::uint64_t> model_seed;  // defaults to a child of the master seed
  // IDX dataset
  std::string images;
  std::string labels;
  int digit = 8;
  // noise level; exactly one of theta / theta_times_n is set in the config
  std::optional<double> theta;
  std::optional<double> theta_times_n;

  /// theta, resolving theta_times_n against the dimension.
  double resolved_theta(Eigen::Index dim) const;
};

struct ExperimentSpec {
  SourceSpec source;
  std::vector<Arm> arms{Arm::uniform, Arm::designed, Arm::active};
  std::vector<double> budgets{0.25, 0.5, 0.75};  // fractions of n
  std::size_t batch_size = 50;
  std::size_t iterations = 40;
  std::size_t trials = 50;
  std::uint64_t seed = 1;
  double q = 2.0;
  double floor = kDefaultFloor;
  double subgauss = 1.0;
  double eta = 20.0;
  double gamma = 1.0;
  std::string output = "results.csv";
  std::string metadata;  // empty: output with a .json extension
  int jobs = 0;          // 0: all available threads

  /// Throws std::invalid_argument on unknown keys or invalid values.
  static ExperimentSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;
  std::filesystem::path metadata_path() const;
};

struct Curve {
  Arm arm = Arm::uniform;
  double budget_frac = 0.0;
  std::vector<std::size_t> checkpoints;          // total samples T
  std::vector<double> mean;                      // across trials
  std::vector<double> stddev;
  std::vector<std::vector<double>> trial_errors; // [trial][checkpoint]
  Eigen::VectorXd final_design;                  // mean over trials
  std::optional<BoundReport> bound;              // at the final T

  std::vector<double> final_errors() const;
};

struct ExperimentResult {
  std::vector<Curve> curves;  // sorted by (arm name, budget)
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  Eigen::Index n = 0;
  double erank = 0.0;
  std::uint64_t model_seed = 0;

  const Curve& curve(Arm arm, double budget_frac) const;
};

/// Builds the described source, loading the dataset if needed.
/// Throws std::runtime_error when a dataset file is missing.
std::unique_ptr<DataSource> make_source(const SourceSpec& spec, std::uint64_t master_seed,
                                        std::uint64_t* model_seed = nullptr);

/// Runs every (arm, budget) over `trials` paired trials: within a trial all
/// arms see the same x stream and the same mask uniforms.
ExperimentResult run_experiment(const ExperimentSpec& spec);
ExperimentResult run_experiment(const ExperimentSpec& spec, const DataSource& source);

/// Long-format CSV, header arm,budget_frac,checkpoint_T,mean_rel_err,std_rel_err,trials,seed.
void write_csv(std::ostream& out, const ExperimentResult& result);
void export_csv(const ExperimentResult& result, const std::filesystem::path& path);

struct CsvRow {
  std::string arm;
  double budget_frac = 0.0;
  std::size_t checkpoint = 0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
};
std::vector<CsvRow> read_result_csv(const std::filesystem::path& path);

/// Spec echo, library version, per-trial seeds, final designs and bounds.
nlohmann::json experiment_metadata(const ExperimentSpec& spec, const ExperimentResult& result);
void export_metadata(const ExperimentSpec& spec, const ExperimentResult& result,
                     const std::filesystem::path& path);

}  // namespace covest
