#include "covest/experiment.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include <omp.h>

#include "covest/active.hpp"
#include "covest/csv.hpp"
#include "covest/design.hpp"
#include "covest/idx.hpp"
#include "covest/rng.hpp"
#include "covest/stats.hpp"
#include "covest/version.hpp"

namespace covest {

namespace {
constexpr int kCsvDigits = 12;
constexpr const char* kCsvHeader = "arm,budget_frac,checkpoint_T,mean_rel_err,std_rel_err,trials,seed";
}  // namespace

std::string to_string(Arm arm) {
  switch (arm) {
    case Arm::active: return "active";
    case Arm::designed: return "designed";
    case Arm::full: return "full";
    case Arm::uniform: return "uniform";
  }
  return "?";
}

Arm arm_from_string(const std::string& name) {
  for (Arm a : {Arm::active, Arm::designed, Arm::full, Arm::uniform}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown arm '" + name + "' (expected uniform, designed, active or full)");
}

double SourceSpec::resolved_theta(Eigen::Index dim) const {
  if (theta) return *theta;
  if (theta_times_n) return *theta_times_n / static_cast<double>(dim);
  return 0.0;
}

// ---- spec <-> JSON ---------------------------------------------------------

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SourceSpec source_from_json(const json& j) {
  reject_unknown(j, {"type", "n", "spikes", "spike", "seed", "images", "labels", "digit", "theta",
                     "theta_times_n"},
                 "source");
  SourceSpec s;
  const std::string type = j.value("type", std::string("synthetic"));
  if (type == "synthetic") {
    s.kind = SourceSpec::Kind::synthetic;
  } else if (type == "mnist" || type == "idx") {
    s.kind = SourceSpec::Kind::mnist;
  } else {
    throw std::invalid_argument("unknown source type '" + type + "'");
  }
  read_if(j, "n", s.n);
  read_if(j, "spikes", s.spikes);
  read_if(j, "spike", s.spike);
  if (j.contains("seed")) s.model_seed = j.at("seed").get<std::uint64_t>();
  read_if(j, "images", s.images);
  read_if(j, "labels", s.labels);
  read_if(j, "digit", s.digit);
  if (j.contains("theta")) s.theta = j.at("theta").get<double>();
  if (j.contains("theta_times_n")) s.theta_times_n = j.at("theta_times_n").get<double>();
  if (s.theta && s.theta_times_n) {
    throw std::invalid_argument("source sets both theta and theta_times_n");
  }
  return s;
}

json source_to_json(const SourceSpec& s) {
  json j;
  if (s.kind == SourceSpec::Kind::synthetic) {
    j["type"] = "synthetic";
    j["n"] = s.n;
    j["spikes"] = s.spikes;
    j["spike"] = s.spike;
    if (s.model_seed) j["seed"] = *s.model_seed;
  } else {
    j["type"] = "mnist";
    j["images"] = s.images;
    j["labels"] = s.labels;
    j["digit"] = s.digit;
  }
  if (s.theta) j["theta"] = *s.theta;
  if (s.theta_times_n) j["theta_times_n"] = *s.theta_times_n;
  return j;
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json(const json& j) {
  reject_unknown(j, {"source", "arms", "budgets", "batch_size", "iterations", "trials", "seed", "q",
                     "eps", "sigma", "eta", "gamma", "output", "metadata", "jobs"},
                 "experiment config");
  ExperimentSpec s;
  try {
    if (j.contains("source")) s.source = source_from_json(j.at("source"));
    if (j.contains("arms")) {
      s.arms.clear();
      for (const auto& a : j.at("arms")) s.arms.push_back(arm_from_string(a.get<std::string>()));
    }
    read_if(j, "budgets", s.budgets);
    read_if(j, "batch_size", s.batch_size);
    read_if(j, "iterations", s.iterations);
    read_if(j, "trials", s.trials);
    read_if(j, "seed", s.seed);
    read_if(j, "q", s.q);
    read_if(j, "eps", s.floor);
    read_if(j, "sigma", s.subgauss);
    read_if(j, "eta", s.eta);
    read_if(j, "gamma", s.gamma);
    read_if(j, "output", s.output);
    read_if(j, "metadata", s.metadata);
    read_if(j, "jobs", s.jobs);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad experiment config: ") + e.what());
  }
  return s;
}

json ExperimentSpec::to_json() const {
  json j;
  j["source"] = source_to_json(source);
  j["arms"] = json::array();
  for (Arm a : arms) j["arms"].push_back(to_string(a));
  j["budgets"] = budgets;
  j["batch_size"] = batch_size;
  j["iterations"] = iterations;
  j["trials"] = trials;
  j["seed"] = seed;
  j["q"] = q;
  j["eps"] = floor;
  j["sigma"] = subgauss;
  j["eta"] = eta;
  j["gamma"] = gamma;
  j["output"] = output;
  j["metadata"] = metadata_path().string();
  j["jobs"] = jobs;
  return j;
}

void ExperimentSpec::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (arms.empty()) throw std::invalid_argument("no arms requested");
  if (!(floor >= 0.0 && floor <= 1.0)) throw std::invalid_argument("eps must lie in [0, 1]");
  if (!(q >= 1.0)) throw std::invalid_argument("q must be >= 1");
  if (!(eta > 1.0)) throw std::invalid_argument("eta must be > 1");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0");
  if (!(subgauss > 0.0)) throw std::invalid_argument("sigma must be > 0");
  const bool needs_budget = std::any_of(arms.begin(), arms.end(), [](Arm a) { return a != Arm::full; });
  if (needs_budget && budgets.empty()) throw std::invalid_argument("no budgets given");
  for (double b : budgets) {
    if (!(b > 0.0 && b <= 1.0 && b >= floor)) {
      throw std::invalid_argument("budget fraction " + std::to_string(b) +
                                  " is infeasible (need eps <= m/n <= 1 and m > 0)");
    }
  }
  if (source.kind == SourceSpec::Kind::synthetic) {
    if (source.n < 1 || source.spikes < 1 || source.spikes > source.n) {
      throw std::invalid_argument("synthetic source needs 1 <= spikes <= n");
    }
  } else if (source.images.empty() || source.labels.empty()) {
    throw std::invalid_argument("dataset source needs both 'images' and 'labels' paths");
  }
}

std::filesystem::path ExperimentSpec::metadata_path() const {
  if (!metadata.empty()) return metadata;
  std::filesystem::path p(output);
  p.replace_extension(".json");
  return p;
}

std::vector<double> Curve::final_errors() const {
  std::vector<double> out;
  out.reserve(trial_errors.size());
  for (const auto& row : trial_errors) out.push_back(row.back());
  return out;
}

const Curve& ExperimentResult::curve(Arm arm, double budget_frac) const {
  for (const auto& c : curves) {
    if (c.arm == arm && std::abs(c.budget_frac - budget_frac) < 1e-12) return c;
  }
  throw std::out_of_range("no curve for arm " + to_string(arm) + " at budget " +
                          std::to_string(budget_frac));
}

// ---- running ----------------------------------------------------------------

std::unique_ptr<DataSource> make_source(const SourceSpec& spec, std::uint64_t master_seed,
                                        std::uint64_t* model_seed) {
  if (spec.kind == SourceSpec::Kind::synthetic) {
    const std::uint64_t seed =
        spec.model_seed.value_or(derive_seed(master_seed, {stream_id::kModel}));
    if (model_seed) *model_seed = seed;
    return std::make_unique<SyntheticModel>(
        make_spiked_model(spec.n, spec.spikes, spec.spike, spec.resolved_theta(spec.n), seed));
  }
  for (const auto& path : {spec.images, spec.labels}) {
    if (!std::filesystem::exists(path)) throw std::runtime_error("dataset file not found: " + path);
  }
  if (model_seed) *model_seed = 0;
  const IdxTensor images = load_idx(spec.images);
  const IdxTensor labels = load_idx(spec.labels);
  std::size_t n = 1;
  for (std::size_t d = 1; d < images.shape.size(); ++d) n *= images.shape[d];
  return std::make_unique<EmpiricalSource>(build_empirical_source(
      images, labels, spec.digit, spec.resolved_theta(static_cast<Eigen::Index>(n))));
}

namespace {

struct Job {
  Arm arm;
  double budget_frac;
  std::optional<MaskDistribution> fixed;  // for the non-adaptive arms
};

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  std::uint64_t model_seed = 0;
  const auto source = make_source(spec.source, spec.seed, &model_seed);
  ExperimentResult result = run_experiment(spec, *source);
  result.model_seed = model_seed;
  return result;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const DataSource& source) {
  spec.validate();
  const Eigen::Index n = source.dim();
  const Eigen::MatrixXd& truth = source.covariance();
  const auto nd = static_cast<double>(n);

  std::vector<Job> jobs;
  std::vector<Arm> arms = spec.arms;
  std::sort(arms.begin(), arms.end(), [](Arm a, Arm b) { return to_string(a) < to_string(b); });
  arms.erase(std::unique(arms.begin(), arms.end()), arms.end());
  std::vector<double> budgets = spec.budgets;
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
  for (Arm arm : arms) {
    if (arm == Arm::full) {
      jobs.push_back({arm, 1.0, MaskDistribution(Eigen::VectorXd::Ones(n))});
      continue;
    }
    for (double b : budgets) {
      const double m = b * nd;
      switch (arm) {
        case Arm::uniform: jobs.push_back({arm, b, MaskDistribution::uniform(n, m)}); break;
        case Arm::designed:
          jobs.push_back({arm, b, design_probabilities(truth.diagonal(), m, spec.floor).p});
          break;
        default: jobs.push_back({arm, b, std::nullopt}); break;
      }
    }
  }

  const std::size_t total = spec.batch_size * spec.iterations;
  const std::size_t checkpoints = spec.iterations;
  // errors[job][trial][checkpoint], designs[job][trial]
  std::vector<std::vector<std::vector<double>>> errors(
      jobs.size(), std::vector<std::vector<double>>(spec.trials));
  std::vector<std::vector<Eigen::VectorXd>> designs(jobs.size(),
                                                    std::vector<Eigen::VectorXd>(spec.trials));

  std::exception_ptr failure;
  std::mutex failure_mutex;
  const int threads = spec.jobs > 0 ? spec.jobs : omp_get_max_threads();
  const auto trial_count = static_cast<std::ptrdiff_t>(spec.trials);
  const TraceOptions options{false};
  const std::optional<Eigen::MatrixXd> scored(truth);

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t r = 0; r < trial_count; ++r) {
    try {
      const auto trial = static_cast<std::uint64_t>(r);
      const std::uint64_t data_seed = derive_seed(spec.seed, {trial, stream_id::kData});
      const std::uint64_t mask_seed = derive_seed(spec.seed, {trial, stream_id::kMask});
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        auto stream = source.stream(data_seed);
        ActiveTrace trace;
        if (jobs[j].fixed) {
          trace = run_fixed(*stream, *jobs[j].fixed, total, spec.batch_size, mask_seed, scored, options);
        } else {
          const ActiveConfig cfg{jobs[j].budget_frac * nd, spec.batch_size, spec.iterations,
                                 spec.floor, mask_seed};
          trace = run_active(*stream, cfg, scored, options);
        }
        errors[j][static_cast<std::size_t>(r)] = trace.relative_errors();
        designs[j][static_cast<std::size_t>(r)] = trace.final_design;
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult result;
  result.trials = spec.trials;
  result.seed = spec.seed;
  result.n = n;
  result.erank = effective_rank(truth);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    Curve c;
    c.arm = jobs[j].arm;
    c.budget_frac = jobs[j].budget_frac;
    c.trial_errors = std::move(errors[j]);
    for (std::size_t k = 0; k < checkpoints; ++k) {
      c.checkpoints.push_back((k + 1) * spec.batch_size);
      std::vector<double> column;
      column.reserve(spec.trials);
      for (const auto& row : c.trial_errors) column.push_back(row[k]);
      c.mean.push_back(stats::mean(column));
      c.stddev.push_back(stats::stddev(column));
    }
    c.final_design = Eigen::VectorXd::Zero(n);
    for (const auto& d : designs[j]) c.final_design += d;
    c.final_design /= static_cast<double>(spec.trials);
    c.bound = make_bound_report(truth, MaskDistribution(c.final_design), spec.subgauss, spec.q,
                                total, spec.eta, spec.gamma);
    result.curves.push_back(std::move(c));
  }
  return result;
}

// ---- output -----------------------------------------------------------------

void write_csv(std::ostream& out, const ExperimentResult& result) {
  out << kCsvHeader << '\n';
  std::vector<const Curve*> order;
  for (const auto& c : result.curves) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const Curve* a, const Curve* b) {
    const std::string na = to_string(a->arm), nb = to_string(b->arm);
    return na != nb ? na < nb : a->budget_frac < b->budget_frac;
  });
  for (const Curve* c : order) {
    for (std::size_t k = 0; k < c->checkpoints.size(); ++k) {
      out << to_string(c->arm) << ',' << csv::format_number(c->budget_frac, kCsvDigits) << ','
          << c->checkpoints[k] << ',' << csv::format_number(c->mean[k], kCsvDigits) << ','
          << csv::format_number(c->stddev[k], kCsvDigits) << ',' << result.trials << ','
          << result.seed << '\n';
    }
  }
}

void export_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, result);
  out.flush();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<CsvRow> read_result_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw std::invalid_argument(path.string() + ": unexpected CSV header");
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 7) throw std::invalid_argument(path.string() + ": malformed row '" + line + "'");
    rows.push_back(CsvRow{cells[0], std::stod(cells[1]), std::stoul(cells[2]), std::stod(cells[3]),
                          std::stod(cells[4]), std::stoul(cells[5]), std::stoull(cells[6])});
  }
  return rows;
}

nlohmann::json experiment_metadata(const ExperimentSpec& spec, const ExperimentResult& result) {
  using nlohmann::json;
  json j;
  j["version"] = kVersion;
  j["spec"] = spec.to_json();
  j["n"] = result.n;
  j["erank"] = result.erank;
  j["theta"] = spec.source.resolved_theta(result.n);
  j["model_seed"] = result.model_seed;
  j["pairing"] = "all arms in a trial share the x stream and the mask uniforms";
  j["checkpoint_unit"] = "checkpoint_T is the total sample count T; divide by n for T/n";
  json seeds = json::array();
  for (std::size_t r = 0; r < result.trials; ++r) {
    const auto trial = static_cast<std::uint64_t>(r);
    seeds.push_back({{"trial", r},
                     {"data", derive_seed(spec.seed, {trial, stream_id::kData})},
                     {"mask", derive_seed(spec.seed, {trial, stream_id::kMask})}});
  }
  j["trial_seeds"] = std::move(seeds);
  json curves = json::array();
  for (const auto& c : result.curves) {
    json cj{{"arm", to_string(c.arm)}, {"budget_frac", c.budget_frac}};
    cj["final_design"] = std::vector<double>(c.final_design.data(),
                                             c.final_design.data() + c.final_design.size());
    if (c.bound) {
      json b{{"h_norm_q", c.bound->h_norm_q}, {"q", c.bound->q},
             {"erank", c.bound->erank},       {"bound_value", c.bound->bound_value},
             {"eta", c.bound->eta},           {"gamma", c.bound->gamma},
             {"T", c.bound->samples}};
      if (c.bound->erank_bound) b["erank_bound"] = *c.bound->erank_bound;
      cj["bound"] = std::move(b);
    }
    curves.push_back(std::move(cj));
  }
  j["curves"] = std::move(curves);
  return j;
}

void export_metadata(const ExperimentSpec& spec, const ExperimentResult& result,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << experiment_metadata(spec, result).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace covest
