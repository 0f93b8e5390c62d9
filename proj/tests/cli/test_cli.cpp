#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "covest/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args, bool merge_stderr = false) {
  const std::string cmd = std::string(COVEST_CLI_PATH) + " " + args + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  Run r;
  char buf[4096];
  while (std::size_t got = std::fread(buf, 1, sizeof buf, pipe)) r.out.append(buf, got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "covest_cli_test";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST_CASE("design: uniform diagonal gives p = m/n") {
  const Run r = run("design --diag 3,3,3,3 --budget 2");
  REQUIRE(r.status == 0);
  const json j = json::parse(r.out);
  for (const auto& p : j.at("p")) CHECK(p.get<double>() == doctest::Approx(0.5));
}

TEST_CASE("design: diag [4, 1], m = 1") {
  const fs::path diag = scratch() / "diag.csv";
  write_file(diag, "4\n1\n");
  const Run r = run("design --diag " + diag.string() + " --budget 1 --eps 0");
  REQUIRE(r.status == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("p")[0].get<double>() == doctest::Approx(2.0 / 3).epsilon(1e-6));
  CHECK(j.at("p")[1].get<double>() == doctest::Approx(1.0 / 3).epsilon(1e-6));
  CHECK(j.at("rho").get<double>() == doctest::Approx(1.0 / 3).epsilon(1e-6));
  CHECK(j.contains("kkt_residual"));
}

TEST_CASE("design: m > n fails with a message") {
  const Run r = run("design --diag 1,2 --budget 3", true);
  CHECK(r.status != 0);
  CHECK(r.out.find("error") != std::string::npos);
}

TEST_CASE("bound: identity example") {
  const fs::path sigma = scratch() / "i2.csv";
  write_file(sigma, "1,0\n0,1\n");
  const Run r = run("bound --sigma " + sigma.string() + " --p 1,1 --T 2 --eta " +
                    std::to_string(std::exp(2.0)) + " --gamma 1 --q 2");
  REQUIRE(r.status == 0);
  const json j = json::parse(r.out);
  const double h = 2.0;  // ||ones(2,2)||_2
  const double a = (2 * std::log(2.0) + 2.0) / 2.0;
  CHECK(j.at("h_norm_q").get<double>() == doctest::Approx(h));
  CHECK(j.at("bound_value").get<double>() == doctest::Approx(h * std::max(std::sqrt(a), a)).epsilon(1e-6));
  CHECK(j.at("erank").get<double>() == doctest::Approx(2.0));
}

TEST_CASE("bound: erank of I5 is 5") {
  const fs::path sigma = scratch() / "i5.csv";
  write_file(sigma, "1,0,0,0,0\n0,1,0,0,0\n0,0,1,0,0\n0,0,0,1,0\n0,0,0,0,1\n");
  const Run r = run("bound --sigma " + sigma.string() + " --p 0.5,0.5,0.5,0.5,0.5 --T 100");
  REQUIRE(r.status == 0);
  CHECK(json::parse(r.out).at("erank").get<double>() == doctest::Approx(5.0));
}

TEST_CASE("bound: q = 1.5 with the erank bound is rejected") {
  const fs::path sigma = scratch() / "i2.csv";
  write_file(sigma, "1,0\n0,1\n");
  CHECK(run("bound --sigma " + sigma.string() + " --p 1,1 --T 2 --q 1.5").status != 0);
  CHECK(run("bound --sigma " + sigma.string() + " --p 1,1 --T 2 --q 1.5 --no-erank-bound").status == 0);
}

TEST_CASE("estimate: p = 1 returns the plain second moment") {
  const fs::path y = scratch() / "y.csv";
  write_file(y, "1,2\n3,4\n");
  const Run r = run("estimate --samples " + y.string() + " --p 1,1");
  REQUIRE(r.status == 0);
  CHECK(r.out.find("5,7") != std::string::npos);
  CHECK(r.out.find("7,10") != std::string::npos);
}

TEST_CASE("active: writes one row per iteration") {
  const Run r = run("active --n 6 --batch 20 --iterations 4 --seed 3");
  REQUIRE(r.status == 0);
  int lines = 0;
  for (char c : r.out) lines += c == '\n';
  CHECK(lines == 5);
  CHECK(r.out.rfind("iteration,samples,rel_err,observed", 0) == 0);
}

TEST_CASE("experiment: single arm, single trial") {
  const fs::path dir = scratch();
  const fs::path csv = dir / "one.csv";
  const Run r = run("experiment --config " COVEST_CONFIG_DIR "/spiked_n16.json --trials 1 --arms uniform --out " +
                    csv.string());
  REQUIRE(r.status == 0);
  const auto rows = covest::read_result_csv(csv);
  REQUIRE(!rows.empty());
  for (const auto& row : rows) {
    CHECK(row.arm == "uniform");
    CHECK(row.trials == 1);
  }
  CHECK(fs::exists(dir / "one.json"));
}

TEST_CASE("experiment: bundled config finishes within a minute") {
  const fs::path csv = scratch() / "spiked.csv";
  const auto start = std::chrono::steady_clock::now();
  const Run r = run("experiment --config " COVEST_CONFIG_DIR "/spiked_n16.json --out " + csv.string());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(r.status == 0);
  CHECK(seconds < 60.0);
  CHECK(covest::read_result_csv(csv).size() == (3 * 3 + 1) * 40);
}

TEST_CASE("experiment: missing dataset is a clear error") {
  const fs::path cfg = scratch() / "mnist.json";
  write_file(cfg, R"({"source": {"type": "mnist", "images": "/nonexistent/imgs", "labels": "/nonexistent/labs"}})");
  const Run r = run("experiment --config " + cfg.string(), true);
  CHECK(r.status != 0);
  CHECK(r.out.find("dataset file not found") != std::string::npos);
}

TEST_CASE("experiment: unknown config keys are rejected") {
  const fs::path cfg = scratch() / "typo.json";
  write_file(cfg, R"({"trails": 3})");
  const Run r = run("experiment --config " + cfg.string(), true);
  CHECK(r.status != 0);
  CHECK(r.out.find("trails") != std::string::npos);
}
