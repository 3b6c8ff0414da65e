#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "awsde/error.hpp"
#include "awsde/experiments.hpp"

using namespace awsde;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("awsde_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::numerical;
}

}  // namespace

TEST(Experiments, FormatNumber) {
  EXPECT_EQ(format_number(0.0), "0");
  EXPECT_EQ(format_number(-3.0), "-3");
  EXPECT_EQ(format_number(2.5), "2.5");
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 512), "0.001953125");
  EXPECT_EQ(format_number(1e-20), "1e-20");
  EXPECT_EQ(format_number(INFINITY), "inf");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Experiments, ConfigJson) {
  const auto c = ExperimentConfig::from_json(
      nlohmann::json::parse(R"({"experiment": "rates", "seed": 9, "paths": 32,
                                "model": {"name": "perturbed_sign", "params": {"k": 3}}, "p": 4})"));
  EXPECT_EQ(c.experiment, "rates");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(*c.paths, 32);
  EXPECT_EQ(*c.model, "perturbed_sign");
  EXPECT_EQ(c.model_params.at("k"), 3.0);
  EXPECT_EQ(*c.p, 4.0);
  EXPECT_EQ(c.preset, "desk");
  const auto back = ExperimentConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_EQ(*ExperimentConfig::from_json({{"model", "cubic"}}).model, "cubic");

  EXPECT_EQ(kind_of([] { ExperimentConfig::from_json({{"experiment", "rates"}, {"stpes", 4}}); }),
            ErrorKind::usage);
  EXPECT_EQ(kind_of([] { ExperimentConfig::from_json({{"seed", "abc"}}); }), ErrorKind::usage);
  EXPECT_EQ(kind_of([] { ExperimentConfig::from_json(nlohmann::json::array()); }), ErrorKind::usage);
}

TEST(Experiments, InvalidRunsAreUsageErrors) {
  ExperimentConfig c;
  c.out = scratch("invalid").string();
  c.experiment = "fig_3";
  EXPECT_EQ(kind_of([&] { run_experiment(c); }), ErrorKind::usage);
  c.experiment = "fig_disc";
  c.preset = "huge";
  EXPECT_EQ(kind_of([&] { run_experiment(c); }), ErrorKind::usage);
  c.preset = "desk";
  c.paths = 0;
  EXPECT_EQ(kind_of([&] { run_experiment(c); }), ErrorKind::usage);
}

TEST(Experiments, FigDiscArtifactsAreReproducible) {
  ExperimentConfig c;
  c.experiment = "fig_disc";
  c.steps = 64;
  c.paths = 300;
  c.seed = 5;
  c.threads = 1;
  c.out = scratch("disc_a").string();
  const auto manifest = run_experiment(c);
  const std::string csv = slurp(fs::path(c.out) / "aw_estimates.csv");
  const auto rows = lines(csv);
  ASSERT_EQ(rows.size(), 12u);
  EXPECT_EQ(rows[0], "k_or_delta,estimate,stderr,paths,h,seed");
  EXPECT_EQ(rows[1], "0,0,0,300,0.015625,5");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  EXPECT_EQ(manifest["experiment"], "fig_disc");
  EXPECT_EQ(manifest["artifacts"][0]["rows"], 11);
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "manifest.json"));
  EXPECT_EQ(nlohmann::json::parse(slurp(fs::path(c.out) / "manifest.json"))["config"], c.to_json());

  c.threads = 3;
  c.out = scratch("disc_b").string();
  run_experiment(c);
  EXPECT_EQ(slurp(fs::path(c.out) / "aw_estimates.csv"), csv);
}

TEST(Experiments, CounterexampleReport) {
  ExperimentConfig c;
  c.experiment = "counterexamples";
  c.out = scratch("counter").string();
  const auto r = run_experiment(c)["results"];
  EXPECT_EQ(r["second_order_dominance"]["kr_cost"], 3.0);
  EXPECT_EQ(r["second_order_dominance"]["alt_cost"], 2.0);
  EXPECT_LE(r["second_order_dominance"]["optimal"].get<double>(), 2.0);
  EXPECT_EQ(r["second_order_dominance"]["first_order"]["increasing"], false);
  EXPECT_EQ(r["second_order_dominance"]["second_order"]["increasing"], true);
  for (const auto& row : r["product_coupling"]) {
    EXPECT_NEAR(row["aw_pp"].get<double>(), row["expected"].get<double>(), 1e-12);
  }
  EXPECT_EQ(r["holder_witness"]["verified"], true);
  EXPECT_TRUE(fs::exists(fs::path(c.out) / "counterexamples.json"));
}

TEST(Experiments, RatesAndMomentsCsv) {
  ExperimentConfig c;
  c.experiment = "rates";
  c.steps = 4096;
  c.paths = 16;
  c.out = scratch("rates").string();
  const auto r = run_experiment(c)["results"];
  const auto rate = lines(slurp(fs::path(c.out) / "rate_curve.csv"));
  ASSERT_EQ(rate.size(), 7u);
  EXPECT_EQ(rate[0], "h,err_sup,err_int,stderr");
  EXPECT_EQ(rate[1].substr(0, 9), "0.015625,");
  const auto mom = lines(slurp(fs::path(c.out) / "moments.csv"));
  ASSERT_EQ(mom.size(), 7u);
  EXPECT_EQ(mom[0], "h,p,sup_moment");
  EXPECT_TRUE(r["fit_sup"].contains("slope"));
  c.steps = 3000;
  EXPECT_THROW(run_experiment(c), Error);
}

TEST(Experiments, StoppingAndTransformDump) {
  ExperimentConfig c;
  c.experiment = "stopping";
  c.paths = 20;
  c.out = scratch("stopping").string();
  auto r = run_experiment(c)["results"];
  EXPECT_EQ(r["instances"], 20);
  EXPECT_EQ(r["violations"], 0);
  EXPECT_EQ(lines(slurp(fs::path(c.out) / "stopping.csv")).size(), 21u);

  c.experiment = "transform_dump";
  c.steps = 101;
  c.out = scratch("transform").string();
  r = run_experiment(c)["results"];
  EXPECT_NEAR(r["c0"].get<double>(), 1.0 / 24.0, 1e-12);
  const auto dump = lines(slurp(fs::path(c.out) / "transform.csv"));
  ASSERT_EQ(dump.size(), 102u);
  EXPECT_EQ(dump[0], "x,G,G_prime,G_second,G_inverse");
}
