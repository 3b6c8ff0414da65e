#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "awsde/error.hpp"
#include "awsde/experiments.hpp"

namespace {

int report_error(awsde::ErrorKind kind, const std::string& message) {
  const nlohmann::json doc{{"error", {{"kind", awsde::to_string(kind)}, {"message", message}}}};
  std::cerr << doc.dump() << '\n';
  return kind == awsde::ErrorKind::usage ? 2 : 1;
}

awsde::ModelParameters parse_params(const std::vector<std::string>& items) {
  awsde::ModelParameters params;
  for (const std::string& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      awsde::fail(awsde::ErrorKind::usage, "model parameter '" + item + "' must be key=value");
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
      params[item.substr(0, eq)] = v;
    } catch (const std::logic_error&) {
      awsde::fail(awsde::ErrorKind::usage, "model parameter '" + item + "' is not numeric");
    }
  }
  return params;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) awsde::fail(awsde::ErrorKind::usage, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    awsde::fail(awsde::ErrorKind::usage, path + ": " + e.what());
  }
}

void emit(const std::string& out, const std::string& content) {
  if (out.empty() || out == "-") {
    std::cout << content;
    return;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file) awsde::fail(awsde::ErrorKind::usage, "cannot write " + out);
  file << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adapted Wasserstein distances between SDE laws"};
  app.set_version_flag("--version", std::string(AWSDE_VERSION));
  app.require_subcommand(0, 1);

  bool dump_transform = false;
  std::string dump_model = "sign_drift";
  std::vector<std::string> dump_params;
  std::int64_t dump_points = 1001;
  app.add_flag("--dump-transform", dump_transform,
               "Print the transform of --model as CSV (x, G, G', G'', G^-1)");
  app.add_option("--model", dump_model, "Model for --dump-transform");
  app.add_option("--param", dump_params, "Model parameter key=value (repeatable)");
  app.add_option("--points", dump_points, "Grid points for --dump-transform");

  // run
  awsde::ExperimentConfig cfg;
  std::string config_path, preset, scheme, model, out;
  std::vector<std::string> params;
  std::uint64_t seed = 0;
  std::int64_t steps = 0, paths = 0;
  double p = 0.0;
  int threads = 0;
  auto* run = app.add_subcommand("run", "Run an experiment and write CSV/JSON artifacts");
  std::string experiment;
  run->add_option("experiment", experiment, "fig_disc, fig_cir, rates, counterexamples, stopping, transform_dump");
  run->add_option("--config", config_path, "JSON config with the same fields as the flags");
  run->add_option("--preset", preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  auto* seed_opt = run->add_option("--seed", seed, "64-bit seed");
  run->add_option("--out", out, "Output directory");
  auto* steps_opt = run->add_option("--steps", steps, "Time steps (reference steps for rates)");
  auto* paths_opt = run->add_option("--paths", paths, "Monte Carlo paths (instances for stopping)");
  run->add_option("--model", model, "Builtin model name");
  run->add_option("--param", params, "Model parameter key=value (repeatable)");
  auto* p_opt = run->add_option("--p", p, "Exponent p");
  run->add_option("--scheme", scheme, "em, iem, tiem, tiem-mono, sym-em");
  auto* threads_opt = run->add_option("--threads", threads, "Worker threads (0: OpenMP default)");

  // simulate
  std::string sim_model = "cubic", sim_scheme = "tiem-mono", sim_out;
  std::vector<std::string> sim_params;
  std::int64_t sim_steps = 256, sim_paths = 4;
  std::uint64_t sim_seed = 1;
  double sim_horizon = 1.0;
  auto* sim = app.add_subcommand("simulate", "Dump paths as CSV (path_index,k,t,value)");
  sim->add_option("--model", sim_model, "Builtin model name");
  sim->add_option("--param", sim_params, "Model parameter key=value (repeatable)");
  sim->add_option("--scheme", sim_scheme, "em, iem, tiem, tiem-mono, sym-em");
  sim->add_option("--steps", sim_steps, "Time steps");
  sim->add_option("--paths", sim_paths, "Number of paths");
  sim->add_option("--seed", sim_seed, "64-bit seed");
  sim->add_option("--horizon", sim_horizon, "Terminal time T");
  sim->add_option("--out", sim_out, "Output file (default stdout)");

  // solve
  std::string mu_path, nu_path, solve_out;
  double solve_p = 2.0;
  auto* solve = app.add_subcommand("solve", "Exact bicausal transport between two trees (JSON)");
  solve->add_option("--mu", mu_path, "Tree JSON for mu")->required();
  solve->add_option("--nu", nu_path, "Tree JSON for nu")->required();
  solve->add_option("--p", solve_p, "Cost exponent");
  solve->add_option("--out", solve_out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(awsde::ErrorKind::usage, e.what());
  }

  try {
    if (*run) {
      if (!config_path.empty()) cfg = awsde::ExperimentConfig::from_json(read_json(config_path));
      if (!experiment.empty()) cfg.experiment = experiment;
      if (cfg.experiment.empty()) awsde::fail(awsde::ErrorKind::usage, "no experiment given");
      if (!preset.empty()) cfg.preset = preset;
      if (seed_opt->count()) cfg.seed = seed;
      if (!out.empty()) cfg.out = out;
      if (steps_opt->count()) cfg.steps = steps;
      if (paths_opt->count()) cfg.paths = paths;
      if (!model.empty()) cfg.model = model;
      if (!params.empty()) cfg.model_params = parse_params(params);
      if (p_opt->count()) cfg.p = p;
      if (!scheme.empty()) cfg.scheme = scheme;
      if (threads_opt->count()) cfg.threads = threads;
      const nlohmann::json manifest = awsde::run_experiment(cfg);
      std::cout << manifest["results"].dump(2) << '\n';
      return 0;
    }
    if (*sim) {
      const auto spec = awsde::builtin_model(sim_model, parse_params(sim_params));
      const auto config = awsde::make_stepper(spec, awsde::parse_scheme(sim_scheme));
      const awsde::TimeGrid grid(sim_horizon, sim_steps);
      std::string csv = "path_index,k,t,value\n";
      for (std::int64_t i = 0; i < sim_paths; ++i) {
        const auto path = awsde::simulate_path(config, awsde::sample_increments(grid, sim_seed, i));
        for (std::size_t k = 0; k < path.values.size(); ++k) {
          csv += std::to_string(i) + ',' + std::to_string(k) + ',' +
                 awsde::format_number(grid.time(static_cast<std::int64_t>(k))) + ',' +
                 awsde::format_number(path.values[k]) + '\n';
        }
      }
      emit(sim_out, csv);
      return 0;
    }
    if (*solve) {
      const auto mu = awsde::FiniteAdaptedProcess::from_json(read_json(mu_path));
      const auto nu = awsde::FiniteAdaptedProcess::from_json(read_json(nu_path));
      const auto cost = awsde::power_cost(solve_p);
      const auto sol = awsde::exact_bicausal_value(mu, nu, cost);
      const nlohmann::json doc{
          {"p", solve_p},
          {"value", sol.value},
          {"aw", std::pow(std::max(sol.value, 0.0), 1.0 / solve_p)},
          {"kr_cost", awsde::plan_cost(awsde::knothe_rosenblatt(mu, nu), mu, nu, cost)},
          {"plan", sol.plan.to_json(mu, nu)}};
      emit(solve_out, doc.dump(2) + "\n");
      return 0;
    }
    if (dump_transform) {
      const auto spec = awsde::builtin_model(dump_model, parse_params(dump_params));
      const auto t = awsde::build_transform(spec);
      double lo = -1.0, hi = 1.0;
      if (!t.is_identity()) {
        lo = t.breakpoints().front() - 2.0 * t.c0();
        hi = t.breakpoints().back() + 2.0 * t.c0();
      }
      if (dump_points < 2) awsde::fail(awsde::ErrorKind::usage, "--points must be at least 2");
      std::cout << "x,G,G_prime,G_second,G_inverse\n";
      for (std::int64_t i = 0; i < dump_points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(dump_points - 1);
        std::cout << awsde::format_number(x) << ',' << awsde::format_number(t.forward(x)) << ','
                  << awsde::format_number(t.first_derivative(x)) << ','
                  << awsde::format_number(t.second_derivative(x)) << ','
                  << awsde::format_number(t.inverse(x)) << '\n';
      }
      return 0;
    }
    std::cout << app.help();
    return 2;
  } catch (const awsde::Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error(awsde::ErrorKind::numerical, e.what());
  }
}
