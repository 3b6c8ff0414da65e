#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "awsde/bicausal.hpp"
#include "awsde/estimator.hpp"
#include "awsde/stopping.hpp"
#include "json.hpp"

namespace awsde {

struct ExperimentConfig {
  std::string experiment;
  std::string preset = "desk";
  std::uint64_t seed = 1;
  std::string out = "out";
  std::optional<std::int64_t> steps;
  std::optional<std::int64_t> paths;
  std::optional<std::string> model;
  ModelParameters model_params;
  std::optional<double> p;
  std::optional<std::string> scheme;
  int threads = 0;

  nlohmann::json to_json() const;
  // Same fields as the CLI flags; `model` may be a name or {name, params}.
  static ExperimentConfig from_json(const nlohmann::json& doc);
};

std::vector<std::string> experiment_names();

// Runs the experiment, writes its CSV/JSON artifacts and manifest.json into
// config.out, and returns the manifest.
nlohmann::json run_experiment(const ExperimentConfig& config);

// Shortest round-trip decimal form; integral values print without exponent.
std::string format_number(double v);

struct SweepRow {
  double k_or_delta;
  double estimate;
  double stderr_estimate;
  std::int64_t paths;
  double h;
  std::uint64_t seed;
};

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string rate_curve_csv(const RateCurve& curve);
std::string moments_csv(const std::vector<MomentRow>& rows);

// AW_2^2 between Brownian motion and dX = (k/10) sign(X) dt + dW, k = 0..10.
std::vector<SweepRow> discontinuous_drift_sweep(std::int64_t steps, std::int64_t paths,
                                                std::uint64_t seed, const ExecutionPolicy& policy,
                                                SchemeKind scheme = SchemeKind::em);

struct CirSweep {
  std::vector<SweepRow> kappa;
  std::vector<SweepRow> eta;
  std::vector<SweepRow> gamma;
};

inline const std::vector<double> cir_perturbations{0.1, 0.2, 0.3, 0.4, 0.5};

// AW_2^2 between CIR(1, 1, 1) and CIR with one parameter raised by delta,
// both simulated by the symmetrised scheme on shared increments.
CirSweep cir_perturbation_sweep(std::int64_t steps, std::int64_t paths, std::uint64_t seed,
                                const ExecutionPolicy& policy);

// Coefficient of determination of log(y) against x.
double log_linear_r2(const std::vector<double>& x, const std::vector<double>& y);

// Two-stage pair whose first process is increasing only in second-order
// dominance; the Knothe-Rosenblatt coupling is not optimal for it.
std::pair<FiniteAdaptedProcess, FiniteAdaptedProcess> second_order_counterexample();

// Antitone coupling at stage 1, Knothe-Rosenblatt below.
BicausalPlan antitone_first_plan(const FiniteAdaptedProcess& mu, const FiniteAdaptedProcess& nu);

// X: x_1 = 0, x_2 = +/-1; X^eps: (eps, 1) or (-eps, -1), each with mass 1/2.
std::pair<FiniteAdaptedProcess, FiniteAdaptedProcess> martingale_pair(double eps);

struct StoppingInstance {
  int stages;
  std::string payoff;
  double lhs;
  double rhs;
};

// Random tree pairs (2-3 stages, at most 3 children) with random
// 1-Lipschitz separable or Asian payoffs.
std::vector<StoppingInstance> stopping_sweep(int count, std::uint64_t seed, double p);

}  // namespace awsde
