#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace awsde {

// b_t(x) or sigma_t(x). Must be safe to call concurrently.
using ScalarField = std::function<double(double t, double x)>;

enum class RegularityClass { lipschitz, growth_disc, regular, zvonkin, unclassified };

std::string_view to_string(RegularityClass c) noexcept;

// (K_b, gamma, eta) in |b(x) - b(y)| <= K_b (e^{gamma|x|^eta} + e^{gamma|y|^eta}) |x - y|.
struct GrowthConstants {
  double k_b;
  double gamma;
  double eta;
};

struct CirParameters {
  double kappa;
  double eta;
  double gamma;

  bool feller() const noexcept { return 2.0 * kappa * eta >= gamma * gamma; }
};

struct CoefficientSpec {
  std::string name;
  ScalarField drift;
  ScalarField diffusion;
  double initial_value = 0.0;
  std::vector<double> breakpoints;
  std::optional<double> one_sided_lipschitz_bound;    // L_b
  std::optional<double> diffusion_lipschitz_bound;    // L_sigma
  std::optional<GrowthConstants> growth_constants;
  RegularityClass regularity_class = RegularityClass::unclassified;
  bool time_homogeneous = true;
  // Bounds for the coefficients after the discontinuity-removing change of
  // variables. Required for the transformed schemes when breakpoints exist.
  std::optional<double> transformed_drift_bound;      // L_b~
  std::optional<double> transformed_diffusion_bound;  // L_sigma~
  std::optional<CirParameters> cir;
  std::vector<std::string> warnings;

  double b(double x, double t = 0.0) const { return drift(t, x); }
  double sigma(double x, double t = 0.0) const { return diffusion(t, x); }
};

// Throws configuration error when the structural invariants fail
// (breakpoints not strictly increasing, missing coefficient functions,
// time-dependent growth_disc model).
void check_spec(const CoefficientSpec& spec);

enum class Verdict { pass, fail, inconclusive };

std::string_view to_string(Verdict v) noexcept;

struct Witness {
  double x;
  double y;
  double lhs;  // evaluated side that must not exceed rhs
  double rhs;
};

struct ConditionResult {
  std::string condition;
  Verdict verdict;
  std::string detail;
  std::optional<Witness> witness;
};

struct AssumptionReport {
  RegularityClass regularity_class;
  std::vector<ConditionResult> results;

  const ConditionResult* find(std::string_view condition) const;
  bool any_failed() const;
};

struct ProbeGrid {
  double lo = -10.0;
  double hi = 10.0;
  int points = 1000;
  double horizon = 1.0;  // time probe for time-homogeneity checks
};

// Tolerance used for every sampled inequality: a violation is reported only
// when lhs - rhs exceeds it.
double probe_tolerance(double lhs, double rhs) noexcept;

AssumptionReport validate_assumptions(const CoefficientSpec& spec, const ProbeGrid& probe = {});

using ModelParameters = std::map<std::string, double>;

// Names: cubic, sign_drift, brownian, perturbed_sign, cir, sign_sin_holder.
CoefficientSpec builtin_model(std::string_view name, const ModelParameters& params = {});

std::vector<std::string> builtin_model_names();

double sign(double x) noexcept;

}  // namespace awsde
