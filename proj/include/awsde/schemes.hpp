#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "awsde/models.hpp"
#include "awsde/randomness.hpp"
#include "awsde/transform.hpp"

namespace awsde {

// CLI spellings: em, iem, tiem, tiem-mono, sym-em.
enum class SchemeKind { em, iem, tiem, tiem_mono, sym_em };

std::string_view to_string(SchemeKind kind) noexcept;
SchemeKind parse_scheme(std::string_view name);

struct StepperConfig {
  SchemeKind kind;
  CoefficientSpec spec;
  std::optional<TransformedCoefficients> tcoeffs;  // tiem / tiem_mono only
  double drift_bound = 0.0;                         // L used by the implicit solve
  double diffusion_bound = 0.0;                     // L_sigma~ for the monotone guard

  bool truncated() const noexcept { return kind == SchemeKind::tiem_mono; }
};

// Builds the transform when the scheme needs it. Throws configuration errors
// for missing metadata (e.g. sym-em without CIR parameters).
StepperConfig make_stepper(const CoefficientSpec& spec, SchemeKind kind);

// Guards: h < 1/L for the implicit schemes and, for tiem-mono, additionally
// 1 - L_sigma~ a_h > 0. Throws a step-size error quoting the violated bound.
void check_step_size(const StepperConfig& config, double h);
bool step_size_admissible(const StepperConfig& config, double h);

double em_step(double x, double t, const CoefficientSpec& spec, double h, double dw);

// Unique z with z - h drift(z) = y, for drift one-sided Lipschitz with constant L.
double implicit_solve(double y, const std::function<double(double)>& drift, double h,
                      double lipschitz_bound);

double semi_implicit_em_step(double x, double t, const CoefficientSpec& spec, double h, double dw,
                             double lipschitz_bound);

// G^-1 o (id - h b~)^-1 o (id + dw sigma~) o G
double transformed_step(double x, const TransformedCoefficients& tc, double h, double dw);

double symmetrised_em_step(double x, const CirParameters& cir, double h, double dw);

// One step of the configured scheme; `dw` is used as given (already truncated
// for tiem-mono).
double scheme_step(const StepperConfig& config, double x, double t, double h, double dw);

struct DiscretePath {
  TimeGrid grid;
  std::vector<double> values;  // N + 1 entries, values[0] = x0
  SchemeKind kind;
  std::int64_t path_index;
};

// Iterates the scheme over `dw` (raw increments; truncation is applied here
// for tiem-mono). `out` has dw.size() + 1 entries. Step errors are rethrown
// with the step index.
void simulate_into(const StepperConfig& config, const TimeGrid& grid, std::span<const double> dw,
                   std::span<double> out);

DiscretePath simulate_path(const StepperConfig& config, const IncrementBatch& increments);

// Paths on grids coarsened by each factor, all driven by the same fine
// Brownian path: coarse increments are exact sums of fine ones.
std::map<std::int64_t, DiscretePath> simulate_coupled(const StepperConfig& config,
                                                      const TimeGrid& fine_grid,
                                                      const std::vector<std::int64_t>& factors,
                                                      std::uint64_t seed, std::int64_t path_index);

// Sums consecutive blocks of `factor` fine increments.
void coarsen_increments(std::span<const double> fine, std::int64_t factor, std::span<double> out);

}  // namespace awsde
