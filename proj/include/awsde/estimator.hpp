#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "awsde/parallel.hpp"
#include "awsde/randomness.hpp"
#include "awsde/schemes.hpp"

namespace awsde {

// c_t(x, y)
using PathCost = std::function<double(double t, double x, double y)>;

PathCost power_path_cost(double p);

struct EstimateResult {
  double estimate;  // V_c, or AW_p^p for estimate_aw
  double stderr_estimate;
  std::int64_t paths;
  TimeGrid grid;
  std::uint64_t seed;
  std::string scheme_mu;
  std::string scheme_nu;
  bool optimality_certified;  // both models in a class where the synchronous coupling is optimal
  std::vector<std::string> warnings;
  std::optional<double> aw;  // AW_p = estimate^{1/p}, set by estimate_aw
};

// Per-path value T/(N+1) sum_{j=0..N} c(t_j, X_j, Xbar_j); both legs share
// one increment batch per path.
double synchronous_path_value(const StepperConfig& mu, const StepperConfig& nu,
                              const PathCost& cost, const TimeGrid& grid, std::uint64_t seed,
                              std::int64_t path_index);

EstimateResult estimate_vc(const StepperConfig& mu, const StepperConfig& nu, const PathCost& cost,
                           const TimeGrid& grid, std::int64_t paths, std::uint64_t seed,
                           const ExecutionPolicy& policy = {});

EstimateResult estimate_aw(const StepperConfig& mu, const StepperConfig& nu, double p,
                           const TimeGrid& grid, std::int64_t paths, std::uint64_t seed,
                           const ExecutionPolicy& policy = {});

struct SlopeFit {
  double slope;
  double intercept;
  double rms;  // root mean square residual in log space
  std::size_t points;
};

// Least squares of log(error) on log(h) over points with positive finite
// error. Empty when fewer than two usable points remain.
std::optional<SlopeFit> fit_slope(const std::vector<double>& h, const std::vector<double>& err);

struct RateFit {
  std::optional<SlopeFit> all;
  // Fit without the largest h, present when that point's residual from this
  // fit exceeds 3x the fit's own RMS residual.
  std::optional<SlopeFit> trimmed;

  const std::optional<SlopeFit>& chosen() const noexcept { return trimmed ? trimmed : all; }
};

RateFit fit_rate(const std::vector<double>& h, const std::vector<double>& err);

struct RatePoint {
  double h;
  double err_sup;  // max_k E|X_ref - X^h|^p at grid points, to the power 1/p
  double err_int;  // E sum_k int_{kh}^{(k+1)h} |X_ref(t) - X^h_{kh}|^p dt, to the power 1/p
  double stderr_sup;
  double stderr_int;
};

struct RateCurve {
  double p;
  double h_ref;
  std::int64_t paths;
  std::vector<RatePoint> points;  // h strictly decreasing
  RateFit fit_sup;
  RateFit fit_int;
};

// Self-coupled reference: the same scheme on the h_ref grid, driven by the
// Brownian path whose sums give the coarse increments.
RateCurve strong_error_curve(const StepperConfig& config, double p, std::vector<double> h_list,
                             double h_ref, double horizon, std::int64_t paths, std::uint64_t seed,
                             const ExecutionPolicy& policy = {});

struct MomentRow {
  double h;
  double p;
  double sup_moment;  // E[max_k |X^h_{kh}|^p]
  double stderr_moment;
  double terminal_moment;  // E|X^h_T|^p
};

// All grids are driven by one Brownian path per sample (coarse increments are
// sums over the finest grid in h_list).
std::vector<MomentRow> moment_diagnostic(const StepperConfig& config, double p,
                                         std::vector<double> h_list, double horizon,
                                         std::int64_t paths, std::uint64_t seed,
                                         const ExecutionPolicy& policy = {});

// P[xi <= s] for the clipped increment xi = clip(dW, -A_h, A_h), dW ~ N(0, h).
double clipped_increment_cdf(double s, double h);

struct MonotonicityWitness {
  double z;
  double z_bar;
  double a_sub;  // a_*: P[Ybar <= a_*] and P[Y <= a_*] cross one way
  double a_sup;  // a^*: and the other way
  double cdf_z_sub;
  double cdf_zbar_sub;
  double cdf_z_sup;
  double cdf_zbar_sup;
  bool verified;  // both crossings confirmed by direct CDF evaluation
};

// Searches a uniform grid on [lo, hi] for the pair z < z_bar maximising
// |sigma(z_bar) - sigma(z)| - (z_bar - z) / A_h; if positive, builds thresholds where
// the one-step kernels of the monotone scheme from z and z_bar cross in
// opposite directions. Empty (inconclusive) when the grid has no such pair.
std::optional<MonotonicityWitness> monotonicity_witness(const std::function<double(double)>& sigma,
                                                        double h, double lo = -1.0,
                                                        double hi = 1.0, int points = 1001);

}  // namespace awsde
