#pragma once

#include <optional>
#include <vector>

#include "awsde/models.hpp"

namespace awsde {

// G(x) = x + sum_k alpha_k phibar_k(x), with
// phibar_k(x) = phi((x - xi_k) / c0) (x - xi_k) |x - xi_k| and phi(u) = (1 - u^2)^3 on |u| <= 1.
// Default-constructed transform is the identity.
class PiecewiseTransform {
 public:
  PiecewiseTransform() = default;
  PiecewiseTransform(std::vector<double> breakpoints, std::vector<double> alphas, double c0);

  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& alphas() const noexcept { return alphas_; }
  double c0() const noexcept { return c0_; }
  bool is_identity() const noexcept { return breakpoints_.empty(); }

  double forward(double x) const;
  double first_derivative(double x) const;
  // Returns the right limit +2 alpha_k at x = xi_k exactly.
  double second_derivative(double x) const;
  double inverse(double y) const;

  // Index of the bump whose open support (xi_k - c0, xi_k + c0) contains x, or -1.
  int bump_index(double x) const noexcept;

  double lipschitz() const noexcept;          // L_G
  double inverse_lipschitz() const noexcept;  // L_{G^-1}

 private:
  std::vector<double> breakpoints_;
  std::vector<double> alphas_;
  double c0_ = 1.0;
};

// phibar / c0^2 in the variable u = (x - xi)/c0, and its u-derivatives.
double bump(double u) noexcept;
double bump_d1(double u) noexcept;
double bump_d2(double u) noexcept;

struct OneSidedLimits {
  double left;
  double right;
};

// b(xi-) and b(xi+) from probes at xi -/+ delta, delta = 1e-8 (1 + |xi|), with
// a Richardson check at delta/2. Throws a numerical error if the limits are
// not finite or the check disagrees.
OneSidedLimits one_sided_limits(const ScalarField& f, double xi);

PiecewiseTransform build_transform(const CoefficientSpec& spec);

// b~ = (b G' + sigma^2 G''/2) o G^-1 and sigma~ = (sigma G') o G^-1.
class TransformedCoefficients {
 public:
  TransformedCoefficients(const CoefficientSpec& spec, PiecewiseTransform transform,
                          double drift_bound, double diffusion_bound);

  double drift(double z) const;
  double diffusion(double z) const;
  // sigma~(G(x)) computed as sigma(x) G'(x).
  double diffusion_at_preimage(double x) const;

  const PiecewiseTransform& transform() const noexcept { return transform_; }
  double drift_bound() const noexcept { return drift_bound_; }          // L_b~
  double diffusion_bound() const noexcept { return diffusion_bound_; }  // L_sigma~

 private:
  ScalarField b_;
  ScalarField sigma_;
  PiecewiseTransform transform_;
  std::vector<double> right_limits_;
  double drift_bound_;
  double diffusion_bound_;
};

struct TransformProbe {
  int points_per_bump = 4001;
  double tolerance = 0.01;  // relative excess allowed over a declared bound
};

// Takes L_b~ and L_sigma~ from the spec (falling back to L_b and L_sigma when
// there are no breakpoints) and cross-checks them by adjacent-pair slopes on a
// dense probe around each breakpoint.
TransformedCoefficients transformed_coefficients(const CoefficientSpec& spec,
                                                 const PiecewiseTransform& transform,
                                                 const TransformProbe& probe = {});

struct SlopeWitness {
  double x;
  double y;
  double slope;
};

// Largest adjacent-pair slope (f(z_{i+1}) - f(z_i)) / (z_{i+1} - z_i) over the
// probe, or of its absolute value when `absolute` is set.
SlopeWitness max_probe_slope(const std::vector<double>& zs, const std::vector<double>& values,
                             bool absolute);

std::vector<double> transform_probe_points(const PiecewiseTransform& transform,
                                           int points_per_bump);

}  // namespace awsde
