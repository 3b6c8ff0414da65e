#include "awsde/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "awsde/error.hpp"

namespace awsde {

// With a = |u|: phibar / c0^2 = sg(u) g(a), g(a) = a^2 (1 - a^2)^3.
namespace {

double g0(double a) noexcept {
  const double s = 1.0 - a * a;
  return a * a * s * s * s;
}
// g'(a) = 2a - 12a^3 + 18a^5 - 8a^7
double g1(double a) noexcept {
  const double a2 = a * a;
  return a * (2.0 + a2 * (-12.0 + a2 * (18.0 - 8.0 * a2)));
}
// g''(a) = 2 - 36a^2 + 90a^4 - 56a^6
double g2(double a) noexcept {
  const double a2 = a * a;
  return 2.0 + a2 * (-36.0 + a2 * (90.0 - 56.0 * a2));
}

}  // namespace

double bump(double u) noexcept {
  const double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  return u < 0.0 ? -g0(a) : g0(a);
}

double bump_d1(double u) noexcept {
  const double a = std::abs(u);
  return a >= 1.0 ? 0.0 : g1(a);
}

double bump_d2(double u) noexcept {
  const double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  return u < 0.0 ? -g2(a) : g2(a);
}

PiecewiseTransform::PiecewiseTransform(std::vector<double> breakpoints, std::vector<double> alphas,
                                       double c0)
    : breakpoints_(std::move(breakpoints)), alphas_(std::move(alphas)), c0_(c0) {
  if (breakpoints_.size() != alphas_.size()) {
    fail(ErrorKind::configuration, "transform: one alpha per breakpoint required");
  }
  if (!(c0_ > 0.0) || !std::isfinite(c0_)) {
    fail(ErrorKind::configuration, "transform: c0 must be positive and finite");
  }
  for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
    if (!(breakpoints_[k] - breakpoints_[k - 1] >= 2.0 * c0_)) {
      fail(ErrorKind::configuration, "transform: bumps overlap (need xi_{k+1} - xi_k >= 2 c0)");
    }
  }
  for (double a : alphas_) {
    if (!(6.0 * c0_ * std::abs(a) < 1.0)) {
      fail(ErrorKind::configuration, "transform: need 6 c0 |alpha_k| < 1 for G' > 0");
    }
  }
}

int PiecewiseTransform::bump_index(double x) const noexcept {
  // Supports are disjoint, so the nearest breakpoint is the only candidate.
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
  for (auto cand : {it, it == breakpoints_.begin() ? it : it - 1}) {
    if (cand != breakpoints_.end() && std::abs(x - *cand) < c0_) {
      return static_cast<int>(cand - breakpoints_.begin());
    }
  }
  return -1;
}

double PiecewiseTransform::forward(double x) const {
  const int k = bump_index(x);
  if (k < 0) return x;
  const double u = (x - breakpoints_[k]) / c0_;
  return x + alphas_[k] * c0_ * c0_ * bump(u);
}

double PiecewiseTransform::first_derivative(double x) const {
  const int k = bump_index(x);
  if (k < 0) return 1.0;
  const double u = (x - breakpoints_[k]) / c0_;
  return 1.0 + alphas_[k] * c0_ * bump_d1(u);
}

double PiecewiseTransform::second_derivative(double x) const {
  const int k = bump_index(x);
  if (k < 0) return 0.0;
  const double u = (x - breakpoints_[k]) / c0_;
  // bump_d2(0) = +2, the right limit.
  return alphas_[k] * (u == 0.0 ? g2(0.0) : bump_d2(u));
}

double PiecewiseTransform::inverse(double y) const {
  // G fixes each xi_k and each xi_k +/- c0, so it maps every support onto itself.
  const int k = bump_index(y);
  if (k < 0) return y;
  if (y == breakpoints_[k]) return y;
  const double xi = breakpoints_[k];
  double lo = std::max(y - c0_, xi - c0_);
  double hi = std::min(y + c0_, xi + c0_);
  const double tol = 1e-13 * (1.0 + std::abs(y));
  double x = y;
  for (int it = 0; it < 200; ++it) {
    const double r = forward(x) - y;
    if (std::abs(r) <= tol) return x;
    if (r > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double next = x - r / first_derivative(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(y))) {
      return next;
    }
    x = next;
  }
  return x;
}

double PiecewiseTransform::lipschitz() const noexcept {
  double m = 0.0;
  for (double a : alphas_) m = std::max(m, std::abs(a));
  return 1.0 + 6.0 * c0_ * m;
}

double PiecewiseTransform::inverse_lipschitz() const noexcept {
  double m = 0.0;
  for (double a : alphas_) m = std::max(m, std::abs(a));
  return 1.0 / (1.0 - 6.0 * c0_ * m);
}

OneSidedLimits one_sided_limits(const ScalarField& f, double xi) {
  const double delta = 1e-8 * (1.0 + std::abs(xi));
  const auto side = [&](double dir) {
    const double coarse = f(0.0, xi + dir * delta);
    const double fine = f(0.0, xi + dir * 0.5 * delta);
    if (!std::isfinite(coarse) || !std::isfinite(fine)) {
      std::ostringstream os;
      os.precision(17);
      os << "non-finite one-sided limit of the drift at " << xi;
      fail(ErrorKind::numerical, os.str());
    }
    if (std::abs(coarse - fine) > 1e-6 * (1.0 + std::abs(fine))) {
      std::ostringstream os;
      os.precision(17);
      os << "one-sided limit of the drift at " << xi << " does not settle: " << coarse << " vs "
         << fine;
      fail(ErrorKind::numerical, os.str());
    }
    return 2.0 * fine - coarse;
  };
  return {side(-1.0), side(1.0)};
}

PiecewiseTransform build_transform(const CoefficientSpec& spec) {
  check_spec(spec);
  const auto& xi = spec.breakpoints;
  if (xi.empty()) return {};
  if (spec.regularity_class != RegularityClass::growth_disc) {
    fail(ErrorKind::configuration,
         "model '" + spec.name + "': the transformation requires class growth_disc");
  }
  std::vector<double> alphas;
  alphas.reserve(xi.size());
  double bound = std::numeric_limits<double>::infinity();
  for (double x : xi) {
    const double s = spec.sigma(x);
    if (s == 0.0) {
      std::ostringstream os;
      os.precision(17);
      os << "model '" << spec.name << "': sigma(" << x << ") = 0 at a breakpoint";
      fail(ErrorKind::assumption, os.str());
    }
    const OneSidedLimits lim = one_sided_limits(spec.drift, x);
    const double alpha = 0.5 * (lim.left - lim.right) / (s * s);
    alphas.push_back(alpha);
    if (alpha != 0.0) bound = std::min(bound, 1.0 / (6.0 * std::abs(alpha)));
  }
  for (std::size_t k = 1; k < xi.size(); ++k) bound = std::min(bound, 0.5 * (xi[k] - xi[k - 1]));
  const double c0 = std::isfinite(bound) ? 0.5 * bound : 1.0;
  return {xi, std::move(alphas), c0};
}

TransformedCoefficients::TransformedCoefficients(const CoefficientSpec& spec,
                                                 PiecewiseTransform transform, double drift_bound,
                                                 double diffusion_bound)
    : b_(spec.drift),
      sigma_(spec.diffusion),
      transform_(std::move(transform)),
      drift_bound_(drift_bound),
      diffusion_bound_(diffusion_bound) {
  for (double xi : transform_.breakpoints()) {
    right_limits_.push_back(one_sided_limits(b_, xi).right);
  }
}

double TransformedCoefficients::drift(double z) const {
  if (transform_.bump_index(z) < 0) return b_(0.0, z);
  const double x = transform_.inverse(z);
  const double s = sigma_(0.0, x);
  const int k = transform_.bump_index(x);
  // At xi_k itself take b(xi_k+) to match the right-limit convention of G''.
  const double b = (k >= 0 && x == transform_.breakpoints()[k]) ? right_limits_[k] : b_(0.0, x);
  return b * transform_.first_derivative(x) + 0.5 * s * s * transform_.second_derivative(x);
}

double TransformedCoefficients::diffusion(double z) const {
  if (transform_.bump_index(z) < 0) return sigma_(0.0, z);
  const double x = transform_.inverse(z);
  return sigma_(0.0, x) * transform_.first_derivative(x);
}

double TransformedCoefficients::diffusion_at_preimage(double x) const {
  return sigma_(0.0, x) * transform_.first_derivative(x);
}

SlopeWitness max_probe_slope(const std::vector<double>& zs, const std::vector<double>& values,
                             bool absolute) {
  SlopeWitness best{0.0, 0.0, -std::numeric_limits<double>::infinity()};
  for (std::size_t i = 1; i < zs.size(); ++i) {
    const double dz = zs[i] - zs[i - 1];
    if (!(dz > 0.0)) continue;
    double s = (values[i] - values[i - 1]) / dz;
    if (absolute) s = std::abs(s);
    if (s > best.slope) best = {zs[i - 1], zs[i], s};
  }
  return best;
}

std::vector<double> transform_probe_points(const PiecewiseTransform& transform,
                                           int points_per_bump) {
  std::vector<double> zs;
  const double c0 = transform.c0();
  for (double xi : transform.breakpoints()) {
    const double lo = xi - 1.5 * c0;
    const double hi = xi + 1.5 * c0;
    for (int i = 0; i < points_per_bump; ++i) {
      zs.push_back(lo + (hi - lo) * i / (points_per_bump - 1));
    }
  }
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
  return zs;
}

TransformedCoefficients transformed_coefficients(const CoefficientSpec& spec,
                                                 const PiecewiseTransform& transform,
                                                 const TransformProbe& probe) {
  std::optional<double> lb = spec.transformed_drift_bound;
  std::optional<double> ls = spec.transformed_diffusion_bound;
  if (transform.is_identity()) {
    if (!lb) lb = spec.one_sided_lipschitz_bound;
    if (!ls) ls = spec.diffusion_lipschitz_bound;
  }
  if (!lb) {
    fail(ErrorKind::configuration,
         "model '" + spec.name + "': a transformed drift bound L_b~ must be declared");
  }
  TransformedCoefficients tc(spec, transform, *lb, ls.value_or(std::numeric_limits<double>::infinity()));
  if (transform.is_identity()) return tc;

  const std::vector<double> zs = transform_probe_points(transform, probe.points_per_bump);
  std::vector<double> bt(zs.size()), st(zs.size());
  for (std::size_t i = 0; i < zs.size(); ++i) {
    bt[i] = tc.drift(zs[i]);
    st[i] = tc.diffusion(zs[i]);
  }
  const auto check = [&](const SlopeWitness& w, double declared, const char* what) {
    if (w.slope > declared * (1.0 + probe.tolerance) + 1e-12) {
      std::ostringstream os;
      os.precision(17);
      os << "model '" << spec.name << "': declared " << what << " = " << declared
         << " is exceeded on the probe: slope " << w.slope << " between z=" << w.x << " and z="
         << w.y;
      fail(ErrorKind::configuration, os.str());
    }
  };
  check(max_probe_slope(zs, bt, false), *lb, "L_b~");
  if (ls) check(max_probe_slope(zs, st, true), *ls, "L_sigma~");
  return tc;
}

}  // namespace awsde
