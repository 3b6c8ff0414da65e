#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "awsde/error.hpp"
#include "awsde/models.hpp"
#include "awsde/transform.hpp"
#include "support/synthetic.hpp"

using namespace awsde;

namespace {

// phi(u) (x - xi)|x - xi| written out directly from the defining product.
double phibar_direct(double x, double xi, double c0) {
  const double u = (x - xi) / c0;
  if (std::abs(u) > 1.0) return 0.0;
  return std::pow(1.0 + u, 3) * std::pow(1.0 - u, 3) * (x - xi) * std::abs(x - xi);
}

using synthetic::three_breakpoint_model;

std::vector<double> dense(double lo, double hi, int n) {
  std::vector<double> xs;
  for (int i = 0; i <= n; ++i) xs.push_back(lo + (hi - lo) * i / n);
  return xs;
}

double distance_to_breakpoints(const PiecewiseTransform& t, double x) {
  double d = INFINITY;
  for (double xi : t.breakpoints()) d = std::min(d, std::abs(x - xi));
  return d;
}

void check_invariants(const PiecewiseTransform& t) {
  const double lo = t.breakpoints().front() - 1.0, hi = t.breakpoints().back() + 1.0;
  double amax = 0.0;
  for (double a : t.alphas()) amax = std::max(amax, std::abs(a));
  double prev = -INFINITY;
  for (double x : dense(lo, hi, 20000)) {
    const double g = t.forward(x);
    EXPECT_LE(std::abs(t.inverse(g) - x), 1e-10) << "round trip at " << x;
    EXPECT_GT(g, prev) << "monotone at " << x;
    prev = g;
    const double d1 = t.first_derivative(x);
    EXPECT_GT(d1, 0.0);
    EXPECT_GE(d1, 1.0 - 6.0 * t.c0() * amax - 1e-12);
    EXPECT_LE(d1, 1.0 + 6.0 * t.c0() * amax + 1e-12);
    if (distance_to_breakpoints(t, x) >= t.c0()) {
      EXPECT_EQ(g, x);
      EXPECT_EQ(d1, 1.0);
      EXPECT_EQ(t.inverse(x), x);
    }
  }
  for (std::size_t k = 0; k < t.breakpoints().size(); ++k) {
    const double xi = t.breakpoints()[k], a = t.alphas()[k];
    EXPECT_EQ(t.forward(xi), xi);
    EXPECT_EQ(t.first_derivative(xi), 1.0);
    EXPECT_EQ(t.inverse(xi), xi);
    const double eps = 1e-7 * t.c0();
    EXPECT_NEAR(t.second_derivative(xi + eps) - t.second_derivative(xi - eps), 4.0 * a, 1e-6);
    EXPECT_NEAR(t.second_derivative(xi + eps), 2.0 * a, 1e-6);
    EXPECT_NEAR(t.second_derivative(xi - eps), -2.0 * a, 1e-6);
    EXPECT_EQ(t.second_derivative(xi), 2.0 * a);
  }
}

}  // namespace

TEST(Transform, BumpMatchesDefiningProductAndFiniteDifferences) {
  const double xi = 0.3, c0 = 0.2;
  const double fd = 1e-5;
  for (double x : dense(xi - 1.2 * c0, xi + 1.2 * c0, 997)) {
    const double u = (x - xi) / c0;
    EXPECT_NEAR(c0 * c0 * bump(u), phibar_direct(x, xi, c0), 1e-15);
    const double d1 = (phibar_direct(x + fd, xi, c0) - phibar_direct(x - fd, xi, c0)) / (2 * fd);
    EXPECT_NEAR(c0 * bump_d1(u), d1, 1e-8) << x;
    if (std::abs(x - xi) > 2 * fd) {
      const double d2 = (phibar_direct(x + fd, xi, c0) - 2 * phibar_direct(x, xi, c0) +
                         phibar_direct(x - fd, xi, c0)) / (fd * fd);
      EXPECT_NEAR(bump_d2(u), d2, 2e-4) << x;
    }
  }
  // Bounds on the scaled first derivative: |phibar'| <= 6 c0.
  for (double u : dense(-1.0, 1.0, 4000)) EXPECT_LE(std::abs(bump_d1(u)), 6.0);
}

TEST(Transform, DerivativesAgreeWithFiniteDifferencesOfForward) {
  const auto t = build_transform(builtin_model("sign_drift"));
  const double fd = 1e-6;
  for (double x : dense(1.0 - 1.1 * t.c0(), 1.0 + 1.1 * t.c0(), 501)) {
    const double d1 = (t.forward(x + fd) - t.forward(x - fd)) / (2 * fd);
    EXPECT_NEAR(t.first_derivative(x), d1, 1e-8);
    if (std::abs(x - 1.0) > 2 * fd) {
      const double d2 = (t.first_derivative(x + fd) - t.first_derivative(x - fd)) / (2 * fd);
      EXPECT_NEAR(t.second_derivative(x), d2, 1e-5);
    }
  }
}

TEST(Transform, SignDriftConstants) {
  const auto t = build_transform(builtin_model("sign_drift"));
  ASSERT_EQ(t.breakpoints().size(), 1u);
  EXPECT_NEAR(t.alphas()[0], 2.0, 1e-9);
  EXPECT_NEAR(t.c0(), 1.0 / 24.0, 1e-12);
  check_invariants(t);
}

TEST(Transform, HandBuiltUnitBump) {
  const PiecewiseTransform t({0.0}, {1.0}, 1.0 / 8.0);
  for (double x : dense(-1.0, 1.0, 2000)) {
    if (std::abs(x) >= 1.0 / 8.0) EXPECT_EQ(t.forward(x), x);
  }
  EXPECT_NE(t.forward(0.1), 0.1);
  EXPECT_EQ(t.first_derivative(0.0), 1.0);
  EXPECT_NEAR(t.second_derivative(1e-9) - t.second_derivative(-1e-9), 4.0, 1e-6);
  EXPECT_THROW(PiecewiseTransform({0.0}, {1.0}, 1.0 / 6.0), Error);
}

TEST(Transform, ThreeBreakpointModel) {
  const auto spec = three_breakpoint_model();
  const auto t = build_transform(spec);
  const std::vector<double> jumps{2.0, -1.0, 4.0};
  ASSERT_EQ(t.alphas().size(), 3u);
  double bound = INFINITY;
  for (std::size_t k = 0; k < 3; ++k) {
    const double s = spec.sigma(spec.breakpoints[k]);
    const double alpha = 0.5 * jumps[k] / (s * s);
    EXPECT_NEAR(t.alphas()[k], alpha, 1e-7);
    bound = std::min(bound, 1.0 / (6.0 * std::abs(alpha)));
  }
  bound = std::min(bound, 0.5 * 1.5);
  EXPECT_NEAR(t.c0(), 0.5 * bound, 1e-7);
  check_invariants(t);
}

TEST(Transform, IdentityWithoutBreakpoints) {
  const auto t = build_transform(builtin_model("cubic"));
  EXPECT_TRUE(t.is_identity());
  for (double x : dense(-5.0, 5.0, 100)) {
    EXPECT_EQ(t.forward(x), x);
    EXPECT_EQ(t.inverse(x), x);
    EXPECT_EQ(t.first_derivative(x), 1.0);
    EXPECT_EQ(t.second_derivative(x), 0.0);
  }
  const auto spec = builtin_model("cubic");
  const auto tc = transformed_coefficients(spec, t);
  for (double z : dense(-3.0, 3.0, 60)) {
    EXPECT_EQ(tc.drift(z), spec.b(z));
    EXPECT_EQ(tc.diffusion(z), spec.sigma(z));
  }
}

TEST(Transform, InverseContract) {
  const auto t = build_transform(builtin_model("sign_drift"));
  EXPECT_NEAR(t.inverse(t.forward(1.02)), 1.02, 1e-10);
  EXPECT_EQ(t.inverse(5.0), 5.0);
  EXPECT_EQ(t.inverse(1.0), 1.0);
  for (double y : dense(0.9, 1.1, 4001)) {
    const double x = t.inverse(y);
    EXPECT_LE(std::abs(t.forward(x) - y), 1e-12 * (1.0 + std::abs(y)));
  }
}

TEST(Transform, TransformedCoefficientsAgreeOutsideBumps) {
  const auto spec = builtin_model("sign_drift");
  const auto t = build_transform(spec);
  const auto tc = transformed_coefficients(spec, t);
  for (double x : dense(-2.0, 4.0, 6000)) {
    if (std::abs(x - 1.0) < t.c0()) continue;
    EXPECT_EQ(tc.drift(t.forward(x)), spec.b(x));
    EXPECT_EQ(tc.diffusion(t.forward(x)), spec.sigma(x));
  }
  EXPECT_NEAR(tc.drift(1.0 + 1e-8), tc.drift(1.0 - 1e-8), 1e-6);
  EXPECT_NEAR(tc.drift(1.0), tc.drift(1.0 + 1e-8), 1e-6);
}

TEST(Transform, DriftContinuousForEveryBreakpointModel) {
  const auto spec = three_breakpoint_model();
  const auto t = build_transform(spec);
  const TransformedCoefficients tc(spec, t, 1e9, 1e9);
  for (double xi : spec.breakpoints) {
    EXPECT_NEAR(tc.drift(xi + 1e-8), tc.drift(xi - 1e-8), 1e-6) << xi;
    EXPECT_NEAR(tc.diffusion(xi + 1e-8), tc.diffusion(xi - 1e-8), 1e-6) << xi;
  }
  const auto ps = builtin_model("perturbed_sign", {{"k", 5.0}});
  const auto tp = transformed_coefficients(ps, build_transform(ps));
  EXPECT_NEAR(tp.drift(1e-8), tp.drift(-1e-8), 1e-6);
}

TEST(Transform, DeclaredBoundsAreCrossChecked) {
  for (const auto& params : {ModelParameters{}, ModelParameters{{"additive", 1.0}}}) {
    const auto spec = builtin_model("sign_drift", params);
    EXPECT_NO_THROW(transformed_coefficients(spec, build_transform(spec)));
  }
  auto spec = builtin_model("sign_drift");
  spec.transformed_drift_bound = 100.0;
  try {
    transformed_coefficients(spec, build_transform(spec));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
  }
  spec = builtin_model("sign_drift");
  spec.transformed_drift_bound.reset();
  EXPECT_THROW(transformed_coefficients(spec, build_transform(spec)), Error);
}

TEST(Transform, RejectsDegenerateBreakpoint) {
  auto spec = builtin_model("sign_drift");
  spec.diffusion = [](double, double x) { return std::abs(x - 1.0); };
  try {
    build_transform(spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::assumption);
  }
}

TEST(Transform, OneSidedLimitsOfJump) {
  const auto lim = one_sided_limits([](double, double x) { return 0.5 - 2.0 * sign(x - 1.0); }, 1.0);
  EXPECT_NEAR(lim.left, 2.5, 1e-12);
  EXPECT_NEAR(lim.right, -1.5, 1e-12);
  EXPECT_THROW(one_sided_limits([](double, double x) { return 1.0 / (x - 1.0); }, 1.0), Error);
}
