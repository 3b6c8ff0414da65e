#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "awsde/error.hpp"
#include "awsde/models.hpp"
#include "awsde/randomness.hpp"
#include "awsde/schemes.hpp"
#include "support/oracles.hpp"

using namespace awsde;

namespace {

const double kTiny = std::ldexp(1.0, -13);  // admissible for the monotone scheme on sign_drift

}  // namespace

TEST(Schemes, ParseAndPrintRoundTrip) {
  for (auto k : {SchemeKind::em, SchemeKind::iem, SchemeKind::tiem, SchemeKind::tiem_mono,
                 SchemeKind::sym_em}) {
    EXPECT_EQ(parse_scheme(to_string(k)), k);
  }
  EXPECT_EQ(parse_scheme("tiem-mono"), SchemeKind::tiem_mono);
  EXPECT_EQ(parse_scheme("sym-em"), SchemeKind::sym_em);
  EXPECT_THROW(parse_scheme("milstein"), Error);
}

TEST(Schemes, EulerMaruyamaHandValues) {
  EXPECT_EQ(em_step(0.0, 0.0, builtin_model("brownian"), 0.1, 0.3), 0.3);
  EXPECT_EQ(em_step(1.0, 0.0, builtin_model("cir"), 0.1, 0.0), 1.0);
  EXPECT_NEAR(em_step(2.0, 0.0, builtin_model("cubic"), 0.1, 0.0), 1.2, 1e-15);
}

TEST(Schemes, ImplicitSolveOracles) {
  const auto cube = [](double z) { return -z * z * z; };
  EXPECT_EQ(implicit_solve(0.0, cube, 0.1, 0.0), 0.0);
  const double z = implicit_solve(1.0, cube, 0.1, 0.0);
  const double ref = oracle::bisect([](double v) { return v + 0.1 * v * v * v - 1.0; }, 0.0, 1.0);
  EXPECT_NEAR(z, ref, 1e-12);
  EXPECT_NEAR(z, 0.9217, 1e-4);
  for (double y : {-7.0, -0.3, 0.0, 2.5, 40.0}) {
    const double lam = 3.0;
    EXPECT_NEAR(implicit_solve(y, [&](double v) { return -lam * v; }, 0.1, 0.0), y / (1 + lam * 0.1),
                1e-12 * (1 + std::abs(y)));
  }
  // Residual contract on a rough drift.
  const auto rough = [](double v) { return 0.5 - 2.0 * sign(v - 1.0) - v * v * v; };
  for (double y = -5.0; y <= 5.0; y += 0.37) {
    const double w = implicit_solve(y, rough, 0.05, 0.0);
    if (std::abs(w - 1.0) > 1e-9) {
      EXPECT_LE(std::abs(w - 0.05 * rough(w) - y), 1e-12 * (1 + std::abs(y)));
    }
  }
}

TEST(Schemes, ImplicitSolveGuardAndMonotonicity) {
  const auto lin = [](double v) { return 2.0 * v; };
  try {
    implicit_solve(1.0, lin, 0.5, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::step_size);
  }
  const auto cube = [](double v) { return v - v * v * v; };
  double prev = -INFINITY;
  for (double y = -4.0; y <= 4.0; y += 0.01) {
    const double z = implicit_solve(y, cube, 0.5, 1.0 - 1e-9);
    EXPECT_GT(z, prev);
    prev = z;
  }
}

TEST(Schemes, SemiImplicitReductions) {
  const auto bm = builtin_model("brownian");
  for (double dw : {-0.4, 0.0, 0.7}) {
    EXPECT_EQ(semi_implicit_em_step(0.3, 0.0, bm, 0.1, dw, 0.0), em_step(0.3, 0.0, bm, 0.1, dw));
  }
  const auto cubic = builtin_model("cubic");
  EXPECT_EQ(semi_implicit_em_step(0.0, 0.0, cubic, 0.1, 0.0, 0.0), 0.0);
  EXPECT_NEAR(semi_implicit_em_step(1.0, 0.0, cubic, 0.1, 0.0, 0.0), 0.9217, 1e-4);
}

TEST(Schemes, TransformedStepIsSemiImplicitForIdentityTransform) {
  const auto spec = builtin_model("cubic");
  const auto cfg = make_stepper(spec, SchemeKind::tiem);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double x = 2.0 * n(rng), dw = 0.1 * n(rng);
    EXPECT_EQ(transformed_step(x, *cfg.tcoeffs, 0.01, dw), semi_implicit_em_step(x, 0.0, spec, 0.01, dw, 0.0));
  }
}

TEST(Schemes, TransformedStepAwayFromBreakpointMatchesRawScheme) {
  const auto spec = builtin_model("sign_drift");
  const auto cfg = make_stepper(spec, SchemeKind::tiem);
  const double h = std::ldexp(1.0, -10);
  for (double x : {-2.0, 0.2, 0.5, 1.5, 3.0}) {
    const double a = transformed_step(x, *cfg.tcoeffs, h, 0.0);
    const double b = semi_implicit_em_step(x, 0.0, spec, h, 0.0, 0.0);
    EXPECT_NEAR(a, b, 1e-12) << x;
  }
}

TEST(Schemes, TransformedStepMatchesDirectFixedPoint) {
  // Solve X' = G^-1(G(x) + h b~(G(X')) + sigma~(G(x)) dW) by iterating on the
  // pair (X', Z') with Z' = G(X'), inverting G by bisection.
  const auto spec = builtin_model("sign_drift");
  const auto cfg = make_stepper(spec, SchemeKind::tiem);
  const auto& tc = *cfg.tcoeffs;
  const auto& g = tc.transform();
  const double h = std::ldexp(1.0, -10);
  const auto btilde_at = [&](double x) {
    const double s = spec.sigma(x);
    return spec.b(x) * g.first_derivative(x) + 0.5 * s * s * g.second_derivative(x);
  };
  const auto ginv = [&](double z) {
    return oracle::bisect([&](double v) { return g.forward(v) - z; }, z - 1.0, z + 1.0);
  };
  for (double x0 : {1.0, 0.99, 1.01, 0.97}) {
    for (double dw : {0.0, 0.01, -0.02}) {
      const double z0 = g.forward(x0) + spec.sigma(x0) * g.first_derivative(x0) * dw;
      double x = x0, z = g.forward(x0);
      for (int it = 0; it < 500; ++it) {
        const double z_next = z0 + h * btilde_at(x);
        x = ginv(z_next);
        z = g.forward(x);
      }
      EXPECT_NEAR(transformed_step(x0, tc, h, dw), x, 1e-11) << x0 << " " << dw;
    }
  }
}

TEST(Schemes, SymmetrisedHandValues) {
  const CirParameters cir{1.0, 1.0, 1.0};
  EXPECT_EQ(symmetrised_em_step(1.0, cir, 0.1, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(symmetrised_em_step(0.0, CirParameters{2.0, 0.5, 1.0}, 0.1, 3.0), 0.1);
  EXPECT_DOUBLE_EQ(symmetrised_em_step(1.0, cir, 0.25, -1.5), 0.5);
  EXPECT_THROW(symmetrised_em_step(-0.1, cir, 0.1, 0.0), Error);
  EXPECT_THROW(make_stepper(builtin_model("cubic"), SchemeKind::sym_em), Error);
}

TEST(Schemes, StepGuards) {
  const auto cfg = make_stepper(builtin_model("sign_drift"), SchemeKind::tiem_mono);
  EXPECT_FALSE(step_size_admissible(cfg, std::ldexp(1.0, -8)));
  EXPECT_FALSE(step_size_admissible(cfg, std::ldexp(1.0, -12)));
  EXPECT_TRUE(step_size_admissible(cfg, kTiny));
  try {
    check_step_size(cfg, std::ldexp(1.0, -6));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::step_size);
    EXPECT_NE(std::string(e.what()).find("h < 1/L"), std::string::npos);
  }
  const auto cubic = make_stepper(builtin_model("cubic"), SchemeKind::tiem_mono);
  EXPECT_TRUE(step_size_admissible(cubic, 0.25));
  const auto tiem = make_stepper(builtin_model("sign_drift"), SchemeKind::tiem);
  EXPECT_TRUE(step_size_admissible(tiem, std::ldexp(1.0, -9)));
}

TEST(Schemes, OneStepMonotonicityOfMonotoneScheme) {
  for (const auto& params : {ModelParameters{}, ModelParameters{{"additive", 1.0}}}) {
    const auto cfg = make_stepper(builtin_model("sign_drift", params), SchemeKind::tiem_mono);
    ASSERT_TRUE(step_size_admissible(cfg, kTiny));
    const TruncationLevel lvl = truncation_level(kTiny);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ux(0.8, 1.2), ud(-2.0 * lvl.a_h, 2.0 * lvl.a_h);
    int violations = 0;
    for (int i = 0; i < 10000; ++i) {
      double x1 = ux(rng), x2 = ux(rng);
      if (x1 > x2) std::swap(x1, x2);
      const double dw = truncate_increment(ud(rng), lvl);
      if (scheme_step(cfg, x1, 0.0, kTiny, dw) > scheme_step(cfg, x2, 0.0, kTiny, dw)) ++violations;
      double d1 = truncate_increment(ud(rng), lvl), d2 = truncate_increment(ud(rng), lvl);
      if (d1 > d2) std::swap(d1, d2);
      const double x = ux(rng);
      if (scheme_step(cfg, x, 0.0, kTiny, d1) > scheme_step(cfg, x, 0.0, kTiny, d2)) ++violations;
    }
    EXPECT_EQ(violations, 0);
  }
}

TEST(Schemes, SimulatePathBasics) {
  const TimeGrid g(1.0, 64);
  const auto inc = sample_increments(g, 9, 4);
  const auto bm = make_stepper(builtin_model("brownian", {{"x0", 0.5}}), SchemeKind::em);
  const auto path = simulate_path(bm, inc);
  ASSERT_EQ(path.values.size(), 65u);
  double acc = 0.5;
  EXPECT_EQ(path.values[0], 0.5);
  for (std::size_t k = 0; k < inc.values.size(); ++k) {
    acc += inc.values[k];
    EXPECT_DOUBLE_EQ(path.values[k + 1], acc);
  }
  EXPECT_EQ(simulate_path(bm, inc).values, path.values);

  const auto cubic = make_stepper(builtin_model("cubic"), SchemeKind::iem);
  IncrementBatch zero{g, 0, 0, std::vector<double>(64, 0.0), false};
  const auto decay = simulate_path(cubic, zero);
  for (std::size_t k = 1; k < decay.values.size(); ++k) {
    EXPECT_LT(decay.values[k], decay.values[k - 1]);
    EXPECT_GT(decay.values[k], 0.0);
  }
  // Backward Euler for x' = -x^3 stays above the exact solution 1/sqrt(1 + 2t).
  EXPECT_GT(decay.values.back(), 1.0 / std::sqrt(3.0));
  EXPECT_NEAR(decay.values.back(), 1.0 / std::sqrt(3.0), 0.01);
}

TEST(Schemes, SimulatePathAnnotatesStepErrors) {
  const TimeGrid g(1.0, 4);
  auto spec = builtin_model("cir");
  const auto cfg = make_stepper(spec, SchemeKind::sym_em);
  DiscretePath out{g, std::vector<double>(5), cfg.kind, 0};
  auto bad = cfg;
  bad.spec.initial_value = -1.0;
  try {
    simulate_into(bad, g, std::vector<double>(4, 0.0), out.values);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
    EXPECT_EQ(std::string(e.what()).rfind("step 0:", 0), 0u);
  }
}

TEST(Schemes, CoupledPathsShareBrownianPath) {
  const TimeGrid fine(1.0, 256);
  const auto bm = make_stepper(builtin_model("brownian"), SchemeKind::em);
  const auto sims = simulate_coupled(bm, fine, {1, 4, 16}, 21, 3);
  const auto direct = simulate_path(bm, sample_increments(fine, 21, 3));
  EXPECT_EQ(sims.at(1).values, direct.values);
  for (std::int64_t f : {4, 16}) {
    const auto& coarse = sims.at(f).values;
    for (std::size_t k = 0; k < coarse.size(); ++k) {
      EXPECT_NEAR(coarse[k], direct.values[k * static_cast<std::size_t>(f)], 1e-13);
    }
  }
  EXPECT_THROW(simulate_coupled(bm, fine, {3}, 1, 0), Error);
}

TEST(Schemes, CoupledErrorShrinksWithStep) {
  const TimeGrid fine(1.0, 1024);
  const auto cfg = make_stepper(builtin_model("cubic"), SchemeKind::tiem_mono);
  const std::vector<std::int64_t> factors{1, 4, 16, 64};
  std::vector<double> err(factors.size(), 0.0);
  for (int path = 0; path < 200; ++path) {
    const auto sims = simulate_coupled(cfg, fine, factors, 5, path);
    for (std::size_t i = 1; i < factors.size(); ++i) {
      const auto& x = sims.at(factors[i]).values;
      const double d = x.back() - sims.at(1).values.back();
      err[i] += d * d;
    }
  }
  EXPECT_LT(err[1], err[2]);
  EXPECT_LT(err[2], err[3]);
}
