#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "awsde/bicausal.hpp"
#include "awsde/error.hpp"
#include "awsde/experiments.hpp"
#include "awsde/stopping.hpp"
#include "support/oracles.hpp"

using namespace awsde;

namespace {

PathPayoff random_separable_payoff(std::mt19937_64& rng, Objective objective) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng);
  // |a x_k + b| is 1-Lipschitz in x_k for |a| <= 1, which bounds it by the l^p norm.
  return {[a, b, c](int stage, std::span<const double> x) {
            return std::abs(a * x[static_cast<std::size_t>(stage - 1)] + b) + c * stage;
          },
          1.0, objective, "separable"};
}

// Backward induction recording every node value, for dominance checks.
double envelope_values(const FiniteAdaptedProcess& proc, const PathPayoff& payoff, int node,
                       std::vector<double>& values) {
  const auto& n = proc.node(node);
  double value;
  if (n.children.empty()) {
    const auto h = proc.history(node);
    value = payoff.evaluate(n.stage, h);
  } else {
    double cont = 0.0;
    for (int c : n.children) cont += to_double(proc.node(c).mass) * envelope_values(proc, payoff, c, values);
    if (node == 0) {
      value = cont;
    } else {
      const auto h = proc.history(node);
      const double now = payoff.evaluate(n.stage, h);
      value = payoff.objective == Objective::sup ? std::max(now, cont) : std::min(now, cont);
    }
  }
  values[static_cast<std::size_t>(node)] = value;
  return value;
}

}  // namespace

TEST(Stopping, MartingaleExampleValues) {
  const PathPayoff coord = builtin_payoff("coordinate", {}, 2, 2.0);
  for (double eps : {0.1, 0.3}) {
    const auto [x, xe] = martingale_pair(eps);
    EXPECT_EQ(snell_value(x, coord), 0.0);
    EXPECT_NEAR(snell_value(xe, coord), 0.5 * (1.0 - eps), 1e-15);
  }
}

TEST(Stopping, ConstantProcess) {
  FiniteAdaptedProcess c(3);
  int n = 0;
  for (int s = 0; s < 3; ++s) n = c.add(n, 2.5, Rational(1));
  EXPECT_EQ(snell_value(c, builtin_payoff("coordinate", {}, 3, 1.0)), 2.5);
}

TEST(Stopping, BackwardInductionMatchesRuleEnumeration) {
  std::mt19937_64 rng(10);
  for (int rep = 0; rep < 200; ++rep) {
    const auto proc = oracle::small_tree(rng, 2);
    const auto payoff = random_separable_payoff(rng, rep % 2 ? Objective::sup : Objective::inf);
    EXPECT_NEAR(snell_value(proc, payoff), snell_value_by_enumeration(proc, payoff), 1e-12);
  }
  FiniteAdaptedProcess big(1);
  for (int i = 0; i < 9; ++i) big.add(0, i, Rational(1, 9));
  EXPECT_THROW(snell_value_by_enumeration(big, builtin_payoff("coordinate", {}, 1, 1.0)), Error);
}

TEST(Stopping, SupInfSignIdentity) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const auto proc = random_adapted_process(rng, {3, 3, 4, false, 2.0});
    PathPayoff up = random_separable_payoff(rng, Objective::sup);
    PathPayoff down = up;
    down.objective = Objective::inf;
    const auto f = up.evaluate;
    down.evaluate = [f](int k, std::span<const double> x) { return -f(k, x); };
    EXPECT_NEAR(snell_value(proc, up), -snell_value(proc, down), 1e-12);
  }
}

TEST(Stopping, EnvelopeDominatesImmediatePayoff) {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    const auto proc = random_adapted_process(rng, {3, 3, 4, false, 2.0});
    const auto payoff = random_separable_payoff(rng, Objective::sup);
    std::vector<double> values(proc.size());
    const double root = envelope_values(proc, payoff, 0, values);
    EXPECT_NEAR(root, snell_value(proc, payoff), 1e-12);
    for (std::size_t i = 1; i < proc.size(); ++i) {
      const auto h = proc.history(static_cast<int>(i));
      EXPECT_GE(values[i], payoff.evaluate(proc.node(static_cast<int>(i)).stage, h) - 1e-15);
    }
  }
}

TEST(Stopping, StabilityGapOnMartingalePair) {
  const auto [x, xe] = martingale_pair(0.1);
  const auto gap = stopping_stability_gap(x, xe, builtin_payoff("coordinate", {}, 2, 2.0), 2.0);
  EXPECT_NEAR(gap.lhs, 0.45, 1e-15);
  EXPECT_NEAR(gap.rhs, std::sqrt(2.01), 1e-12);
  EXPECT_LE(gap.lhs, gap.rhs);
  const auto same = stopping_stability_gap(x, x, builtin_payoff("asian", {}, 2, 2.0), 2.0);
  EXPECT_EQ(same.lhs, 0.0);
  EXPECT_EQ(same.rhs, 0.0);
}

TEST(Stopping, StabilityBoundOnRandomInstances) {
  const auto rows = stopping_sweep(100, 7, 2.0);
  ASSERT_EQ(rows.size(), 100u);
  for (const auto& r : rows) EXPECT_LE(r.lhs, r.rhs + 1e-9) << r.payoff;
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 100; ++rep) {
    const auto mu = oracle::small_tree(rng, 2);
    const auto nu = oracle::small_tree(rng, 2);
    const auto payoff = random_separable_payoff(rng, Objective::sup);
    for (double p : {1.0, 2.0}) {
      const auto gap = stopping_stability_gap(mu, nu, payoff, p);
      EXPECT_LE(gap.lhs, gap.rhs + 1e-9);
    }
  }
}

TEST(Stopping, AsianPayoff) {
  const auto asian = builtin_payoff("asian", {{"h", 0.5}, {"strike", 0.2}}, 3, 2.0);
  const std::vector<double> path{1.0, 2.0, -4.0};
  EXPECT_DOUBLE_EQ(asian.evaluate(2, std::span<const double>(path.data(), 2)), 1.3);
  EXPECT_EQ(asian.evaluate(3, path), 0.0);
  EXPECT_DOUBLE_EQ(asian.lipschitz, 0.5 * std::pow(3.0, 0.5));
  EXPECT_EQ(builtin_payoff("asian", {{"objective", 0.0}}, 3, 2.0).objective, Objective::inf);
  EXPECT_THROW(builtin_payoff("lookback", {}, 3, 2.0), Error);
}

TEST(Stopping, LipschitzFalsifier) {
  for (double p : {1.0, 2.0, 3.0}) {
    EXPECT_NO_THROW(falsify_payoff_lipschitz(builtin_payoff("asian", {{"h", 0.25}}, 4, p), 4, p, 5000, 1));
    EXPECT_NO_THROW(falsify_payoff_lipschitz(builtin_payoff("coordinate", {}, 4, p), 4, p, 5000, 1));
  }
  PathPayoff steep{[](int k, std::span<const double> x) { return 3.0 * x[static_cast<std::size_t>(k - 1)]; },
                   1.0, Objective::sup, "steep"};
  try {
    falsify_payoff_lipschitz(steep, 3, 2.0, 1000, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::configuration);
  }
}
