#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "awsde/models.hpp"
#include "awsde/tree.hpp"

namespace awsde {

enum class Objective { sup, inf };

// L(k, (x_1, ..., x_k)): the evaluator only ever sees the prefix up to the
// stopping stage, which makes the payoff adapted by construction.
struct PathPayoff {
  std::function<double(int stage, std::span<const double> prefix)> evaluate;
  double lipschitz;  // C_L with respect to the stagewise l^p norm
  Objective objective = Objective::sup;
  std::string name;
};

// coordinate: L(k, x) = x_k, C_L = 1.
// asian: L(k, x) = max(h sum_{j<=k} x_j - strike, 0), C_L = h n^{1 - 1/p}.
// Parameters: asian takes `h` (default 1/stages) and `strike` (default 0);
// both take `objective` (1 = sup, 0 = inf; default sup).
PathPayoff builtin_payoff(std::string_view name, const ModelParameters& params, int stages,
                          double p);

double snell_value(const FiniteAdaptedProcess& proc, const PathPayoff& payoff);

// Optimum over every adapted stopping rule, enumerated explicitly. Only for
// trees with at most 8 nodes (excluding the root).
double snell_value_by_enumeration(const FiniteAdaptedProcess& proc, const PathPayoff& payoff);

struct StabilityGap {
  double lhs;  // |v(mu) - v(nu)|
  double rhs;  // C_L AW_p(mu, nu)
};

StabilityGap stopping_stability_gap(const FiniteAdaptedProcess& mu,
                                    const FiniteAdaptedProcess& nu, const PathPayoff& payoff,
                                    double p);

// Samples random path pairs in [-radius, radius]^stages and throws a
// configuration error with the offending pair if the declared C_L is exceeded
// by more than 1%.
void falsify_payoff_lipschitz(const PathPayoff& payoff, int stages, double p, int samples,
                              std::uint64_t seed, double radius = 5.0);

}  // namespace awsde
